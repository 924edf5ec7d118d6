//! Truncated Taylor series ("jets") in one variable.
//!
//! `Jet<N>` holds the coefficients `c_k = f^(k)(x0) / k!` for `k < N`.
//! Arithmetic propagates them exactly, which gives derivatives of the bump
//! and power test functions without finite differences.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize>(pub [f64; N]);

impl<const N: usize> Jet<N> {
    pub fn constant(c: f64) -> Self {
        let mut a = [0.0; N];
        a[0] = c;
        Jet(a)
    }

    /// The identity `x0 + h` expanded at `x0`, scaled: `value + slope * h`.
    pub fn linear(value: f64, slope: f64) -> Self {
        let mut a = [0.0; N];
        a[0] = value;
        if N > 1 {
            a[1] = slope;
        }
        Jet(a)
    }

    pub fn zero() -> Self {
        Jet([0.0; N])
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.0[k] * fact
    }

    pub fn scale(mut self, s: f64) -> Self {
        for c in &mut self.0 {
            *c *= s;
        }
        self
    }

    pub fn exp(&self) -> Self {
        let a = &self.0;
        let mut b = [0.0; N];
        b[0] = a[0].exp();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * a[j] * b[k - j];
            }
            b[k] = s / k as f64;
        }
        Jet(b)
    }

    pub fn ln(&self) -> Self {
        let a = &self.0;
        let mut b = [0.0; N];
        b[0] = a[0].ln();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * b[j] * a[k - j];
            }
            b[k] = (a[k] - s / k as f64) / a[0];
        }
        Jet(b)
    }

    pub fn recip(&self) -> Self {
        let a = &self.0;
        let mut b = [0.0; N];
        b[0] = 1.0 / a[0];
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += a[j] * b[k - j];
            }
            b[k] = -s / a[0];
        }
        Jet(b)
    }

    /// `self^p` for a positive leading coefficient.
    pub fn powf(&self, p: f64) -> Self {
        self.ln().scale(p).exp()
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N {
            if self.0[i] == 0.0 {
                continue;
            }
            for j in 0..N - i {
                c[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(c)
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.0[0] += c;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_linear_matches_series() {
        let j = Jet::<8>::linear(0.3, 2.0).exp();
        let mut fact = 1.0;
        for k in 0..8 {
            if k > 0 {
                fact *= k as f64;
            }
            let expect = 0.3f64.exp() * 2f64.powi(k as i32) / fact;
            assert!((j.0[k] - expect).abs() < 1e-14 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn ln_and_recip_invert() {
        let x = Jet::<10>([1.5, -0.3, 0.2, 0.1, 0.0, 0.05, 0.0, 0.0, 0.0, 0.01]);
        let round = x.ln().exp();
        let one = x * x.recip();
        for k in 0..10 {
            assert!((round.0[k] - x.0[k]).abs() < 1e-13);
            let target = if k == 0 { 1.0 } else { 0.0 };
            assert!((one.0[k] - target).abs() < 1e-13);
        }
    }

    #[test]
    fn power_derivatives() {
        // d^k/dx^k x^p at x = 2
        let p = 0.7;
        let j = Jet::<5>::linear(2.0, 1.0).powf(p);
        let d3 = p * (p - 1.0) * (p - 2.0) * 2f64.powf(p - 3.0);
        assert!((j.derivative(3) - d3).abs() < 1e-13);
    }
}
