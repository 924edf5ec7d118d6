//! Double-exponential (tanh-sinh) quadrature.
//!
//! Integrands receive the abscissa together with its distances to both
//! endpoints, computed without cancellation, so factors such as
//! `(1 - t)^(-a)` can be evaluated accurately right up to the boundary.

use std::f64::consts::FRAC_PI_2;

/// Largest transformed abscissa. Beyond it the nodes sit closer to the
/// endpoints than the smallest normal double.
const T_MAX: f64 = 6.5;

#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_level: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOutput {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-13, max_level: 9 }
    }
}

impl TanhSinh {
    pub fn with_tol(tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, ..Self::default() }
    }

    /// Integrate from `a` to `b`. With `lo = min(a, b)` and `hi = max(a, b)`
    /// the closure is called as `f(x, x - lo, hi - x)`.
    pub fn integrate<F>(&self, a: f64, b: f64, f: F) -> QuadOutput
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        if a == b {
            return QuadOutput { value: 0.0, error: 0.0, evals: 0, converged: true };
        }
        if b < a {
            let mut out = self.integrate_sorted(b, a, f);
            out.value = -out.value;
            return out;
        }
        self.integrate_sorted(a, b, f)
    }

    fn integrate_sorted<F>(&self, a: f64, b: f64, mut f: F) -> QuadOutput
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        let width = b - a;
        let mut evals = 1usize;
        let mut node = |t: f64, f: &mut F| -> f64 {
            // d is the distance of the node to the nearer endpoint on [0, 1].
            let u = FRAC_PI_2 * t.sinh();
            let e = (2.0 * u).exp();
            let d = 1.0 / (1.0 + e);
            let w = std::f64::consts::PI * t.cosh() * d * (1.0 - d);
            if d == 0.0 || w == 0.0 {
                return 0.0;
            }
            let near = width * d;
            let far = width * (1.0 - d);
            evals += 2;
            let right = f(b - near, far, near);
            let left = f(a + near, near, far);
            w * (right + left)
        };

        let mut h = 1.0;
        let mut sum = FRAC_PI_2 * 0.5 * f(a + 0.5 * width, 0.5 * width, 0.5 * width);
        let mut j = 1;
        loop {
            let t = j as f64 * h;
            if t > T_MAX {
                break;
            }
            sum += node(t, &mut f);
            j += 1;
        }
        let mut prev = sum * h * width;
        let mut error = f64::INFINITY;
        let mut converged = false;
        for level in 1..=self.max_level {
            h *= 0.5;
            let mut j = 1;
            loop {
                let t = j as f64 * h;
                if t > T_MAX {
                    break;
                }
                sum += node(t, &mut f);
                j += 2;
            }
            let cur = sum * h * width;
            error = (cur - prev).abs();
            prev = cur;
            if !cur.is_finite() {
                break;
            }
            if level >= 3 && error <= self.abs_tol.max(self.rel_tol * cur.abs()) {
                converged = true;
                break;
            }
        }
        QuadOutput { value: prev, error, evals, converged }
    }

    /// Integrate `g` over `[m, inf)` through `y = m / v`, `v` in `(0, 1]`.
    pub fn integrate_tail<G>(&self, m: f64, mut g: G) -> QuadOutput
    where
        G: FnMut(f64) -> f64,
    {
        assert!(m > 0.0, "tail start must be positive");
        self.integrate(0.0, 1.0, |v, _, _| {
            if v == 0.0 {
                return 0.0;
            }
            let y = m / v;
            let val = g(y);
            if val == 0.0 {
                0.0
            } else {
                val * (m / v) / v
            }
        })
    }

    /// Sum of integrals over consecutive intervals of `breaks`, which must be
    /// sorted. Errors and evaluation counts are accumulated.
    pub fn integrate_pieces<F>(&self, breaks: &[f64], mut f: F) -> QuadOutput
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        let mut total = QuadOutput { value: 0.0, error: 0.0, evals: 0, converged: true };
        for w in breaks.windows(2) {
            let out = self.integrate(w[0], w[1], &mut f);
            total.value += out.value;
            total.error += out.error;
            total.evals += out.evals;
            total.converged &= out.converged;
        }
        total
    }
}
