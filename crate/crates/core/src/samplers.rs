//! Exact samplers for the laws that have closed forms.
//!
//! * symmetric stable increments (Chambers-Mallows-Stuck, Cauchy at alpha = 1)
//! * the landing point on leaving `D` (half-line Poisson kernel)
//! * the landing point on leaving a ball (same one-parameter law)
//! * return jumps from `z < 0` back into `D` and the hold before them

use std::f64::consts::PI;

use crate::analytic::{halfline_mass_unchecked, stable_constant, Alpha};
use crate::error::{domain, Result};
use crate::rng::RngStream;

/// Per-alpha constants shared by all samplers.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: Alpha,
    a: f64,
    inv_a: f64,
    amp: f64,
    /// Probability of the `(0, 1]` envelope piece in the Poisson sampler.
    p_low: f64,
    low_exp: f64,
    high_exp: f64,
}

impl StableSampler {
    pub fn new(alpha: Alpha) -> Self {
        let a = alpha.value();
        let m_low = 1.0 / (1.0 - 0.5 * a);
        let m_high = 2.0 / a;
        Self {
            alpha,
            a,
            inv_a: 1.0 / a,
            amp: stable_constant(alpha),
            p_low: m_low / (m_low + m_high),
            low_exp: 1.0 / (1.0 - 0.5 * a),
            high_exp: -2.0 / a,
        }
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// `A_{1,alpha}`.
    pub fn amplitude(&self) -> f64 {
        self.amp
    }

    /// Standard symmetric stable variable with characteristic function
    /// `exp(-|xi|^alpha)`.
    #[inline]
    pub fn standard(&self, rng: &mut RngStream) -> f64 {
        let v = PI * (rng.uniform() - 0.5);
        if self.a == 1.0 {
            return v.tan();
        }
        let e = rng.exp1();
        let a = self.a;
        let cv = v.cos();
        (a * v).sin() / cv.powf(self.inv_a) * (((1.0 - a) * v).cos() / e).powf((1.0 - a) * self.inv_a)
    }

    /// Increment of the process over a time step `dt`.
    #[inline]
    pub fn increment(&self, dt: f64, rng: &mut RngStream) -> f64 {
        dt.powf(self.inv_a) * self.standard(rng)
    }

    /// Draw `s = |y| / x` for the landing point `y` on leaving `D` from `x`.
    /// Its density is `sin(pi alpha / 2) / pi * s^(-alpha/2) / (1 + s)`.
    #[inline]
    pub fn poisson_ratio(&self, rng: &mut RngStream) -> f64 {
        loop {
            let pick = rng.uniform();
            let u = rng.uniform();
            let acc = rng.uniform();
            let s = if pick < self.p_low {
                let s = u.powf(self.low_exp);
                if acc * (1.0 + s) > 1.0 {
                    continue;
                }
                s
            } else {
                let s = u.powf(self.high_exp);
                if acc * (1.0 + s) > s {
                    continue;
                }
                s
            };
            if s > 0.0 && s.is_finite() {
                return s;
            }
        }
    }

    /// Landing point in `D^c` of the process started at `x > 0`.
    #[inline]
    pub fn exit_position(&self, x: f64, rng: &mut RngStream) -> f64 {
        -x * self.poisson_ratio(rng)
    }

    /// Landing point on leaving the ball `B(x, r)`.
    #[inline]
    pub fn ball_exit(&self, x: f64, r: f64, rng: &mut RngStream) -> f64 {
        let q = self.poisson_ratio(rng);
        let d = r * (1.0 + q).sqrt();
        if rng.next_u64() & 1 == 0 {
            x + d
        } else {
            x - d
        }
    }

    /// Return jump `w > 0` from `z < 0`, density `alpha |z|^alpha (w + |z|)^(-1-alpha)`.
    #[inline]
    pub fn return_jump(&self, z: f64, rng: &mut RngStream) -> f64 {
        return_jump_from_uniform_unchecked(self.inv_a, z, rng.uniform())
    }

    /// Hold at `z < 0`: exponential with rate `nu(z, D)`.
    #[inline]
    pub fn hold(&self, z: f64, rng: &mut RngStream) -> f64 {
        rng.exp1() / halfline_mass_unchecked(self.a, self.amp, z)
    }

    /// Rate `nu(z, D)` (or `nu(z, D^c)` for `z > 0`).
    #[inline]
    pub fn halfline_rate(&self, z: f64) -> f64 {
        halfline_mass_unchecked(self.a, self.amp, z)
    }

    /// One reflection ratio `W`: exit from 1, then return.
    #[inline]
    pub fn w(&self, rng: &mut RngStream) -> f64 {
        let s = self.poisson_ratio(rng);
        self.return_jump(-s, rng)
    }
}

#[inline]
fn return_jump_from_uniform_unchecked(inv_a: f64, z: f64, u: f64) -> f64 {
    // |z| (u^(-1/alpha) - 1), written to stay accurate for u near 1
    -z * (-u.ln() * inv_a).exp_m1()
}

/// Inverse survival function of the return jump: `w = |z| (u^(-1/alpha) - 1)`.
pub fn return_jump_from_uniform(alpha: Alpha, z: f64, u: f64) -> Result<f64> {
    if !(z < 0.0) {
        return Err(domain("return jumps start from z < 0"));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(domain("u must lie in (0, 1)"));
    }
    Ok(return_jump_from_uniform_unchecked(1.0 / alpha.value(), z, u))
}

pub fn stable_increment(alpha: Alpha, dt: f64, rng: &mut RngStream) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(domain("time step must be positive"));
    }
    Ok(StableSampler::new(alpha).increment(dt, rng))
}

pub fn sample_exit_position(alpha: Alpha, x: f64, rng: &mut RngStream) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain("exit from D needs x > 0"));
    }
    Ok(StableSampler::new(alpha).exit_position(x, rng))
}

pub fn sample_return_jump(alpha: Alpha, z: f64, rng: &mut RngStream) -> Result<f64> {
    if !(z < 0.0) {
        return Err(domain("return jumps start from z < 0"));
    }
    Ok(StableSampler::new(alpha).return_jump(z, rng))
}

pub fn sample_hold(alpha: Alpha, z: f64, rng: &mut RngStream) -> Result<f64> {
    if !(z < 0.0) {
        return Err(domain("holds happen at z < 0"));
    }
    Ok(StableSampler::new(alpha).hold(z, rng))
}

#[allow(non_snake_case)]
pub fn sample_W(alpha: Alpha, rng: &mut RngStream) -> f64 {
    StableSampler::new(alpha).w(rng)
}

/// Survival function of the return jump, `(|z| / (w + |z|))^alpha`.
pub fn return_jump_survival(alpha: Alpha, z: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return 1.0;
    }
    (-z / (w - z)).powf(alpha.value())
}

