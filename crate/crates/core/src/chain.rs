//! The reflection chain: positions of successive returns into `D`.
//!
//! Started at `x0 > 0`, the `k`-th excursion leaves `D` at `-V_{k-1} s_k`,
//! holds there and jumps back to `V_k = V_{k-1} W_k`. All positions are
//! kept as logarithms, because products of a few hundred `W_k` leave the
//! range of a double for alpha away from 1.

use crate::analytic::{rho, Alpha};
use crate::error::{domain, Error, Result};
use crate::parallel::run_replicas;
use crate::rng::RngStream;
use crate::samplers::StableSampler;
use crate::stats::{guard, Accumulator, EstimateCI, Guard};

#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    pub x0: f64,
    /// For `x0 < 0`: the hold at `x0` and the return position it leads to.
    pub prelude: Option<(f64, f64)>,
    /// `ln W_k`, k = 1..=n.
    pub log_w: Vec<f64>,
    /// `ln V_k`, k = 1..=n.
    pub log_v: Vec<f64>,
    /// `ln |exit_k|` of the exit positions (all on the negative side).
    pub log_abs_exit: Vec<f64>,
    /// `ln hold_k`.
    pub log_hold: Vec<f64>,
}

impl ChainPath {
    pub fn n_reflections(&self) -> usize {
        self.log_w.len()
    }

    /// Starting point of the positive chain: `x0`, or the first return for
    /// a negative start.
    pub fn v0(&self) -> f64 {
        match self.prelude {
            Some((_, v)) => v,
            None => self.x0,
        }
    }

    pub fn v(&self, k: usize) -> f64 {
        if k == 0 {
            self.v0()
        } else {
            self.log_v[k - 1].exp()
        }
    }

    pub fn exit(&self, k: usize) -> f64 {
        -self.log_abs_exit[k - 1].exp()
    }

    pub fn hold(&self, k: usize) -> f64 {
        self.log_hold[k - 1].exp()
    }

    pub fn returns(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_v.iter().map(|l| l.exp())
    }
}

/// Simulate `n` reflections starting from `x0 != 0`.
pub fn simulate_chain(alpha: Alpha, x0: f64, n: usize, rng: &mut RngStream) -> Result<ChainPath> {
    simulate_chain_with(&StableSampler::new(alpha), x0, n, rng)
}

pub fn simulate_chain_with(s: &StableSampler, x0: f64, n: usize, rng: &mut RngStream) -> Result<ChainPath> {
    if x0 == 0.0 || !x0.is_finite() {
        return Err(domain("chain start must be a nonzero finite point"));
    }
    let a = s.alpha().value();
    let log_hold_scale = (a / s.amplitude()).ln();
    let mut path = ChainPath {
        x0,
        prelude: None,
        log_w: Vec::with_capacity(n),
        log_v: Vec::with_capacity(n),
        log_abs_exit: Vec::with_capacity(n),
        log_hold: Vec::with_capacity(n),
    };
    if x0 < 0.0 {
        let hold = s.hold(x0, rng);
        let back = s.return_jump(x0, rng);
        path.prelude = Some((hold, back));
    }
    let mut log_v = path.v0().ln();
    for _ in 0..n {
        let ln_s = s.poisson_ratio(rng).ln();
        let ln_abs_z = log_v + ln_s;
        // hold = E / rate with rate = A / alpha |z|^-alpha
        let ln_hold = rng.exp1().ln() + log_hold_scale + a * ln_abs_z;
        // return jump relative to |z|: U^(-1/alpha) - 1
        let ln_ratio = (-rng.uniform().ln() / a).exp_m1().ln();
        let ln_w = ln_s + ln_ratio;
        log_v += ln_w;
        path.log_w.push(ln_w);
        path.log_v.push(log_v);
        path.log_abs_exit.push(ln_abs_z);
        path.log_hold.push(ln_hold);
    }
    Ok(path)
}

/// Ensemble of independent chains, replica `i` on stream `stream_lo + i`.
pub fn simulate_ensemble(
    alpha: Alpha,
    x0: f64,
    n: usize,
    replicas: usize,
    seed: u64,
    stream_lo: u64,
) -> Result<Vec<ChainPath>> {
    let s = StableSampler::new(alpha);
    run_replicas(seed, stream_lo, replicas, |r| simulate_chain_with(&s, x0, n, r))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainLogStats {
    pub mean_ln_w: EstimateCI,
    pub var_ln_w: EstimateCI,
    /// `E W^((alpha - 1) / 2)`, to compare with `rho(alpha)`.
    pub mean_w_pow: EstimateCI,
}

/// Pooled statistics of all logged `ln W_k` across an ensemble.
pub fn chain_log_stats(alpha: Alpha, ensemble: &[ChainPath]) -> Result<ChainLogStats> {
    let total: usize = ensemble.iter().map(|p| p.log_w.len()).sum();
    if ensemble.is_empty() || total < 4 {
        return Err(Error::TooFewSamples { need: 4, got: total });
    }
    let e = 0.5 * (alpha.value() - 1.0);
    let mut lw = Accumulator::new();
    let mut pw = Accumulator::new();
    let (mut m2, mut m4) = (0.0, 0.0);
    for p in ensemble {
        for &l in &p.log_w {
            lw.push(l);
            pw.push((e * l).exp());
        }
    }
    let mean = lw.mean();
    for p in ensemble {
        for &l in &p.log_w {
            let d = (l - mean) * (l - mean);
            m2 += d;
            m4 += d * d;
        }
    }
    let n = total as f64;
    let var = m2 / (n - 1.0);
    let s2 = m2 / n;
    let var_se = ((m4 / n - s2 * s2).max(0.0) / n).sqrt();
    Ok(ChainLogStats {
        mean_ln_w: lw.estimate()?,
        var_ln_w: EstimateCI { mean: var, se: var_se, n: total, ..EstimateCI::exact(var) },
        mean_w_pow: pw.estimate()?,
    })
}

/// Slope of `ln V_n` per reflection across the ensemble, i.e. the mean of
/// `(ln V_n - ln V_0) / n`, one value per chain.
pub fn log_slope(ensemble: &[ChainPath]) -> Result<EstimateCI> {
    let mut acc = Accumulator::new();
    for p in ensemble {
        let n = p.n_reflections();
        if n == 0 {
            continue;
        }
        acc.push((p.log_v[n - 1] - p.v0().ln()) / n as f64);
    }
    acc.estimate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Drift {
    EscapesToInfinity,
    AbsorbedAtZero,
    Oscillates,
    /// The guard band contains 0 but is too wide to tell oscillation from
    /// a weak drift.
    Indeterminate,
}

/// Largest 3-SE half-width (in units of `ln W`) at which a band that
/// contains 0 still counts as oscillation.
pub const DRIFT_RESOLUTION: f64 = 0.05;

/// Decide the long-run behaviour from the sign of `E ln W`.
pub fn classify_drift(alpha: Alpha, ensemble: &[ChainPath]) -> Result<Drift> {
    if ensemble.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let shortest = ensemble.iter().map(|p| p.n_reflections()).min().unwrap_or(0);
    let stats = chain_log_stats(alpha, ensemble)?;
    Ok(match guard(&stats.mean_ln_w, 0.0, 3.0) {
        Guard::Above => Drift::EscapesToInfinity,
        Guard::Below => Drift::AbsorbedAtZero,
        Guard::Contains => {
            if shortest < 100 || 3.0 * stats.mean_ln_w.se > DRIFT_RESOLUTION {
                Drift::Indeterminate
            } else {
                Drift::Oscillates
            }
        }
    })
}

/// Analytic target for `mean_w_pow`.
pub fn w_pow_target(alpha: Alpha) -> f64 {
    rho(alpha)
}

/// CSV rows `replica,k,V_k,exit_k,hold_k` for an ensemble (no header).
pub fn ensemble_csv_rows(ensemble: &[ChainPath]) -> String {
    let mut out = String::new();
    for (i, p) in ensemble.iter().enumerate() {
        for k in 1..=p.n_reflections() {
            out.push_str(&format!("{},{},{:.17e},{:.17e},{:.17e}\n", i, k, p.v(k), p.exit(k), p.hold(k)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_consistency() {
        let a = Alpha::new(1.3).unwrap();
        let mut r = RngStream::new(4, 0);
        let p = simulate_chain(a, 2.5, 50, &mut r).unwrap();
        let mut v = 2.5f64;
        for k in 1..=50 {
            v *= p.log_w[k - 1].exp();
            assert!((v / p.v(k) - 1.0).abs() < 1e-12);
            assert!(p.v(k) > 0.0 && p.exit(k) < 0.0 && p.hold(k) > 0.0);
        }
    }

    #[test]
    fn empty_chain() {
        let a = Alpha::new(0.5).unwrap();
        let p = simulate_chain(a, 1.0, 0, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(p.n_reflections(), 0);
        assert_eq!(p.v(0), 1.0);
        assert!(simulate_chain(a, 0.0, 3, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn negative_start_prepends_hold() {
        let a = Alpha::new(1.5).unwrap();
        let p = simulate_chain(a, -2.0, 3, &mut RngStream::new(1, 1)).unwrap();
        let (hold, back) = p.prelude.unwrap();
        assert!(hold > 0.0 && back > 0.0);
        assert_eq!(p.v(0), back);
    }

    #[test]
    fn log_domain_survives_extreme_alpha() {
        let a = Alpha::new(1.9).unwrap();
        let p = simulate_chain(a, 1.0, 500, &mut RngStream::new(2, 0)).unwrap();
        assert!(p.log_v.iter().all(|l| l.is_finite()));
        assert!(p.log_v[499] < -1000.0);
    }
}
