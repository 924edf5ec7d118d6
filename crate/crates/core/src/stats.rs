//! Estimators, confidence intervals and goodness-of-fit tests.

use crate::error::{Error, Result};

/// Monte Carlo estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateCI {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub seed: u64,
    /// Streams `stream_lo..stream_hi` produced the samples.
    pub stream_lo: u64,
    pub stream_hi: u64,
}

impl EstimateCI {
    /// An estimate known without error (e.g. closed form).
    pub fn exact(value: f64) -> Self {
        Self { mean: value, se: 0.0, n: 1, seed: 0, stream_lo: 0, stream_hi: 0 }
    }

    pub fn with_provenance(mut self, seed: u64, stream_lo: u64, stream_hi: u64) -> Self {
        self.seed = seed;
        self.stream_lo = stream_lo;
        self.stream_hi = stream_hi;
        self
    }

    pub fn lo(&self, k: f64) -> f64 {
        self.mean - k * self.se
    }

    pub fn hi(&self, k: f64) -> f64 {
        self.mean + k * self.se
    }

    /// Whether `value` lies within `k` standard errors.
    pub fn contains(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.se
    }

    /// Difference of two independent estimates.
    pub fn minus(&self, other: &EstimateCI) -> EstimateCI {
        EstimateCI {
            mean: self.mean - other.mean,
            se: self.se.hypot(other.se),
            n: self.n.min(other.n),
            seed: self.seed,
            stream_lo: self.stream_lo.min(other.stream_lo),
            stream_hi: self.stream_hi.max(other.stream_hi),
        }
    }

    pub fn scale(&self, c: f64) -> EstimateCI {
        EstimateCI { mean: c * self.mean, se: c.abs() * self.se, ..*self }
    }

    /// Distance of `value` from the mean in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.se == 0.0 {
            if self.mean == value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - value) / self.se
        }
    }
}

/// Error-free sum in double-double form (Knuth two-sum).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    #[inline]
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        self.hi = s;
        self.lo += err;
    }

    fn merge(&mut self, o: &DoubleDouble) {
        self.add(o.hi);
        self.lo += o.lo;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Streaming first and second moments. Sums are carried in double-double,
/// so accumulating halves and merging them reproduces the full-stream
/// result to well below double precision.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: usize,
    sum: DoubleDouble,
    sum_sq: DoubleDouble,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mean(&self) -> f64 {
        self.sum.value() / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        let v = (self.sum_sq.value() - n * m * m) / (n - 1.0);
        v.max(0.0)
    }

    pub fn estimate(&self) -> Result<EstimateCI> {
        if self.n < 2 {
            return Err(Error::TooFewSamples { need: 2, got: self.n });
        }
        let var = self.variance();
        Ok(EstimateCI {
            mean: self.mean(),
            se: (var / self.n as f64).sqrt(),
            n: self.n,
            seed: 0,
            stream_lo: 0,
            stream_hi: 0,
        })
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Sample mean and standard error `s / sqrt(n)`.
pub fn mean_ci(samples: &[f64]) -> Result<EstimateCI> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: samples.len() });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(EstimateCI {
        mean,
        se: (ss / (n - 1.0) / n).sqrt(),
        n: samples.len(),
        seed: 0,
        stream_lo: 0,
        stream_hi: 0,
    })
}

/// Sample variance with the large-sample standard error
/// `sqrt((m4 - s^4) / n)`, `m4` the fourth central moment.
pub fn variance_ci(samples: &[f64]) -> Result<EstimateCI> {
    if samples.len() < 4 {
        return Err(Error::TooFewSamples { need: 4, got: samples.len() });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in samples {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    let s2 = m2 / n;
    Ok(EstimateCI {
        mean: var,
        se: ((m4 - s2 * s2).max(0.0) / n).sqrt(),
        n: samples.len(),
        seed: 0,
        stream_lo: 0,
        stream_hi: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_pvalue(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample Kolmogorov-Smirnov test against `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut last = f64::NEG_INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) || f < last {
            return Err(Error::InvalidArgument(format!(
                "cdf is not monotone in [0, 1] near x = {x} (value {f})"
            )));
        }
        last = f;
        let i = i as f64;
        d = d.max((i + 1.0) / n - f).max(f - i / n);
    }
    Ok(KsResult { statistic: d, p_value: ks_pvalue(d, n) })
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_pvalue(d, na * nb / (na + nb)) })
}

/// Outcome of a sign test with a guard band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Guard {
    Above,
    Below,
    Contains,
}

/// Classify the mean of `samples` against `null_value` with a 3-SE band.
pub fn sign_test_with_guard(samples: &[f64], null_value: f64) -> Result<Guard> {
    if samples.len() < 30 {
        return Err(Error::TooFewSamples { need: 30, got: samples.len() });
    }
    Ok(guard(&mean_ci(samples)?, null_value, 3.0))
}

pub fn guard(est: &EstimateCI, null_value: f64, k: f64) -> Guard {
    if est.lo(k) > null_value {
        Guard::Above
    } else if est.hi(k) < null_value {
        Guard::Below
    } else {
        Guard::Contains
    }
}

/// Ordinary least-squares line with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::TooFewSamples { need: 3, got: n.min(y.len()) });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(LineFit { slope, intercept, slope_se: (rss / (nf - 2.0) / sxx).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn mean_ci_hand_values() {
        let e = mean_ci(&[3.0; 10]).unwrap();
        assert_eq!(e.se, 0.0);
        let e = mean_ci(&[0.0, 2.0]).unwrap();
        assert_eq!(e.mean, 1.0);
        assert!((e.se - 1.0).abs() < 1e-15);
        assert!(mean_ci(&[1.0]).is_err());
    }

    #[test]
    fn uniform_mean_within_band() {
        let mut r = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| r.uniform()).collect();
        let e = mean_ci(&xs).unwrap();
        let band = 3.0 * (1.0f64 / 12.0).sqrt() / (1e5f64).sqrt();
        assert!((e.mean - 0.5).abs() < band);
        // the reported SE agrees with the known variance
        assert!((e.se / ((1.0f64 / 12.0).sqrt() / 1e5f64.sqrt()) - 1.0).abs() < 0.02);
    }

    #[test]
    fn se_halves_when_n_quadruples() {
        let mut r = RngStream::new(5, 0);
        let xs: Vec<f64> = (0..40_000).map(|_| r.exp1()).collect();
        let a = mean_ci(&xs[..10_000]).unwrap();
        let b = mean_ci(&xs).unwrap();
        assert!((a.se / b.se / 2.0 - 1.0).abs() < 0.2);
    }

    #[test]
    fn accumulator_merge_matches_full() {
        let mut r = RngStream::new(9, 2);
        let xs: Vec<f64> = (0..5001).map(|_| r.exp1() * 1e3).collect();
        let full: Accumulator = xs.iter().copied().collect();
        let mut left: Accumulator = xs[..2000].iter().copied().collect();
        let right: Accumulator = xs[2000..].iter().copied().collect();
        left.merge(&right);
        let (a, b) = (full.estimate().unwrap(), left.estimate().unwrap());
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.se, b.se);
        let direct = mean_ci(&xs).unwrap();
        assert!((a.mean / direct.mean - 1.0).abs() < 1e-14);
        assert!((a.se / direct.se - 1.0).abs() < 1e-10);
    }

    #[test]
    fn variance_ci_normalish() {
        let mut r = RngStream::new(3, 1);
        let xs: Vec<f64> = (0..100_000).map(|_| r.exp1()).collect();
        let v = variance_ci(&xs).unwrap();
        // Exp(1): variance 1, m4 = 9, so se = sqrt(8 / n)
        assert!(v.contains(1.0, 3.0), "{v:?}");
        assert!((v.se / (8.0f64 / 1e5).sqrt() - 1.0).abs() < 0.1);
    }

    #[test]
    fn ks_null_calibration() {
        let mut rejections = 0;
        for rep in 0..100 {
            let mut r = RngStream::new(21, rep);
            let xs: Vec<f64> = (0..500).map(|_| r.uniform()).collect();
            let res = ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
            assert!((0.0..=1.0).contains(&res.p_value));
            assert!((0.0..=1.0).contains(&res.statistic));
            if res.p_value <= 0.01 {
                rejections += 1;
            }
        }
        assert!(rejections <= 5, "{rejections} rejections");
    }

    #[test]
    fn ks_detects_shift() {
        let mut r = RngStream::new(22, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| r.uniform()).collect();
        let res = ks_test(&xs, |x| (x - 0.05).clamp(0.0, 1.0)).unwrap();
        assert!(res.p_value < 0.01);
    }

    #[test]
    fn ks_rejects_non_monotone_cdf() {
        let xs = [0.1, 0.5, 0.9];
        assert!(ks_test(&xs, |x| 1.0 - x).is_err());
    }

    #[test]
    fn two_sample_ks() {
        let mut r = RngStream::new(23, 0);
        let a: Vec<f64> = (0..20_000).map(|_| r.exp1()).collect();
        let b: Vec<f64> = (0..20_000).map(|_| r.exp1()).collect();
        let c: Vec<f64> = (0..20_000).map(|_| 1.1 * r.exp1()).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 0.01);
    }

    #[test]
    fn kolmogorov_known_value() {
        // Q(1.36) is the classical 5% point
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn sign_test_branches() {
        let up: Vec<f64> = (0..50).map(|i| 1.0 + 0.01 * i as f64).collect();
        assert_eq!(sign_test_with_guard(&up, 0.0).unwrap(), Guard::Above);
        let down: Vec<f64> = up.iter().map(|x| -x).collect();
        assert_eq!(sign_test_with_guard(&down, 0.0).unwrap(), Guard::Below);
        let mixed: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(sign_test_with_guard(&mixed, 0.0).unwrap(), Guard::Contains);
        assert!(sign_test_with_guard(&up[..10], 0.0).is_err());
    }

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-12);
    }
}
