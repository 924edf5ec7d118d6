//! Green operator, λ-potentials and the nonlocal Neumann problem.
//!
//! Potentials are estimated path by path. By scaling, the process from
//! `k x` is `k X_{t / k^alpha}` for the process `X` from `x`, so one
//! recorded path from `±1` gives a sample of
//! `U_lambda f(k x) = k^alpha E int e^(-lambda k^alpha s) f(k X_s) ds`
//! at every dilation `k` at once. Estimates at several points that come
//! from the same paths are correlated, so functionals of several points
//! (Dynkin quotients, quadratures) are formed per path and their standard
//! errors are exact.
//!
//! Inside `D` the path walks with the step policy while some dilation of
//! `f` is nearby; elsewhere it jumps straight to the exit of the largest
//! ball that avoids `0` and the dilated support, which is exact in law
//! because `f` vanishes on that ball. Holds contribute exactly. A path is
//! stopped once a bound on everything it could still collect drops below
//! a fixed fraction of the natural scale of the potential; the bound comes
//! from `G h_(beta - alpha) <= h_beta / (A M(alpha, beta))`.

use crate::analytic::{boundary_constant, mean_ball_exit_time, nu_halfline_mass, stable_constant, Alpha};
use crate::error::{domain, Error, Result};
use crate::numerics::TanhSinh;
use crate::parallel::run_replicas;
use crate::quadrature::nonlocal_normal_derivative;
use crate::rng::RngStream;
use crate::samplers::StableSampler;
use crate::stats::{Accumulator, EstimateCI};
use crate::testfn::{Evaluable, TestFunction};
use crate::walk::StepPolicy;

/// Paths stop once the tail bound is below this fraction of the scale
/// `||f|| R^alpha` (or `||f|| min(R^alpha, 1 / lambda)` for `lambda > 0`).
pub const TAIL_REL: f64 = 1e-3;

/// Balls are used only when their radius is at least this fraction of the
/// current position.
const BALL_RATIO: f64 = 0.1;

/// For `lambda > 0` a ball advances the clock by its mean exit time; it is
/// used only when the discount rate times that mean stays below this.
const BALL_CLOCK: f64 = 1e-3;

/// Walk steps between tail checks inside `D`.
const CHECK_EVERY: usize = 4096;

const BETA_GRID: usize = 12;

/// Offsets separating the sub-streams used within one replica.
const MINUS_STREAM: u64 = 1 << 40;

/// Stream block width reserved per report point.
const POINT_STRIDE: u64 = 1 << 32;

/// Monte Carlo `U_lambda f(x)` (`lambda = 0` is the Green operator).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialEstimate {
    pub x: f64,
    pub value: EstimateCI,
    pub lambda: f64,
    pub f: TestFunction,
    /// Mean over replicas of the bound on what truncation discarded.
    pub truncation_bound: f64,
}

/// Bound on `U_lambda |f|` from `h_beta` domination, minimised over a
/// grid of admissible `beta`.
#[derive(Debug, Clone)]
struct TailBound {
    terms: Vec<(f64, f64)>,
}

impl TailBound {
    fn new(alpha: Alpha, f_sup: f64, radius: f64) -> Result<Self> {
        let a = alpha.value();
        let amp = stable_constant(alpha);
        let mut terms = Vec::with_capacity(BETA_GRID);
        for j in 1..=BETA_GRID {
            let beta = (a - 1.0) * j as f64 / (BETA_GRID + 1) as f64;
            let m = boundary_constant(alpha, beta)?;
            if m > 0.0 {
                terms.push((beta, f_sup * radius.powf(a - beta) / (amp * m)));
            }
        }
        Ok(Self { terms })
    }

    /// Bound on `G |f|` at a point at distance `w` from 0.
    fn at(&self, w: f64) -> f64 {
        self.terms.iter().fold(f64::INFINITY, |m, &(beta, c)| m.min(c * w.powf(beta)))
    }
}

/// One point mass of the occupation measure: `coef f(k x)` over the time
/// interval `[t, t + dur]` of the base path.
#[derive(Debug, Clone, Copy)]
struct Mass {
    x: f64,
    t: f64,
    dur: f64,
    coef: f64,
}

#[derive(Debug, Clone)]
struct Path {
    masses: Vec<Mass>,
    bound: f64,
}

/// Everything needed to run base paths for `f`, `lambda` and dilations in
/// `[k_lo, k_hi]`.
struct Potential<'a> {
    s: StableSampler,
    a: f64,
    f: &'a TestFunction,
    supp: Vec<(f64, f64)>,
    f_sup: f64,
    lambda: f64,
    policy: StepPolicy,
    k_lo: f64,
    k_hi: f64,
    checks: Vec<f64>,
    tail: TailBound,
    stop: f64,
    tau_unit: f64,
}

impl<'a> Potential<'a> {
    fn new(alpha: Alpha, f: &'a TestFunction, lambda: f64, k_lo: f64, k_hi: f64, policy: &StepPolicy) -> Result<Self> {
        if alpha.is_critical() {
            return Err(domain("potentials need alpha != 1"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(domain("lambda must be finite and >= 0"));
        }
        if !(k_lo > 0.0 && k_lo <= k_hi && k_hi.is_finite()) {
            return Err(domain("dilation range must satisfy 0 < k_lo <= k_hi"));
        }
        let supp = f.support().ok_or_else(|| domain("f must have compact support"))?;
        let f_sup = f.sup_abs().ok_or_else(|| domain("f must be bounded"))?;
        if lambda == 0.0 && !f.avoids_origin() {
            return Err(domain("the Green operator needs supp f away from 0"));
        }
        let a = alpha.value();
        let radius = supp.iter().fold(0.0, |m: f64, &(lo, hi)| m.max(lo.abs()).max(hi.abs()));
        let scale = if lambda > 0.0 { radius.powf(a).min(1.0 / lambda) } else { radius.powf(a) };
        let n = if k_lo == k_hi { 1 } else { 17 };
        let checks = (0..n)
            .map(|i| if n == 1 { k_lo } else { k_lo * (k_hi / k_lo).powf(i as f64 / (n - 1) as f64) })
            .collect();
        Ok(Self {
            s: StableSampler::new(alpha),
            a,
            f,
            supp,
            f_sup,
            lambda,
            policy: *policy,
            k_lo,
            k_hi,
            checks,
            tail: TailBound::new(alpha, f_sup.max(f64::MIN_POSITIVE), radius)?,
            stop: TAIL_REL * f_sup * scale,
            tau_unit: mean_ball_exit_time(alpha, 1.0),
        })
    }

    fn time_bound(&self, k: f64, t: f64) -> f64 {
        if self.lambda > 0.0 {
            self.f_sup / self.lambda * (-self.lambda * k.powf(self.a) * t).exp()
        } else {
            f64::INFINITY
        }
    }

    /// Bound on what a path at `(z, t)` can still collect at any dilation.
    fn bound(&self, z: f64, t: f64) -> f64 {
        self.checks
            .iter()
            .fold(0.0, |m: f64, &k| m.max(self.time_bound(k, t).min(self.tail.at(k * z.abs()))))
    }

    /// Largest dilation whose discounted contribution can still matter.
    fn active_k_hi(&self, t: f64) -> f64 {
        if self.lambda == 0.0 || t <= 0.0 {
            return self.k_hi;
        }
        let l = (self.f_sup / (self.lambda * self.stop)).ln();
        if l <= 0.0 {
            return self.k_lo;
        }
        (l / (self.lambda * t)).powf(1.0 / self.a).clamp(self.k_lo, self.k_hi)
    }

    /// Distance from `x > 0` to the part of `D` where a dilation in
    /// `[k_lo, k_hi]` of `f` is nonzero.
    fn gap(&self, x: f64, k_hi: f64) -> f64 {
        let mut gap = f64::INFINITY;
        for &(lo, hi) in &self.supp {
            if hi <= 0.0 {
                continue;
            }
            let (blo, bhi) = (lo.max(0.0) / k_hi, hi / self.k_lo);
            let d = if x < blo {
                blo - x
            } else if x > bhi {
                x - bhi
            } else {
                0.0
            };
            gap = gap.min(d);
        }
        gap
    }

    /// Dilations `k` with `k x` in the support interval `(lo, hi)`.
    fn k_range(x: f64, lo: f64, hi: f64) -> (f64, f64) {
        if x > 0.0 {
            (lo / x, hi / x)
        } else {
            (hi / x, lo / x)
        }
    }

    fn sees(&self, x: f64) -> bool {
        self.supp.iter().any(|&(lo, hi)| {
            let (a, b) = Self::k_range(x, lo, hi);
            a <= self.k_hi && b >= self.k_lo
        })
    }

    fn record(&self, masses: &mut Vec<Mass>, x: f64, t: f64, dur: f64, coef: f64) {
        if self.sees(x) {
            masses.push(Mass { x, t, dur, coef });
        }
    }

    fn path(&self, x0: f64, rng: &mut RngStream) -> Result<Path> {
        let mut masses = Vec::new();
        if self.f_sup == 0.0 {
            return Ok(Path { masses, bound: 0.0 });
        }
        let (mut x, mut t) = (x0, 0.0);
        let mut steps = 0usize;
        let mut since_check = 0usize;
        loop {
            if x > 0.0 {
                if since_check >= CHECK_EVERY {
                    since_check = 0;
                    let b = self.bound(x, t);
                    if b < self.stop {
                        return Ok(Path { masses, bound: b });
                    }
                }
                if steps >= self.policy.max_steps {
                    return Err(Error::StepCap { steps });
                }
                steps += 1;
                since_check += 1;
                let k_act = self.active_k_hi(t);
                let r = x.min(self.gap(x, k_act));
                if r >= BALL_RATIO * x {
                    let tau = self.tau_unit * r.powf(self.a);
                    if self.lambda == 0.0 || self.lambda * k_act.powf(self.a) * tau <= BALL_CLOCK {
                        t += tau;
                        x = self.s.ball_exit(x, r, rng);
                        continue;
                    }
                }
                let dt = (self.policy.c_step * x.powf(self.a)).min(self.policy.dt_max);
                let x1 = x + self.s.increment(dt, rng);
                if x1 > 0.0 {
                    self.record(&mut masses, x, t, dt, 0.5);
                    self.record(&mut masses, x1, t, dt, 0.5);
                } else {
                    self.record(&mut masses, x, t, dt, 1.0);
                }
                t += dt;
                x = x1;
            } else if x < 0.0 {
                let b = self.bound(x, t);
                if b < self.stop {
                    return Ok(Path { masses, bound: b });
                }
                // without discounting only the mean hold matters
                let h = if self.lambda == 0.0 { 1.0 / self.s.halfline_rate(x) } else { self.s.hold(x, rng) };
                self.record(&mut masses, x, t, h, 1.0);
                t += h;
                x = self.s.return_jump(x, rng);
            } else {
                // a null event; nothing more is collected from 0
                return Ok(Path { masses, bound: 0.0 });
            }
        }
    }

    /// Time weight of a mass at dilation `k` with `ka = k^alpha`, before
    /// the common factor (`k^alpha` for `lambda = 0`, `1 / lambda` else).
    #[inline]
    fn weight(&self, m: &Mass, ka: f64) -> f64 {
        if self.lambda == 0.0 {
            m.dur
        } else {
            let mu = self.lambda * ka;
            (-mu * m.t).exp() * -(-mu * m.dur).exp_m1()
        }
    }

    #[inline]
    fn finish(&self, acc: f64, ka: f64) -> f64 {
        if self.lambda == 0.0 {
            acc * ka
        } else {
            acc / self.lambda
        }
    }

    /// The path's sample of `U_lambda f(k x0)`.
    fn value(&self, p: &Path, k: f64) -> f64 {
        let ka = k.powf(self.a);
        let acc: f64 = p
            .masses
            .iter()
            .map(|m| {
                let v = self.f.eval(k * m.x);
                if v == 0.0 {
                    0.0
                } else {
                    m.coef * v * self.weight(m, ka)
                }
            })
            .sum();
        self.finish(acc, ka)
    }

    /// Samples at every `k` of the ascending list `ks`.
    fn values(&self, p: &Path, ks: &[f64]) -> Vec<f64> {
        let kas: Vec<f64> = ks.iter().map(|k| k.powf(self.a)).collect();
        let mut acc = vec![0.0; ks.len()];
        for m in &p.masses {
            for &(lo, hi) in &self.supp {
                let (a, b) = Self::k_range(m.x, lo, hi);
                let i0 = ks.partition_point(|&k| k < a);
                let i1 = ks.partition_point(|&k| k <= b);
                for i in i0..i1 {
                    let v = self.f.eval(ks[i] * m.x);
                    if v != 0.0 {
                        acc[i] += m.coef * v * self.weight(m, kas[i]);
                    }
                }
            }
        }
        acc.iter().zip(&kas).map(|(&v, &ka)| self.finish(v, ka)).collect()
    }
}

fn check_point(x: f64) -> Result<()> {
    if x == 0.0 || !x.is_finite() {
        return Err(domain("potentials are evaluated at finite x != 0"));
    }
    Ok(())
}

fn potential_apply(
    alpha: Alpha,
    f: &TestFunction,
    lambda: f64,
    x: f64,
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<PotentialEstimate> {
    check_point(x)?;
    let k = x.abs();
    let pot = Potential::new(alpha, f, lambda, k, k, policy)?;
    let start = x.signum();
    let out: Result<Vec<(f64, f64)>> = run_replicas(seed, stream_lo, replicas, |r| {
        let p = pot.path(start, r)?;
        Ok((pot.value(&p, k), p.bound))
    })
    .into_iter()
    .collect();
    let out = out?;
    let acc: Accumulator = out.iter().map(|o| o.0).collect();
    let bound = out.iter().map(|o| o.1).sum::<f64>() / out.len() as f64;
    Ok(PotentialEstimate {
        x,
        value: acc.estimate()?.with_provenance(seed, stream_lo, stream_lo + replicas as u64),
        lambda,
        f: f.clone(),
        truncation_bound: bound,
    })
}

/// Monte Carlo `G f(x) = E_x int_0^inf f(X_t) dt`.
pub fn green_apply(
    alpha: Alpha,
    f: &TestFunction,
    x: f64,
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<PotentialEstimate> {
    potential_apply(alpha, f, 0.0, x, replicas, policy, seed, stream_lo)
}

/// Monte Carlo `U_lambda f(x) = E_x int_0^inf e^(-lambda t) f(X_t) dt`.
#[allow(clippy::too_many_arguments)]
pub fn lambda_potential(
    alpha: Alpha,
    f: &TestFunction,
    lambda: f64,
    x: f64,
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<PotentialEstimate> {
    if !(lambda > 0.0) {
        return Err(domain("lambda potential needs lambda > 0"));
    }
    potential_apply(alpha, f, lambda, x, replicas, policy, seed, stream_lo)
}

/// Grid of Monte Carlo values, linearly interpolated and held constant
/// beyond its ends.
#[derive(Debug, Clone, PartialEq)]
pub struct McGrid {
    pub xs: Vec<f64>,
    pub values: Vec<EstimateCI>,
}

impl McGrid {
    pub fn new(xs: Vec<f64>, values: Vec<EstimateCI>) -> Result<Self> {
        if xs.is_empty() || xs.len() != values.len() || xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain("grid needs strictly increasing points with one value each"));
        }
        Ok(Self { xs, values })
    }

    /// Interpolation weights `(index, weight)` of the point `x`.
    pub fn weights(&self, x: f64) -> [(usize, f64); 2] {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return [(0, 1.0), (0, 0.0)];
        }
        if x >= self.xs[n - 1] {
            return [(n - 1, 1.0), (n - 1, 0.0)];
        }
        let i = self.xs.partition_point(|&p| p <= x) - 1;
        let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        [(i, 1.0 - w), (i + 1, w)]
    }
}

impl Evaluable for McGrid {
    fn eval(&self, x: f64) -> f64 {
        self.weights(x).iter().map(|&(i, w)| w * self.values[i].mean).sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.xs.clone()
    }
}

/// Split the ascending grid `xs` by sign into dilations of `-1` and `+1`.
fn split_by_sign(xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut neg: Vec<f64> = xs.iter().filter(|&&x| x < 0.0).map(|x| -x).collect();
    neg.reverse();
    let pos = xs.iter().copied().filter(|&x| x > 0.0).collect();
    (neg, pos)
}

/// Per-replica samples of `U_lambda f` at every grid point, all from the
/// pair of base paths of that replica.
fn grid_samples(
    alpha: Alpha,
    f: &TestFunction,
    lambda: f64,
    xs: &[f64],
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<Vec<Vec<f64>>> {
    if xs.iter().any(|&x| x == 0.0 || !x.is_finite()) || xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain("grid must be strictly increasing, finite and avoid 0"));
    }
    let (neg, pos) = split_by_sign(xs);
    let make = |ks: &[f64]| -> Result<Option<Potential>> {
        if ks.is_empty() {
            Ok(None)
        } else {
            Potential::new(alpha, f, lambda, ks[0], ks[ks.len() - 1], policy).map(Some)
        }
    };
    let (pn, pp) = (make(&neg)?, make(&pos)?);
    run_replicas(seed, stream_lo, replicas, |r| {
        let mut row = Vec::with_capacity(xs.len());
        if let Some(p) = &pn {
            let mut rm = RngStream::new(seed, r.stream_id() + MINUS_STREAM);
            let mut v = p.values(&p.path(-1.0, &mut rm)?, &neg);
            v.reverse();
            row.extend(v);
        }
        if let Some(p) = &pp {
            row.extend(p.values(&p.path(1.0, r)?, &pos));
        }
        Ok(row)
    })
    .into_iter()
    .collect()
}

fn column_estimates(rows: &[Vec<f64>], n: usize, seed: u64, lo: u64) -> Result<Vec<EstimateCI>> {
    (0..n)
        .map(|i| {
            let acc: Accumulator = rows.iter().map(|r| r[i]).collect();
            Ok(acc.estimate()?.with_provenance(seed, lo, lo + rows.len() as u64))
        })
        .collect()
}

/// `U_lambda f` on a grid (`lambda = 0` for `G f`). Values at different
/// points share paths and are positively correlated.
#[allow(clippy::too_many_arguments)]
pub fn potential_grid(
    alpha: Alpha,
    f: &TestFunction,
    lambda: f64,
    xs: &[f64],
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<McGrid> {
    let rows = grid_samples(alpha, f, lambda, xs, replicas, policy, seed, stream_lo)?;
    McGrid::new(xs.to_vec(), column_estimates(&rows, xs.len(), seed, stream_lo)?)
}

/// Dynkin quotient `[E_x u(X_tau) - u(x)] / E_x tau` for the ball
/// `B(x, r)`. For `x > 0` exit points are sampled in antithetic pairs
/// `x +- r sqrt(1 + q)`; for `x < 0` the limit `-N u(x)` is returned in
/// closed form.
pub fn dynkin_probe(
    alpha: Alpha,
    u: &dyn Evaluable,
    x: f64,
    r: f64,
    replicas: usize,
    seed: u64,
    stream_lo: u64,
) -> Result<EstimateCI> {
    if !(r > 0.0 && r < x.abs()) {
        return Err(domain("the ball B(x, r) must avoid 0"));
    }
    if x < 0.0 {
        return Ok(EstimateCI::exact(-nonlocal_normal_derivative(alpha, u, x)?));
    }
    let s = StableSampler::new(alpha);
    let tau = mean_ball_exit_time(alpha, r);
    let ux = u.eval(x);
    let acc: Accumulator = run_replicas(seed, stream_lo, replicas, |rng| {
        let d = r * (1.0 + s.poisson_ratio(rng)).sqrt();
        (0.5 * (u.eval(x + d) + u.eval(x - d)) - ux) / tau
    })
    .into_iter()
    .collect();
    Ok(acc.estimate()?.with_provenance(seed, stream_lo, stream_lo + replicas as u64))
}

/// A potential sampled on a grid, read through a cubic least-squares fit
/// within `half_width` of `center` and by linear interpolation elsewhere.
/// Every value is a fixed linear combination of the grid estimates, so
/// linear functionals of the field have exact standard errors when the
/// grid estimates are independent.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalField {
    pub center: f64,
    pub half_width: f64,
    pub grid: McGrid,
    window: std::ops::Range<usize>,
    /// Rows map window values to the coefficients of `1, t, t^2, t^3`
    /// with `t = (y - center) / half_width`.
    fit: Vec<Vec<f64>>,
}

impl LocalField {
    pub fn new(center: f64, half_width: f64, grid: McGrid) -> Result<Self> {
        let i0 = grid.xs.partition_point(|&y| y < center - half_width);
        let i1 = grid.xs.partition_point(|&y| y <= center + half_width);
        if i1 - i0 < 6 {
            return Err(domain("the fit window needs at least six grid points"));
        }
        let ts: Vec<f64> = grid.xs[i0..i1].iter().map(|&y| (y - center) / half_width).collect();
        let fit = least_squares_rows(&ts, 4)?;
        Ok(Self { center, half_width, grid, window: i0..i1, fit })
    }

    /// `(index, weight)` pairs with `value(y) = sum weight * value[index]`.
    pub fn coefficients(&self, y: f64) -> Vec<(usize, f64)> {
        let t = (y - self.center) / self.half_width;
        if t.abs() < 1.0 {
            let pw = [1.0, t, t * t, t * t * t];
            (0..self.window.len())
                .map(|i| (self.window.start + i, (0..4).map(|p| pw[p] * self.fit[p][i]).sum()))
                .collect()
        } else {
            self.grid.weights(y).to_vec()
        }
    }
}

impl Evaluable for LocalField {
    fn eval(&self, y: f64) -> f64 {
        self.coefficients(y).iter().map(|&(i, w)| w * self.grid.values[i].mean).sum()
    }
}

/// Rows of `(V^T V)^(-1) V^T` for the Vandermonde matrix `V` of `ts`.
fn least_squares_rows(ts: &[f64], deg: usize) -> Result<Vec<Vec<f64>>> {
    let n = ts.len();
    let v: Vec<Vec<f64>> = ts.iter().map(|&t| (0..deg).map(|p| t.powi(p as i32)).collect()).collect();
    // Gauss-Jordan on [V^T V | V^T]
    let mut m: Vec<Vec<f64>> = (0..deg)
        .map(|p| {
            let mut row: Vec<f64> = (0..deg).map(|q| (0..n).map(|i| v[i][p] * v[i][q]).sum()).collect();
            row.extend((0..n).map(|i| v[i][p]));
            row
        })
        .collect();
    for c in 0..deg {
        let piv = (c..deg).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        if d.abs() < 1e-12 {
            return Err(domain("fit window is degenerate"));
        }
        for x in m[c].iter_mut() {
            *x /= d;
        }
        for r in 0..deg {
            if r != c {
                let k = m[r][c];
                if k != 0.0 {
                    for j in 0..deg + n {
                        m[r][j] -= k * m[c][j];
                    }
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[deg..].to_vec()).collect())
}

/// Grid for a Dynkin probe of `G f` at `x > 0`: thirteen points across the
/// fit window, a 0.1 lattice on `[-4, 4]`, geometric points out to about
/// 75 on both sides and two points next to 0 on each side.
pub fn dynkin_grid(x: f64, half_width: f64) -> Vec<f64> {
    let mut ys: Vec<f64> = (-6..=6).map(|j| x + half_width * j as f64 / 6.0).collect();
    let outside = |y: f64| (y - x).abs() > half_width * (1.0 + 1e-9);
    for j in -40..=40 {
        let y = 0.1 * j as f64;
        if y.abs() > 0.05 && outside(y) {
            ys.push(y);
        }
    }
    for m in 1..=13 {
        let y = 4.0 * 1.25f64.powi(m);
        ys.push(y);
        ys.push(-y);
    }
    for &y in &[0.03, 0.015] {
        if outside(y) {
            ys.push(y);
        }
        ys.push(-y);
    }
    ys.retain(|&y| y != 0.0);
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ys
}

/// Dynkin coefficients `c_i` with `D_r u(x) = sum c_i u_i` for the field
/// read through `field`, averaged over `pairs` antithetic exit pairs.
fn dynkin_coefficients(alpha: Alpha, field: &LocalField, r: f64, pairs: usize, rng: &mut RngStream) -> Vec<f64> {
    let s = StableSampler::new(alpha);
    let x = field.center;
    let tau = mean_ball_exit_time(alpha, r);
    let mut c = vec![0.0; field.grid.xs.len()];
    for _ in 0..pairs {
        let d = r * (1.0 + s.poisson_ratio(rng)).sqrt();
        for y in [x + d, x - d] {
            for (i, w) in field.coefficients(y) {
                c[i] += 0.5 * w;
            }
        }
    }
    for v in c.iter_mut() {
        *v /= pairs as f64;
    }
    for (i, w) in field.coefficients(x) {
        c[i] -= w;
    }
    for v in c.iter_mut() {
        *v /= tau;
    }
    c
}

/// Dynkin quotients of `G f` at `x > 0` for each radius, from independent
/// grid estimates of `G f` read through a [`LocalField`]. Replicas are
/// spread over the grid in proportion to each point's weight at the
/// smallest radius, with at least `min_replicas` per point. The standard
/// error combines the grid errors and the exit sampling.
#[allow(clippy::too_many_arguments)]
pub fn green_dynkin(
    alpha: Alpha,
    f: &TestFunction,
    x: f64,
    radii: &[f64],
    total_replicas: usize,
    min_replicas: usize,
    pairs: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<(Vec<(f64, EstimateCI)>, LocalField)> {
    if !(x > 0.0) || radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r < x)) {
        return Err(domain("green_dynkin needs x > 0 and radii in (0, x)"));
    }
    let half_width = (0.6f64).min(0.6 * x).max(radii.iter().copied().fold(0.0, f64::max));
    let ys = dynkin_grid(x, half_width);
    let placeholder = McGrid::new(ys.clone(), vec![EstimateCI::exact(0.0); ys.len()])?;
    let shape = LocalField::new(x, half_width, placeholder)?;
    let r_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rng = RngStream::new(seed, stream_lo);
    let c0 = dynkin_coefficients(alpha, &shape, r_min, pairs, &mut rng);
    let total_w: f64 = c0.iter().map(|c| c.abs()).sum();
    let alloc: Vec<usize> = c0
        .iter()
        .map(|c| ((total_replicas as f64 * c.abs() / total_w).round() as usize).max(min_replicas))
        .collect();
    // each grid point on its own stream block
    let mut values = Vec::with_capacity(ys.len());
    for (i, (&y, &n)) in ys.iter().zip(&alloc).enumerate() {
        let lo = stream_lo + (i as u64 + 1) * (POINT_STRIDE >> 8);
        values.push(green_apply(alpha, f, y, n, policy, seed, lo)?.value);
    }
    let field = LocalField::new(x, half_width, McGrid::new(ys, values)?)?;
    let s = StableSampler::new(alpha);
    let mut out = Vec::with_capacity(radii.len());
    for (m, &r) in radii.iter().enumerate() {
        let mut rng = RngStream::new(seed, stream_lo + (POINT_STRIDE >> 1) + m as u64);
        let c = dynkin_coefficients(alpha, &field, r, pairs, &mut rng);
        let mean: f64 = c.iter().zip(&field.grid.values).map(|(c, v)| c * v.mean).sum();
        let grid_var: f64 = c.iter().zip(&field.grid.values).map(|(c, v)| (c * v.se).powi(2)).sum();
        // exit sampling error, from fresh pairs
        let tau = mean_ball_exit_time(alpha, r);
        let ux = field.eval(x);
        let exit: Accumulator = (0..pairs.min(20_000))
            .map(|_| {
                let d = r * (1.0 + s.poisson_ratio(&mut rng)).sqrt();
                (0.5 * (field.eval(x + d) + field.eval(x - d)) - ux) / tau
            })
            .collect();
        let exit_var = exit.variance() / pairs as f64;
        let n = field.grid.values.iter().map(|v| v.n).sum();
        out.push((
            r,
            EstimateCI { mean, se: (grid_var + exit_var).sqrt(), n, seed, stream_lo, stream_hi: stream_lo + POINT_STRIDE },
        ));
    }
    Ok((out, field))
}

/// `N (G f)(x) - f(x)` at `x < 0` through the one-step identity
/// `N G f(x) = nu(x, D) (G f(x) - E G f(Y))`, `Y` the return position,
/// with `G f(x)` and `E G f(Y)` estimated on disjoint stream blocks.
/// Returns the residual and the estimate of `G f(x)`.
pub fn green_normal_residual(
    alpha: Alpha,
    f: &TestFunction,
    x: f64,
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<(EstimateCI, EstimateCI)> {
    if !(x < 0.0) {
        return Err(domain("the normal residual is taken at x < 0"));
    }
    let gx = green_apply(alpha, f, x, replicas, policy, seed, stream_lo)?.value;
    let s = StableSampler::new(alpha);
    let lo2 = stream_lo + replicas as u64;
    let back: Result<Vec<f64>> = run_replicas(seed, lo2, replicas, |rng| {
        let y = s.return_jump(x, rng);
        let p = Potential::new(alpha, f, 0.0, y, y, policy)?;
        Ok(p.value(&p.path(1.0, rng)?, y))
    })
    .into_iter()
    .collect();
    let back: Accumulator = back?.into_iter().collect();
    let back = back.estimate()?.with_provenance(seed, lo2, lo2 + replicas as u64);
    let nu = nu_halfline_mass(alpha, x)?;
    let mut res = gx.minus(&back).scale(nu);
    res.mean -= f.eval(x);
    res = res.with_provenance(seed, stream_lo, lo2 + replicas as u64);
    Ok((res, gx))
}

/// Outcome of one residual check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The confidence interval is wider than the resolution of the check.
    Inconclusive,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannRow {
    pub x: f64,
    pub u_hat: EstimateCI,
    pub residual: EstimateCI,
    pub tolerance: f64,
    /// Ball radius of the Dynkin probe (points in `D`).
    pub radius: Option<f64>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannReport {
    pub alpha: f64,
    pub rows: Vec<NeumannRow>,
    /// `0.1 ||f||`, the tolerance floor for points in `D`.
    pub resolution: f64,
}

impl NeumannReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status == Status::Pass)
    }

    /// Rows as CSV: `x,u_hat,se_u,residual,se_residual,status`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{:.6},{:.9e},{:.3e},{:.9e},{:.3e},{}",
                    r.x,
                    r.u_hat.mean,
                    r.u_hat.se,
                    r.residual.mean,
                    r.residual.se,
                    r.status.as_str()
                )
            })
            .collect()
    }
}

/// Monte Carlo budget of [`verify_neumann`].
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannBudget {
    /// Replicas per stream block for the normal residual.
    pub replicas: usize,
    /// Replicas shared out over the grid of one Dynkin point.
    pub dynkin_replicas: usize,
    /// Floor on the replicas of any one grid point.
    pub min_replicas: usize,
    /// Antithetic exit pairs per Dynkin quotient.
    pub pairs: usize,
    pub radii: Vec<f64>,
    pub policy: StepPolicy,
    pub seed: u64,
    pub stream_lo: u64,
}

impl NeumannBudget {
    pub fn new(seed: u64) -> Self {
        Self {
            replicas: 20_000,
            dynkin_replicas: 300_000,
            min_replicas: 200,
            pairs: 200_000,
            radii: vec![0.2, 0.1, 0.05],
            policy: StepPolicy::for_start(1.0),
            seed,
            stream_lo: 0,
        }
    }
}

fn classify(residual: &EstimateCI, tolerance: f64, scale: f64) -> Status {
    if 3.0 * residual.se >= scale {
        Status::Inconclusive
    } else if residual.mean.abs() <= tolerance {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Check that `u = G f` solves `N u = f` on `grid_neg` and
/// `(-Delta)^(alpha/2) u = f` on `grid_pos`. Every point runs on its own
/// stream block, so rows are independent.
///
/// A row is inconclusive when its 3-SE half-width reaches `||f||`, the
/// size of the residual of a function that ignores `f`. On `D^c` the
/// residual must lie within 3 SE of 0. In `D` the Dynkin quotient at the
/// smallest conclusive radius is compared with `-f(x)` at tolerance
/// `max(3 SE, 0.1 ||f||)`.
pub fn verify_neumann(
    alpha: Alpha,
    f: &TestFunction,
    grid_neg: &[f64],
    grid_pos: &[f64],
    budget: &NeumannBudget,
) -> Result<NeumannReport> {
    if grid_neg.iter().any(|&x| !(x < 0.0)) || grid_pos.iter().any(|&x| !(x > 0.0)) {
        return Err(domain("grid_neg must be < 0 and grid_pos > 0"));
    }
    let f_sup = f.sup_abs().ok_or_else(|| domain("f must be bounded"))?;
    let scale = if f_sup > 0.0 { f_sup } else { f64::INFINITY };
    let floor = 0.1 * f_sup;
    let mut rows = Vec::new();
    let base = |i: usize| budget.stream_lo + i as u64 * POINT_STRIDE;
    for (i, &x) in grid_neg.iter().enumerate() {
        let (res, u) = green_normal_residual(alpha, f, x, budget.replicas, &budget.policy, budget.seed, base(i))?;
        let tol = 3.0 * res.se;
        let status = classify(&res, tol, scale);
        rows.push(NeumannRow { x, u_hat: u, residual: res, tolerance: tol, radius: None, status });
    }
    for (j, &x) in grid_pos.iter().enumerate() {
        let mut radii: Vec<f64> = budget.radii.iter().copied().filter(|&r| r < x).collect();
        radii.sort_by(|a, b| b.total_cmp(a));
        let (quotients, field) = green_dynkin(
            alpha,
            f,
            x,
            &radii,
            budget.dynkin_replicas,
            budget.min_replicas,
            budget.pairs,
            &budget.policy,
            budget.seed,
            base(grid_neg.len() + j),
        )?;
        let at = field.grid.xs.iter().position(|&y| y == x).expect("x is a grid point");
        let u = field.grid.values[at];
        let mut best: Option<NeumannRow> = None;
        for (r, q) in quotients {
            let mut res = q;
            res.mean += f.eval(x);
            let tol = (3.0 * res.se).max(floor);
            let status = classify(&res, tol, scale);
            let row = NeumannRow { x, u_hat: u, residual: res, tolerance: tol, radius: Some(r), status };
            if status != Status::Inconclusive || best.is_none() {
                best = Some(row);
            }
        }
        rows.extend(best);
    }
    Ok(NeumannReport { alpha: alpha.value(), rows, resolution: floor })
}

/// Resolvent check at `x < 0`: `lambda U(x) + N U(x) - f(x)` with
/// `U = U_lambda f`, where `N U(x) = nu(x, D) U(x) - A int_0^inf U(y)
/// (y + |x|)^(-1-alpha) dy` is evaluated by quadrature over the grid `ys`
/// of `D`, linear between points, constant down to 0 and zero beyond the
/// last point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventCheck {
    pub x: f64,
    pub lambda: f64,
    pub u_x: EstimateCI,
    pub normal: EstimateCI,
    pub residual: EstimateCI,
    /// Bound on the quadrature tail beyond the last grid point.
    pub tail_bound: f64,
    pub grid: McGrid,
}

#[allow(clippy::too_many_arguments)]
pub fn resolvent_residual(
    alpha: Alpha,
    f: &TestFunction,
    lambda: f64,
    x: f64,
    ys: &[f64],
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<ResolventCheck> {
    if !(x < 0.0 && lambda > 0.0) {
        return Err(domain("resolvent check needs x < 0 and lambda > 0"));
    }
    if ys.is_empty() || ys[0] <= 0.0 {
        return Err(domain("quadrature grid must lie in D"));
    }
    let a = alpha.value();
    let ax = -x;
    let amp = stable_constant(alpha);
    let weights = hat_weights(a, ax, ys)?;
    let mut xs = vec![x];
    xs.extend_from_slice(ys);
    let rows = grid_samples(alpha, f, lambda, &xs, replicas, policy, seed, stream_lo)?;
    let nu = nu_halfline_mass(alpha, x)?;
    let fx = f.eval(x);
    let (mut ux, mut nn, mut res) = (Accumulator::new(), Accumulator::new(), Accumulator::new());
    for row in &rows {
        let integral: f64 = weights.iter().zip(&row[1..]).map(|(w, v)| w * v).sum();
        let n_u = nu * row[0] - amp * integral;
        ux.push(row[0]);
        nn.push(n_u);
        res.push(lambda * row[0] + n_u - fx);
    }
    let hi = stream_lo + replicas as u64;
    let f_sup = f.sup_abs().unwrap_or(f64::INFINITY);
    let last = ys[ys.len() - 1];
    let grid_rows: Vec<Vec<f64>> = rows.iter().map(|r| r[1..].to_vec()).collect();
    Ok(ResolventCheck {
        x,
        lambda,
        u_x: ux.estimate()?.with_provenance(seed, stream_lo, hi),
        normal: nn.estimate()?.with_provenance(seed, stream_lo, hi),
        residual: res.estimate()?.with_provenance(seed, stream_lo, hi),
        tail_bound: f_sup / lambda * amp * (last + ax).powf(-a) / a,
        grid: McGrid::new(ys.to_vec(), column_estimates(&grid_rows, ys.len(), seed, stream_lo)?)?,
    })
}

/// Quadrature grid on `D` for [`resolvent_residual`]: geometric points
/// from 0.001 to 0.05, a 0.05 lattice up to 4, geometric with ratio 1.2 out
/// to 1000, then doubling until the kernel mass beyond the last point,
/// `A R^-alpha / alpha`, is at most `tail`. The tail bound of the check is
/// this mass times `||f|| / lambda`.
pub fn resolvent_grid(alpha: Alpha, tail: f64) -> Result<Vec<f64>> {
    if !(tail > 0.0) {
        return Err(domain("tail target must be positive"));
    }
    let a = alpha.value();
    let amp = stable_constant(alpha);
    let mut ys: Vec<f64> = [0.001, 0.002, 0.005, 0.01, 0.02].to_vec();
    ys.extend((1..=80).map(|j| 0.05 * j as f64));
    let mut y: f64 = 4.0;
    while y < 1000.0 {
        y *= 1.2;
        ys.push(y.min(1000.0));
    }
    let mut y = 1000.0_f64;
    while amp * y.powf(-a) / a > tail {
        y *= 2.0;
        if !y.is_finite() {
            return Err(domain("tail target cannot be met"));
        }
        ys.push(y);
    }
    Ok(ys)
}

/// `w_i = int phi_i(y) (y + c)^(-1-alpha) dy` for the hat functions of the
/// grid, with the first one extended as a constant down to 0.
fn hat_weights(a: f64, c: f64, ys: &[f64]) -> Result<Vec<f64>> {
    let q = TanhSinh::with_tol(1e-13);
    let k = |y: f64| (y + c).powf(-1.0 - a);
    let mut w = vec![0.0; ys.len()];
    // [0, y0]: closed form
    w[0] = (c.powf(-a) - (ys[0] + c).powf(-a)) / a;
    for i in 0..ys.len().saturating_sub(1) {
        let (y0, y1) = (ys[i], ys[i + 1]);
        if !(y1 > y0) {
            return Err(domain("quadrature grid must be strictly increasing"));
        }
        let h = y1 - y0;
        let left = q.integrate(y0, y1, |y, _, r| r / h * k(y));
        let right = q.integrate(y0, y1, |y, l, _| l / h * k(y));
        if !(left.converged && right.converged) {
            return Err(Error::Quadrature("hat weights did not converge".into()));
        }
        w[i] += left.value;
        w[i + 1] += right.value;
    }
    Ok(w)
}
