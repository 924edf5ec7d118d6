//! Time-resolved simulation of the reflected process.
//!
//! Inside `D` the process is a random walk with exact stable increments
//! over adaptive steps `dt = min(dt_max, c_step x^alpha)`. The first step
//! that lands at or below 0 ends the excursion and its landing point is
//! the exit position. Outside `D` the hold and the return jump are exact.

use crate::analytic::{rho, Alpha};
use crate::error::{domain, Error, Result};
use crate::parallel::run_replicas;
use crate::rng::RngStream;
use crate::samplers::StableSampler;
use crate::stats::{linear_fit, Accumulator, EstimateCI, LineFit};
use crate::testfn::Evaluable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub c_step: f64,
    pub dt_max: f64,
    /// For alpha > 1 the process counts as absorbed once `|X| < eps_kill`.
    pub eps_kill: f64,
    /// Hard cap on walk steps per call.
    pub max_steps: usize,
}

pub const DEFAULT_C_STEP: f64 = 0.01;
pub const DEFAULT_MAX_STEPS: usize = 20_000_000;

impl Default for StepPolicy {
    fn default() -> Self {
        Self::for_start(1.0)
    }
}

impl StepPolicy {
    pub fn new(c_step: f64, dt_max: f64, eps_kill: f64) -> Result<Self> {
        if !(c_step > 0.0 && dt_max > 0.0 && eps_kill > 0.0) {
            return Err(domain("step policy fields must be strictly positive"));
        }
        Ok(Self { c_step, dt_max, eps_kill, max_steps: DEFAULT_MAX_STEPS })
    }

    /// Default policy for a start at `x0`: `eps_kill = 1e-4 |x0|`, no cap
    /// on the step length.
    pub fn for_start(x0: f64) -> Self {
        Self {
            c_step: DEFAULT_C_STEP,
            dt_max: f64::INFINITY,
            eps_kill: 1e-4 * x0.abs().max(f64::MIN_POSITIVE),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_c_step(mut self, c: f64) -> Self {
        self.c_step = c;
        self
    }

    pub fn with_dt_max(mut self, dt: f64) -> Self {
        self.dt_max = dt;
        self
    }

    pub fn with_eps_kill(mut self, eps: f64) -> Self {
        self.eps_kill = eps;
        self
    }

    /// The policy used from `k x` when this one is used from `x`; the walk
    /// is then equal in law to `k` times the original walk.
    pub fn rescaled(&self, alpha: Alpha, k: f64) -> Self {
        Self {
            dt_max: self.dt_max * k.powf(alpha.value()),
            eps_kill: self.eps_kill * k,
            ..*self
        }
    }
}

/// How a walk inside `D` ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum WalkEnd {
    /// Left `D` at time `t`, landing at `pos <= 0` from `pre > 0`.
    Exited { t: f64, pos: f64, pre: f64 },
    /// Reached the stop time, or the visitor asked to stop.
    Stopped { t: f64, x: f64 },
    /// Came within `eps_kill` of 0.
    Absorbed { t: f64, x: f64 },
}

/// Walk inside `D` from `(t, x)`. `visit(t0, x0, t1, x1)` sees every step
/// including the exit step and may return `false` to stop.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn walk_in_d<V>(
    s: &StableSampler,
    policy: &StepPolicy,
    mut x: f64,
    mut t: f64,
    t_stop: f64,
    absorb: bool,
    steps: &mut usize,
    rng: &mut RngStream,
    mut visit: V,
) -> Result<WalkEnd>
where
    V: FnMut(f64, f64, f64, f64) -> bool,
{
    let a = s.alpha().value();
    loop {
        if absorb && x < policy.eps_kill {
            return Ok(WalkEnd::Absorbed { t, x });
        }
        if t >= t_stop {
            return Ok(WalkEnd::Stopped { t: t_stop, x });
        }
        if *steps >= policy.max_steps {
            return Err(Error::StepCap { steps: *steps });
        }
        *steps += 1;
        let mut dt = (policy.c_step * x.powf(a)).min(policy.dt_max);
        let mut t1 = t + dt;
        if t1 >= t_stop {
            dt = t_stop - t;
            t1 = t_stop;
        }
        let x1 = x + s.increment(dt, rng);
        let go_on = visit(t, x, t1, x1);
        if x1 <= 0.0 {
            return Ok(WalkEnd::Exited { t: t1, pos: x1, pre: x });
        }
        t = t1;
        x = x1;
        if !go_on {
            return Ok(WalkEnd::Stopped { t, x });
        }
    }
}

/// A walk in `D` run until it leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct KilledPath {
    pub tau: f64,
    pub exit_pos: f64,
    pub pre_exit: f64,
    pub steps: usize,
    /// `(t, x)` at every step inside `D`, starting with `(0, x)`.
    pub path: Vec<(f64, f64)>,
}

/// Walk from `x > 0` until the first step lands in `(-inf, 0]`.
pub fn simulate_killed_path(alpha: Alpha, x: f64, policy: &StepPolicy, rng: &mut RngStream) -> Result<KilledPath> {
    if !(x > 0.0) {
        return Err(domain("killed path needs x > 0"));
    }
    let s = StableSampler::new(alpha);
    let mut steps = 0;
    let mut path = vec![(0.0, x)];
    let end = walk_in_d(&s, policy, x, 0.0, f64::INFINITY, false, &mut steps, rng, |_, _, t1, x1| {
        if x1 > 0.0 {
            path.push((t1, x1));
        }
        true
    })?;
    match end {
        WalkEnd::Exited { t, pos, pre } => Ok(KilledPath { tau: t, exit_pos: pos, pre_exit: pre, steps, path }),
        _ => unreachable!("walk without stop time or absorption ends by exiting"),
    }
}

/// Exit time and position only; no path recording.
#[inline]
pub(crate) fn killed_exit(s: &StableSampler, policy: &StepPolicy, x: f64, rng: &mut RngStream) -> Result<(f64, f64)> {
    let mut steps = 0;
    match walk_in_d(s, policy, x, 0.0, f64::INFINITY, false, &mut steps, rng, |_, _, _, _| true)? {
        WalkEnd::Exited { t, pos, .. } => Ok((t, pos)),
        _ => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Walk,
    Hold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub kind: SegmentKind,
    /// Walk: `(t, x)` at each step. Hold: a single `(t_start, level)`.
    pub points: Vec<(f64, f64)>,
}

impl Segment {
    pub fn level(&self) -> Option<f64> {
        match self.kind {
            SegmentKind::Hold => Some(self.points[0].1),
            SegmentKind::Walk => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    TMax(f64),
    Reflections(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// The horizon was reached.
    Horizon,
    /// `|X| < eps_kill` with alpha > 1: the lifetime is over.
    Absorbed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x0: f64,
    pub segments: Vec<Segment>,
    pub termination: Termination,
    pub end_time: f64,
    /// Returns into `D` completed.
    pub n_reflections: usize,
    /// Time at absorption; `None` means the path was truncated by the horizon.
    pub lifetime_estimate: Option<f64>,
    pub warning: Option<String>,
}

/// Simulate the process from `x0 != 0` up to the horizon.
pub fn simulate_trajectory(
    alpha: Alpha,
    x0: f64,
    horizon: Horizon,
    policy: &StepPolicy,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    if x0 == 0.0 || !x0.is_finite() {
        return Err(domain("trajectory start must be a nonzero finite point"));
    }
    let (t_max, max_refl) = match horizon {
        Horizon::TMax(t) if t > 0.0 => (t, usize::MAX),
        Horizon::Reflections(n) => (f64::INFINITY, n),
        Horizon::TMax(_) => return Err(domain("t_max must be positive")),
    };
    let s = StableSampler::new(alpha);
    let absorb = alpha.value() > 1.0;
    let mut segments = Vec::new();
    let mut t = 0.0;
    let mut x = x0;
    let mut refl = 0;
    let mut steps = 0;
    let mut termination = Termination::Horizon;
    loop {
        if absorb && x.abs() < policy.eps_kill {
            termination = Termination::Absorbed;
            break;
        }
        if t >= t_max || refl >= max_refl {
            break;
        }
        if x > 0.0 {
            let mut pts = vec![(t, x)];
            let end = walk_in_d(&s, policy, x, t, t_max, absorb, &mut steps, rng, |_, _, t1, x1| {
                if x1 > 0.0 {
                    pts.push((t1, x1));
                }
                true
            })?;
            let (t_end, next) = match end {
                WalkEnd::Exited { t, pos, .. } => (t, pos),
                WalkEnd::Stopped { t, x } | WalkEnd::Absorbed { t, x } => (t, x),
            };
            segments.push(Segment { t_start: t, t_end, kind: SegmentKind::Walk, points: pts });
            t = t_end;
            x = next;
            if let WalkEnd::Absorbed { .. } = end {
                termination = Termination::Absorbed;
                break;
            }
        } else {
            if absorb && -x < policy.eps_kill {
                termination = Termination::Absorbed;
                break;
            }
            let h = s.hold(x, rng);
            let t_end = (t + h).min(t_max);
            segments.push(Segment { t_start: t, t_end, kind: SegmentKind::Hold, points: vec![(t, x)] });
            if t + h >= t_max {
                t = t_max;
                break;
            }
            t += h;
            x = s.return_jump(x, rng);
            refl += 1;
        }
    }
    let lifetime_estimate = (termination == Termination::Absorbed).then_some(t);
    let warning = match (horizon, termination) {
        (Horizon::TMax(tm), Termination::Absorbed) => {
            Some(format!("absorbed at t = {t:.6e}, before the horizon t_max = {tm:.6e}"))
        }
        _ => None,
    };
    Ok(Trajectory { x0, segments, termination, end_time: t, n_reflections: refl, lifetime_estimate, warning })
}

impl Trajectory {
    /// Position at the end of the simulated range.
    pub fn final_position(&self) -> f64 {
        match self.segments.last() {
            None => self.x0,
            Some(seg) => match seg.kind {
                SegmentKind::Hold => seg.points[0].1,
                SegmentKind::Walk => {
                    // a walk segment ends either at the horizon (last point)
                    // or by absorption
                    seg.points.last().map(|p| p.1).unwrap_or(self.x0)
                }
            },
        }
    }

    /// Number of sign changes along the path.
    pub fn sign_changes(&self) -> usize {
        self.segments.windows(2).filter(|w| w[0].kind != w[1].kind).count()
    }
}

/// Below `|x|^alpha < DEEP t` a whole excursion in `D` lasts less than the
/// rounding error of the clock unless its scaled exit time exceeds about
/// `1e14`, so the walk is replaced by the exact reflection chain.
const DEEP: f64 = 1e-30;
/// Below `DEEP t e^-HOLD_SKIP` even the holds no longer move the clock.
const HOLD_SKIP: f64 = 40.0;
/// The chain is held at `DEEP t e^-FLOOR`. At alpha = 1 the log-position
/// is a driftless random walk whose return times have infinite mean; from
/// further down it comes back up through the floor with an overshoot whose
/// law is within about `e^-(FLOOR - HOLD_SKIP)/2` of the law for a start at
/// the floor, so the floor only saves time-free steps.
const FLOOR: f64 = 100.0;
/// Chain steps allowed per deep stretch.
pub const DEEP_MAX_STEPS: u64 = 1 << 32;

/// Run the reflection chain from `x > 0` in log space while it stays deep.
/// Returns the clock and the position: positive once the chain is shallow
/// again, negative if the clock passed `t_target` during a hold.
fn deep_excursions(s: &StableSampler, x: f64, mut t: f64, t_target: f64, rng: &mut RngStream) -> Result<(f64, f64)> {
    let a = s.alpha().value();
    // work with u = alpha ln v, the log of the time scale
    let mut u = a * x.ln();
    let mut level = (DEEP * t).ln();
    let mut n = 0u64;
    while u < level {
        if n >= DEEP_MAX_STEPS {
            return Err(Error::StepCap { steps: n as usize });
        }
        n += 1;
        let r = s.poisson_ratio(rng);
        if u > level - HOLD_SKIP {
            t += u.exp() * s.hold(-r, rng);
            if t >= t_target {
                return Ok((t, -(u / a + r.ln()).exp()));
            }
            level = (DEEP * t).ln();
        }
        u = (u + a * s.return_jump(-r, rng).ln()).max(level - FLOOR);
    }
    Ok((t, (u / a).exp()))
}

/// State of the process at a fixed time `t`: `None` once it is dead.
pub(crate) fn position_at(
    s: &StableSampler,
    policy: &StepPolicy,
    x: f64,
    t_target: f64,
    rng: &mut RngStream,
) -> Result<Option<f64>> {
    let a = s.alpha().value();
    let absorb = a > 1.0;
    let mut t = 0.0;
    let mut pos = x;
    let mut steps = 0;
    loop {
        if absorb && pos.abs() < policy.eps_kill {
            return Ok(None);
        }
        if pos > 0.0 && t > 0.0 && pos.powf(a) < DEEP * t {
            let (t1, p1) = deep_excursions(s, pos, t, t_target, rng)?;
            if t1 >= t_target {
                return Ok(Some(p1));
            }
            t = t1;
            pos = p1;
            continue;
        }
        if pos > 0.0 {
            match walk_in_d(s, policy, pos, t, t_target, absorb, &mut steps, rng, |_, _, _, _| true)? {
                WalkEnd::Stopped { x, .. } => return Ok(Some(x)),
                WalkEnd::Absorbed { .. } => return Ok(None),
                WalkEnd::Exited { t: te, pos: p, .. } => {
                    t = te;
                    pos = p;
                }
            }
        } else {
            if absorb && -pos < policy.eps_kill {
                return Ok(None);
            }
            t += s.hold(pos, rng);
            if t >= t_target {
                return Ok(Some(pos));
            }
            pos = s.return_jump(pos, rng);
        }
    }
}

/// Samples of `X_t` started at `x`; dead paths are `None`.
pub fn positions_at(
    alpha: Alpha,
    x: f64,
    t: f64,
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<Vec<Option<f64>>> {
    if !(t > 0.0) || x == 0.0 {
        return Err(domain("need t > 0 and x != 0"));
    }
    let s = StableSampler::new(alpha);
    run_replicas(seed, stream_lo, replicas, |r| position_at(&s, policy, x, t, r)).into_iter().collect()
}

/// Monte Carlo `K_t f(x) = E_x f(X_t)`, with `f = 0` on the cemetery.
#[allow(clippy::too_many_arguments)]
pub fn semigroup_apply(
    alpha: Alpha,
    f: &dyn Evaluable,
    t: f64,
    x: f64,
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<EstimateCI> {
    let pos = positions_at(alpha, x, t, replicas, policy, seed, stream_lo)?;
    let acc: Accumulator = pos.iter().map(|p| p.map_or(0.0, |y| f.eval(y))).collect();
    Ok(acc.estimate()?.with_provenance(seed, stream_lo, stream_lo + replicas as u64))
}

/// `P_x(tau_D > t)` at each `t` in `ts`.
pub fn survival_curve(
    alpha: Alpha,
    x: f64,
    ts: &[f64],
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<Vec<EstimateCI>> {
    if !(x > 0.0) {
        return Err(domain("survival in D needs x > 0"));
    }
    let t_last = ts.iter().copied().fold(0.0, f64::max);
    let s = StableSampler::new(alpha);
    let taus: Result<Vec<f64>> = run_replicas(seed, stream_lo, replicas, |r| {
        let mut steps = 0;
        match walk_in_d(&s, policy, x, 0.0, t_last, false, &mut steps, r, |_, _, _, _| true)? {
            WalkEnd::Exited { t, .. } => Ok(t),
            _ => Ok(f64::INFINITY),
        }
    })
    .into_iter()
    .collect();
    let taus = taus?;
    ts.iter()
        .map(|&t| {
            let acc: Accumulator = taus.iter().map(|&tau| (tau > t) as u8 as f64).collect();
            Ok(acc.estimate()?.with_provenance(seed, stream_lo, stream_lo + replicas as u64))
        })
        .collect()
}

/// Least-squares slope of `ln P(tau > t)` against `ln t`.
pub fn survival_slope(ts: &[f64], surv: &[EstimateCI]) -> Result<LineFit> {
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = surv.iter().map(|e| e.mean.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Exit times from `x` (used for scaling checks).
pub fn exit_times(
    alpha: Alpha,
    x: f64,
    replicas: usize,
    policy: &StepPolicy,
    seed: u64,
    stream_lo: u64,
) -> Result<Vec<(f64, f64)>> {
    if !(x > 0.0) {
        return Err(domain("exit from D needs x > 0"));
    }
    let s = StableSampler::new(alpha);
    run_replicas(seed, stream_lo, replicas, |r| killed_exit(&s, policy, x, r)).into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeOptions {
    /// Stop once the tail bound is below this fraction of the running sum.
    pub rel_tail: f64,
    pub max_reflections: usize,
    /// Replicas used to estimate `E_1 T^p`.
    pub pilot: usize,
}

impl Default for LifetimeOptions {
    fn default() -> Self {
        Self { rel_tail: 1e-3, max_reflections: 10_000, pilot: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeEstimate {
    /// Mean of the truncated lifetimes. The lifetime has infinite mean,
    /// so this is reported for information only.
    pub mean: EstimateCI,
    /// Mean of `R^p` with `p = (alpha - 1) / (2 alpha)`, which is finite.
    pub moment: EstimateCI,
    pub p: f64,
    /// `(E_1 T^p / (1 - rho))^(1/p)`; the tail after `V_n` is bounded by
    /// `V_n^alpha` times this.
    pub tail_scale: f64,
    /// Largest final `tail bound / sum` among accepted replicas.
    pub max_tail_ratio: f64,
    pub accepted: usize,
    /// Replicas that hit `max_reflections` before the bound was met.
    pub rejected: usize,
    pub samples: Vec<f64>,
}

/// One excursion cost from `v > 0`: time to leave `D`, then the hold.
#[inline]
fn excursion(s: &StableSampler, policy: &StepPolicy, v: f64, rng: &mut RngStream) -> Result<(f64, f64)> {
    let (tau, z) = killed_exit(s, policy, v, rng)?;
    let z = if z == 0.0 { -f64::MIN_POSITIVE } else { z };
    let h = s.hold(z, rng);
    Ok((tau + h, z))
}

/// The fractional order used for lifetime comparisons.
pub fn lifetime_moment_order(alpha: Alpha) -> f64 {
    let a = alpha.value();
    (a - 1.0) / (2.0 * a)
}

/// Estimate the lifetime `R_inf = sum_n S_n` for alpha > 1.
///
/// `S_n = V_{n-1}^alpha T_n` with i.i.d. `T_n`. For `p = (alpha-1)/(2 alpha)`,
/// `E_1 W^(alpha p) = rho(alpha) < 1`, so by subadditivity of `t -> t^p`
/// the remaining sum after `V_n` satisfies
/// `E[(sum_{k>n} S_k)^p] <= V_n^(alpha p) E_1 T^p / (1 - rho)`.
/// A replica stops when `V_n^alpha tail_scale < rel_tail * sum`.
pub fn estimate_lifetime(
    alpha: Alpha,
    x0: f64,
    replicas: usize,
    policy: &StepPolicy,
    opts: &LifetimeOptions,
    seed: u64,
    stream_lo: u64,
) -> Result<LifetimeEstimate> {
    if alpha.value() <= 1.0 {
        return Err(domain("the lifetime is infinite for alpha <= 1"));
    }
    if x0 == 0.0 || !x0.is_finite() {
        return Err(domain("lifetime needs a nonzero start"));
    }
    let s = StableSampler::new(alpha);
    let a = alpha.value();
    let p = lifetime_moment_order(alpha);
    // pilot on streams after the main block, from x = 1 with the same
    // relative policy
    let pilot_lo = stream_lo + replicas as u64;
    let unit = policy.rescaled(alpha, 1.0 / x0.abs());
    let pilot: Result<Vec<f64>> =
        run_replicas(seed, pilot_lo, opts.pilot, |r| excursion(&s, &unit, 1.0, r).map(|(t, _)| t.powf(p)))
            .into_iter()
            .collect();
    let pilot: Accumulator = pilot?.into_iter().collect();
    let pe = pilot.estimate()?;
    let etp = pe.mean + 3.0 * pe.se;
    let tail_scale = (etp / (1.0 - rho(alpha))).powf(1.0 / p);

    let runs: Result<Vec<Option<(f64, f64)>>> = run_replicas(seed, stream_lo, replicas, |r| {
        let mut sum = 0.0;
        let mut v = x0;
        if v < 0.0 {
            sum += s.hold(v, r);
            v = s.return_jump(v, r);
        }
        for _ in 0..opts.max_reflections {
            let (cost, z) = excursion(&s, policy, v, r)?;
            sum += cost;
            v = s.return_jump(z, r);
            let bound = v.powf(a) * tail_scale;
            if bound < opts.rel_tail * sum {
                return Ok(Some((sum, bound / sum)));
            }
        }
        Ok(None)
    })
    .into_iter()
    .collect();
    let runs = runs?;
    let mut samples = Vec::with_capacity(replicas);
    let mut max_ratio: f64 = 0.0;
    let mut rejected = 0;
    for r in runs {
        match r {
            Some((sum, ratio)) => {
                samples.push(sum);
                max_ratio = max_ratio.max(ratio);
            }
            None => rejected += 1,
        }
    }
    let prov = |e: EstimateCI| e.with_provenance(seed, stream_lo, pilot_lo + opts.pilot as u64);
    let mean = prov(samples.iter().copied().collect::<Accumulator>().estimate()?);
    let moment = prov(samples.iter().map(|r| r.powf(p)).collect::<Accumulator>().estimate()?);
    Ok(LifetimeEstimate {
        mean,
        moment,
        p,
        tail_scale,
        max_tail_ratio: max_ratio,
        accepted: samples.len(),
        rejected,
        samples,
    })
}

/// Ratio of lifetimes on the scale of the p-th moment:
/// `(E R_b^p / E R_a^p)^(1/p)` with a log-delta-method standard error.
/// Returns `(ratio, se_of_log_ratio)`.
pub fn lifetime_ratio(a: &LifetimeEstimate, b: &LifetimeEstimate) -> (f64, f64) {
    let p = a.p;
    let ratio = (b.moment.mean / a.moment.mean).powf(1.0 / p);
    let rel_a = a.moment.se / a.moment.mean;
    let rel_b = b.moment.se / b.moment.mean;
    (ratio, rel_a.hypot(rel_b) / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn al(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn killed_path_shape() {
        let mut r = RngStream::new(1, 0);
        let p = simulate_killed_path(al(1.5), 1.0, &StepPolicy::default(), &mut r).unwrap();
        assert!(p.exit_pos <= 0.0 && p.pre_exit > 0.0 && p.tau > 0.0);
        assert!(p.path.iter().all(|&(_, x)| x > 0.0));
        assert!(p.path.windows(2).all(|w| w[1].0 > w[0].0));
        assert_eq!(p.path.len(), p.steps);
    }

    #[test]
    fn step_cap_is_an_error() {
        let mut r = RngStream::new(1, 0);
        let mut pol = StepPolicy::default().with_c_step(1e-6);
        pol.max_steps = 10;
        assert!(matches!(
            simulate_killed_path(al(1.5), 1.0, &pol, &mut r),
            Err(Error::StepCap { .. })
        ));
    }

    #[test]
    fn trajectory_segments_alternate() {
        let mut r = RngStream::new(2, 0);
        let tr = simulate_trajectory(al(1.3), 1.0, Horizon::Reflections(20), &StepPolicy::default(), &mut r).unwrap();
        for w in tr.segments.windows(2) {
            assert_ne!(w[0].kind, w[1].kind);
            assert_eq!(w[0].t_end, w[1].t_start);
        }
        for seg in &tr.segments {
            match seg.kind {
                SegmentKind::Walk => assert!(seg.points.iter().all(|p| p.1 > 0.0)),
                SegmentKind::Hold => assert!(seg.level().unwrap() < 0.0),
            }
        }
    }

    #[test]
    fn negative_start_begins_with_hold() {
        let mut r = RngStream::new(3, 0);
        let tr = simulate_trajectory(al(0.8), -1.0, Horizon::TMax(5.0), &StepPolicy::default(), &mut r).unwrap();
        assert_eq!(tr.segments[0].kind, SegmentKind::Hold);
        assert_eq!(tr.segments[0].level(), Some(-1.0));
        assert!(tr.end_time <= 5.0);
    }

    #[test]
    fn lifetime_rejects_small_alpha() {
        let opts = LifetimeOptions::default();
        assert!(estimate_lifetime(al(1.0), 1.0, 10, &StepPolicy::default(), &opts, 0, 0).is_err());
    }
}
