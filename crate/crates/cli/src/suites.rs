//! Verification suites. Each one turns a [`RunConfig`] into a [`Report`].
//!
//! Every Monte Carlo claim runs on its own block of streams, so rows are
//! independent of each other and of the order in which suites run.

use sv_process::analytic::{
    generator_constant, hardy_constants, log_moment_sign, log_moment_variance_critical, poisson_exit_cdf, poisson_moment_tail,
    poisson_moment, rho, stable_constant,
};
use sv_process::chain::{chain_log_stats, classify_drift, log_slope, simulate_ensemble, Drift};
use sv_process::neumann::{
    dynkin_probe, resolvent_grid, resolvent_residual, verify_neumann, NeumannBudget, Status as NStatus,
};
use sv_process::parallel::run_replicas;
use sv_process::quadrature::{bundled_test_functions, fractional_laplacian_pv, hardy_check, two_bump};
use sv_process::stats::{guard, ks_test, ks_two_sample, mean_ci, Guard};
use sv_process::walk::{
    estimate_lifetime, exit_times, lifetime_ratio, positions_at, semigroup_apply, survival_curve, survival_slope,
    LifetimeOptions,
};
use sv_process::{Alpha, Side, StableSampler, StepPolicy, TestFunction};

use crate::config::RunConfig;
use crate::report::{num, Report, Row, Status};
use crate::CliError;

pub const SUITES: [&str; 7] = ["moments", "harmonic", "hardy", "generator", "scaling", "neumann", "lifetime"];

/// Truncation point of the stratified harmonic moment.
const HARMONIC_CUT: f64 = 100.0;

/// Stream block `i`; blocks are far larger than any replica count.
fn block(i: u64) -> u64 {
    i << 44
}

fn alpha_of(cfg: &RunConfig) -> Result<Alpha, CliError> {
    Ok(Alpha::new(cfg.alpha)?)
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Report, CliError> {
    let mut rep = Report::new(name, cfg.alpha, cfg.seed);
    let rows = match name {
        "moments" => moments(cfg)?,
        "harmonic" => harmonic(cfg)?,
        "hardy" => hardy(cfg)?,
        "generator" => generator(cfg)?,
        "scaling" => scaling(cfg)?,
        "neumann" => {
            let mut rows = neumann(cfg)?;
            rows.extend(resolvent(cfg)?);
            rows
        }
        "lifetime" => lifetime(cfg)?,
        other => {
            return Err(CliError::Usage(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", "))))
        }
    };
    rep.rows = rows;
    Ok(rep)
}

fn sign_name(s: i8) -> &'static str {
    match s {
        1 => "> 0",
        0 => "contains 0",
        _ => "< 0",
    }
}

fn drift_name(d: Drift) -> &'static str {
    match d {
        Drift::EscapesToInfinity => "escapes_to_infinity",
        Drift::AbsorbedAtZero => "absorbed_at_zero",
        Drift::Oscillates => "oscillates",
        Drift::Indeterminate => "indeterminate",
    }
}

fn expected_drift(alpha: Alpha) -> Drift {
    match log_moment_sign(alpha) {
        1 => Drift::EscapesToInfinity,
        0 => Drift::Oscillates,
        _ => Drift::AbsorbedAtZero,
    }
}

/// Moments of the reflection ratio `W`: `rho(alpha)`, the sign of
/// `E ln W` and, at alpha = 1, its variance. Uses `replicas` samples of `W`.
pub fn moments(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let alpha = alpha_of(cfg)?;
    let k = cfg.tol;
    let steps = 100.min(cfg.replicas);
    let chains = cfg.replicas.div_ceil(steps);
    let ens = simulate_ensemble(alpha, 1.0, steps, chains, cfg.seed, block(1))?;
    let st = chain_log_stats(alpha, &ens)?;
    let mut rows = Vec::new();
    let w = st.mean_w_pow;
    rows.push(Row::within("E_1 W^((alpha-1)/2) = rho(alpha)", "fractional moment of W", w.mean, rho(alpha), k * w.se));
    let sign = log_moment_sign(alpha);
    let band = guard(&st.mean_ln_w, 0.0, k);
    let got = match band {
        Guard::Above => 1,
        Guard::Contains => 0,
        Guard::Below => -1,
    };
    rows.push(Row::new(
        format!("E_1 ln W {}", sign_name(sign)),
        "log-moment trichotomy",
        format!("{} ({})", num(st.mean_ln_w.mean), sign_name(got)),
        sign_name(sign),
        num(k * st.mean_ln_w.se),
        Status::of(got == sign),
    ));
    if alpha.is_critical() {
        let v = st.var_ln_w;
        rows.push(Row::within(
            "Var ln W = 4 pi^2 / 3 at alpha = 1",
            "critical log variance",
            v.mean,
            log_moment_variance_critical(),
            k * v.se,
        ));
    }
    let drift = classify_drift(alpha, &ens)?;
    let want = expected_drift(alpha);
    rows.push(Row::new(
        "drift of the return chain",
        "sign of E ln W",
        drift_name(drift),
        drift_name(want),
        num(k * st.mean_ln_w.se),
        Status::of(drift == want),
    ));
    Ok(rows)
}

/// Harmonicity of `h_(alpha-1)`, the Poisson kernel and the exit and
/// return samplers.
pub fn harmonic(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let alpha = alpha_of(cfg)?;
    let a = alpha.value();
    let k = cfg.tol;
    let n = cfg.replicas;
    let s = StableSampler::new(alpha);
    let mut rows = Vec::new();
    rows.push(Row::within(
        "int P_D(1,y) |y|^(alpha-1) dy = 1",
        "h_(alpha-1) harmonic (quadrature)",
        poisson_moment(alpha, 1.0, a - 1.0)?,
        1.0,
        1e-8,
    ));
    rows.push(Row::within(
        "int P_D(1,y) dy = 1",
        "Poisson kernel normalization",
        poisson_moment(alpha, 1.0, 0.0)?,
        1.0,
        1e-8,
    ));
    let ys = run_replicas(cfg.seed, block(1), n, |r| s.exit_position(1.0, r));
    let h: Vec<f64> = ys.iter().map(|y| (-y).powf(a - 1.0)).collect();
    let m = mean_ci(&h)?;
    let plain = Row::within("E_1 |X_(tau_D)|^(alpha-1) = 1", "h_(alpha-1) harmonic (Monte Carlo)", m.mean, 1.0, k * m.se);
    if 2.0 * (a - 1.0) < 0.5 * a {
        rows.push(plain);
    } else {
        // |Y|^(alpha-1) has infinite variance from alpha = 4/3 on, so the
        // plain SE means nothing; sample below HARMONIC_CUT and add the
        // exact moment beyond it
        rows.push(plain.info());
        let cut: Vec<f64> = ys.iter().map(|&y| if -y <= HARMONIC_CUT { (-y).powf(a - 1.0) } else { 0.0 }).collect();
        let m = mean_ci(&cut)?;
        let est = m.mean + poisson_moment_tail(alpha, 1.0, a - 1.0, HARMONIC_CUT)?;
        rows.push(Row::within(
            format!("E_1 |X_(tau_D)|^(alpha-1) = 1, sampled on |y| <= {HARMONIC_CUT} plus the exact tail"),
            "h_(alpha-1) harmonic (Monte Carlo)",
            est,
            1.0,
            k * m.se,
        ));
    }
    let ks = ks_test(&ys, |y| poisson_exit_cdf(alpha, 1.0, y).unwrap_or(f64::NAN))?;
    rows.push(Row::ks("exit position from 1 ~ P_D(1, .)", "Poisson kernel of the half-line", ks.p_value));
    let ws = run_replicas(cfg.seed, block(2), n, |r| s.return_jump(-1.0, r));
    let ks = ks_test(&ws, |w| if w <= 0.0 { 0.0 } else { 1.0 - (1.0 + w).powf(-a) })?;
    rows.push(Row::ks("return jump from -1 has survival (1/(1+w))^alpha", "return-jump law", ks.p_value));
    Ok(rows)
}

/// Hardy constants and the Hardy inequality on the bundled functions.
pub fn hardy(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let alpha = alpha_of(cfg)?;
    let mut rows = Vec::new();
    let one = hardy_constants(Alpha::new(1.0)?);
    rows.push(Row::within("C_1 = 0", "Hardy constant at alpha = 1", one.c_alpha, 0.0, 1e-10));
    rows.push(Row::within("D_1 = 0", "Hardy constant at alpha = 1", one.d_alpha, 0.0, 0.0));
    if alpha.is_critical() {
        return Ok(rows);
    }
    let h = hardy_constants(alpha);
    rows.push(Row::new("C_alpha > 0", "Hardy constant", num(h.c_alpha), "> 0", "0", Status::of(h.c_alpha > 0.0)));
    rows.push(Row::new("D_alpha > 0", "Hardy constant", num(h.d_alpha), "> 0", "0", Status::of(h.d_alpha > 0.0)));
    for (name, u) in bundled_test_functions() {
        let c = hardy_check(alpha, &u)?;
        rows.push(Row::at_least(format!("Hardy margin of {name} >= 0"), "Hardy inequality with E_D", c.margin, 0.0, 1e-8));
    }
    Ok(rows)
}

/// Generator constants on `h_beta` and the Dynkin probe at `x = 1`.
pub fn generator(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let alpha = alpha_of(cfg)?;
    let a = alpha.value();
    let k = cfg.tol;
    let mut rows = Vec::new();
    for side in [Side::D, Side::Dc] {
        let tag = if side == Side::D { "D" } else { "D^c" };
        for (beta, label) in [(0.0, "0"), (a - 1.0, "alpha-1")] {
            rows.push(Row::within(
                format!("C(alpha, {label}, {tag}) = 0"),
                "generator constant on h_beta",
                generator_constant(alpha, beta, side)?,
                0.0,
                1e-8,
            ));
        }
        if !alpha.is_critical() {
            let c = generator_constant(alpha, 0.5 * (a - 1.0), side)?;
            rows.push(Row::new(
                format!("C(alpha, (alpha-1)/2, {tag}) > 0"),
                "generator constant on h_beta",
                num(c),
                "> 0",
                "0",
                Status::of(c > 0.0),
            ));
        }
    }
    let beta = 0.5 * (a - 1.0);
    let u = TestFunction::power(beta);
    let amp = stable_constant(alpha);
    let target = -amp * generator_constant(alpha, beta, Side::D)?;
    if !alpha.is_critical() {
        let pv = fractional_laplacian_pv(alpha, &u, 1.0)?;
        rows.push(Row::within(
            "p.v. (-Delta)^(alpha/2) h_beta(1) = A C(alpha, beta, D)",
            "generator on h_beta (quadrature)",
            pv,
            -target,
            1e-8 * target.abs().max(1e-300),
        ));
    }
    let radii = [0.2, 0.1, 0.05];
    for (m, &r) in radii.iter().enumerate() {
        let e = dynkin_probe(alpha, &u, 1.0, r, cfg.replicas, cfg.seed, block(1 + m as u64))?;
        let tol = (k * e.se).max(0.1 * target.abs());
        let row = Row::within(
            format!("Dynkin quotient of h_beta at x = 1, r = {r}"),
            "Dynkin operator = -(-Delta)^(alpha/2) on D",
            e.mean,
            target,
            tol,
        );
        // only the smallest ball carries the claim
        rows.push(if m + 1 < radii.len() { row.info() } else { row });
    }
    Ok(rows)
}

/// Scaling of the walk, survival in `D` and semigroup properties.
pub fn scaling(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let alpha = alpha_of(cfg)?;
    let a = alpha.value();
    let k = cfg.tol;
    let seed = cfg.seed;
    let small = cfg.budget(10, 100);
    let pol = StepPolicy::for_start(1.0);
    let mut rows = Vec::new();

    let t2: Vec<f64> = exit_times(alpha, 2.0, small, &pol.rescaled(alpha, 2.0), seed, block(1))?
        .iter()
        .map(|p| p.0)
        .collect();
    let t1: Vec<f64> =
        exit_times(alpha, 1.0, small, &pol, seed, block(2))?.iter().map(|p| p.0 * 2f64.powf(a)).collect();
    rows.push(Row::ks("tau_D from 2 ~ 2^alpha tau_D from 1", "exit-time scaling", ks_two_sample(&t2, &t1)?.p_value));

    let ts: Vec<f64> = (0..=8).map(|i| 10f64.powf(i as f64 / 4.0)).collect();
    let surv = survival_curve(alpha, 1.0, &ts, cfg.replicas, &pol, seed, block(3))?;
    let fit = survival_slope(&ts, &surv)?;
    rows.push(Row::within(
        "log-log slope of P_1(tau_D > t) on [1, 100] = -1/2",
        "half-line survival asymptotics",
        fit.slope,
        -0.5,
        0.1,
    ));

    let one = TestFunction::Constant(1.0);
    let mut b = 4;
    for &x in &[0.2, 1.0, -1.0] {
        for &t in &[0.1, 1.0] {
            let e = semigroup_apply(alpha, &one, t, x, small, &StepPolicy::for_start(x), seed, block(b))?;
            b += 1;
            rows.push(Row::at_most(format!("K_t 1({x}) <= 1 at t = {t}"), "subprobability", e.mean, 1.0, k * e.se));
        }
    }
    let h = TestFunction::power(a - 1.0);
    for &x in &[0.5, 1.0, 2.0] {
        for &t in &[0.1, 1.0] {
            let e = semigroup_apply(alpha, &h, t, x, small, &StepPolicy::for_start(x), seed, block(b))?;
            b += 1;
            rows.push(Row::at_most(
                format!("K_t h_(alpha-1)({x}) <= h_(alpha-1)({x}) at t = {t}"),
                "h_(alpha-1) supermedian",
                e.mean,
                h.eval(x),
                k * e.se,
            ));
        }
    }
    let kk = 2.0;
    let big: Vec<f64> =
        positions_at(alpha, kk, 1.0, small, &pol.rescaled(alpha, kk), seed, block(b))?.into_iter().flatten().collect();
    let unit: Vec<f64> = positions_at(alpha, 1.0, kk.powf(-a), small, &pol, seed, block(b + 1))?
        .into_iter()
        .flatten()
        .map(|y| kk * y)
        .collect();
    b += 2;
    rows.push(Row::ks(
        "X_1 from 2 ~ 2 X_(2^-alpha) from 1",
        "semigroup scaling K_t(kx, kA) = K_(t k^-alpha)(x, A)",
        ks_two_sample(&big, &unit)?.p_value,
    ));
    if a > 1.0 {
        let mut prev: Option<sv_process::EstimateCI> = None;
        for &x in &[0.5, 0.1, 0.02] {
            let e = semigroup_apply(alpha, &one, 1.0, x, small, &StepPolicy::for_start(x), seed, block(b))?;
            b += 1;
            if let Some(p) = prev {
                let d = p.minus(&e);
                rows.push(Row::at_least(
                    format!("K_1 1 decreases towards 0 at x = {x}"),
                    "mass vanishes near 0 for alpha > 1",
                    d.mean,
                    0.0,
                    k * d.se,
                ));
            }
            prev = Some(e);
        }
    }
    Ok(rows)
}

fn default_neumann_grid(cfg: &RunConfig) -> (Vec<f64>, Vec<f64>) {
    let g = cfg.grid.clone().unwrap_or_else(|| vec![-0.5, -1.0, -2.0, 0.5, 1.5]);
    (g.iter().copied().filter(|&x| x < 0.0).collect(), g.iter().copied().filter(|&x| x > 0.0).collect())
}

/// `G f` against the Neumann problem for the two-bump `f`. All budgets
/// scale with `replicas / 10^5`.
pub fn neumann(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let alpha = alpha_of(cfg)?;
    let f = two_bump();
    let (neg, pos) = default_neumann_grid(cfg);
    let scale = cfg.replicas as f64 / 1e5;
    let mut budget = NeumannBudget::new(cfg.seed);
    let sized = |n: usize, floor: usize| ((n as f64 * scale) as usize).max(floor);
    budget.replicas = sized(budget.replicas, 50);
    budget.dynkin_replicas = sized(budget.dynkin_replicas, 500);
    budget.min_replicas = sized(budget.min_replicas, 10);
    budget.pairs = sized(budget.pairs, 1000);
    budget.stream_lo = block(1);
    let rep = verify_neumann(alpha, &f, &neg, &pos, &budget)?;
    let mut rows = Vec::new();
    for r in &rep.rows {
        let (claim, anchor) = match r.radius {
            None => (format!("N(G f)({}) - f({}) = 0", r.x, r.x), "Neumann condition on D^c (one-step identity)"),
            Some(rad) => (
                format!("Dynkin(G f)({}) + f({}) = 0 at r = {rad}", r.x, r.x),
                "(-Delta)^(alpha/2) G f = f on D",
            ),
        };
        let status = match r.status {
            NStatus::Pass => Status::Pass,
            NStatus::Fail => Status::Fail,
            NStatus::Inconclusive => Status::Inconclusive,
        };
        rows.push(Row::new(
            claim,
            anchor,
            format!("{} (se {})", num(r.residual.mean), num(r.residual.se)),
            num(0.0),
            num(r.tolerance),
            status,
        ));
    }
    Ok(rows)
}

/// Resolvent identity `lambda U + N U = f` at `x = -1` and the bound
/// `|U_lambda f| <= ||f|| / lambda`.
pub fn resolvent(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let alpha = alpha_of(cfg)?;
    let f = two_bump();
    let k = cfg.tol;
    let lambda = cfg.lambda;
    let n = cfg.budget(10, 50);
    let pol = StepPolicy::for_start(1.0);
    // kernel mass beyond the grid well below the Monte Carlo resolution
    let ys = resolvent_grid(alpha, 0.01 / (n as f64).sqrt())?;
    let c = resolvent_residual(alpha, &f, lambda, -1.0, &ys, n, &pol, cfg.seed, block(40))?;
    let mut rows = Vec::new();
    let res = c.residual;
    rows.push(Row::new(
        format!("lambda U f(-1) + N(U f)(-1) - f(-1) = 0 at lambda = {lambda}"),
        "resolvent identity on D^c",
        format!("{} (se {})", num(res.mean), num(res.se)),
        num(0.0),
        num(k * res.se),
        Status::of(res.mean.abs() <= k * res.se),
    ));
    rows.push(Row::at_most(
        "quadrature tail beyond the grid is below one SE",
        "truncation of the N U quadrature",
        c.tail_bound,
        res.se,
        0.0,
    ));
    let bound = f.sup_abs().unwrap_or(f64::INFINITY) / lambda;
    let worst = c.grid.values.iter().chain(std::iter::once(&c.u_x)).map(|v| v.mean.abs() + k * v.se).fold(0.0, f64::max);
    rows.push(Row::at_most(
        "max |U f| + k SE <= ||f|| / lambda over the grid",
        "lambda-potential bound",
        worst,
        bound,
        0.0,
    ));
    Ok(rows)
}

/// Lifetime trichotomy: finite with `x0^alpha` scaling for alpha > 1,
/// escape for alpha < 1, oscillation at alpha = 1.
pub fn lifetime(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let alpha = alpha_of(cfg)?;
    let a = alpha.value();
    let k = cfg.tol;
    let mut rows = Vec::new();
    if a > 1.0 {
        let n = cfg.budget(20, 100);
        let opts = LifetimeOptions::default();
        let pol = StepPolicy::for_start(1.0);
        let one = estimate_lifetime(alpha, 1.0, n, &pol, &opts, cfg.seed, block(1))?;
        let two = estimate_lifetime(alpha, 2.0, n, &pol.rescaled(alpha, 2.0), &opts, cfg.seed, block(2))?;
        for (x0, e) in [(1.0, &one), (2.0, &two)] {
            rows.push(Row::new(
                format!("every replica from x0 = {x0} meets the tail bound"),
                "finite lifetime for alpha > 1",
                format!("{} accepted, {} rejected, max tail/sum {}", e.accepted, e.rejected, num(e.max_tail_ratio)),
                "tail/sum < 1e-3, 0 rejected",
                "0",
                Status::of(e.rejected == 0 && e.max_tail_ratio < opts.rel_tail),
            ));
        }
        let (ratio, se_log) = lifetime_ratio(&one, &two);
        let target = 2f64.powf(a);
        rows.push(Row::new(
            "lifetime(x0 = 2) / lifetime(x0 = 1) = 2^alpha",
            "lifetime scaling (p-th moment scale)",
            format!("{} (se of log {})", num(ratio), num(se_log)),
            num(target),
            format!("{} in log", num(k * se_log)),
            Status::of((ratio.ln() - target.ln()).abs() <= k * se_log),
        ));
    } else if a < 1.0 {
        let ens = simulate_ensemble(alpha, 1.0, 200, cfg.budget(200, 20), cfg.seed, block(3))?;
        let s = log_slope(&ens)?;
        rows.push(Row::new(
            "slope of ln V_n per reflection > 0",
            "infinite lifetime, escape for alpha < 1",
            format!("{} (se {})", num(s.mean), num(s.se)),
            "> 0",
            num(k * s.se),
            Status::of(s.lo(k) > 0.0),
        ));
    } else {
        let ens = simulate_ensemble(alpha, 1.0, 100, cfg.budget(100, 10), cfg.seed, block(4))?;
        let d = classify_drift(alpha, &ens)?;
        rows.push(Row::new(
            "drift classifier at alpha = 1",
            "recurrent oscillation at alpha = 1",
            drift_name(d),
            drift_name(Drift::Oscillates),
            "3 SE <= 0.05",
            Status::of(d == Drift::Oscillates),
        ));
    }
    Ok(rows)
}
