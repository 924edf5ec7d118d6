//! The three commands. Each writes its outputs and the resolved config
//! into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sv_process::analytic::{
    generator_constant, hardy_constants, log_moment_sign, nu_halfline_mass, rho, stable_constant,
    GeneratorExponent,
};
use sv_process::export::{schema_header, trajectory_csv, trajectory_svg, SvgOptions};
use sv_process::walk::simulate_trajectory;
use sv_process::{Alpha, Horizon, RngStream, Side, StepPolicy};

use crate::config::RunConfig;
use crate::report::Report;
use crate::suites::run_suite;
use crate::{CliError, EXIT_FAIL, EXIT_PASS};

pub const CONFIG_FILE: &str = "config.toml";
const DEFAULT_REFLECTIONS: usize = 200;

fn prepare(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join(CONFIG_FILE), cfg.to_toml())?;
    Ok(cfg.output_dir.clone())
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    let p = dir.join(name);
    fs::write(&p, body)?;
    Ok(p)
}

/// Simulate one trajectory; writes `trajectory.csv` and `trajectory.svg`.
pub fn cmd_trajectory(cfg: &RunConfig) -> Result<i32, CliError> {
    let alpha = Alpha::new(cfg.alpha)?;
    let horizon = match (cfg.t_max, cfg.n_reflections) {
        (Some(t), _) => Horizon::TMax(t),
        (None, Some(n)) => Horizon::Reflections(n),
        (None, None) => Horizon::Reflections(DEFAULT_REFLECTIONS),
    };
    let policy = StepPolicy::for_start(cfg.x0);
    let mut rng = RngStream::new(cfg.seed, 0);
    let tr = simulate_trajectory(alpha, cfg.x0, horizon, &policy, &mut rng)?;
    let dir = prepare(cfg)?;
    write(&dir, "trajectory.csv", &trajectory_csv(&tr))?;
    let opts = SvgOptions {
        log_scale: cfg.log_scale,
        title: format!("alpha = {}, X_0 = {}, seed = {}", cfg.alpha, cfg.x0, cfg.seed),
        ..SvgOptions::default()
    };
    write(&dir, "trajectory.svg", &trajectory_svg(&tr, &opts))?;
    println!(
        "{} segments, {} reflections, end time {:e}, termination {:?}",
        tr.segments.len(),
        tr.n_reflections,
        tr.end_time,
        tr.termination
    );
    if let Some(w) = &tr.warning {
        eprintln!("warning: {w}");
    }
    Ok(EXIT_PASS)
}

/// Run one suite; writes `verify_<suite>.csv` and `verify_<suite>.md`.
pub fn cmd_verify(cfg: &RunConfig, suite: &str) -> Result<(Report, i32), CliError> {
    let rep = run_suite(suite, cfg)?;
    let dir = prepare(cfg)?;
    write(&dir, &format!("verify_{suite}.csv"), &rep.to_csv())?;
    let md = rep.to_markdown();
    write(&dir, &format!("verify_{suite}.md"), &md)?;
    print!("{md}");
    let code = if rep.passed() { EXIT_PASS } else { EXIT_FAIL };
    Ok((rep, code))
}

/// Format with 15 significant digits.
pub fn sig15(v: f64) -> String {
    format!("{v:.14e}")
}

/// Default beta grid: nine points from 0 to alpha - 1.
fn beta_grid(alpha: Alpha) -> Vec<f64> {
    let a = alpha.value();
    if alpha.is_critical() {
        return vec![0.0];
    }
    (0..=8).map(|i| (a - 1.0) * i as f64 / 8.0).collect()
}

/// The constants table as CSV rows `quantity,beta,value`.
pub fn constants_table(cfg: &RunConfig) -> Result<String, CliError> {
    let alpha = Alpha::new(cfg.alpha)?;
    let mut out = schema_header();
    out.push_str("\nquantity,beta,value\n");
    let mut row = |q: &str, beta: Option<f64>, v: f64| {
        let b = beta.map(sig15).unwrap_or_default();
        writeln!(out, "{q},{b},{}", sig15(v)).unwrap();
    };
    row("alpha", None, cfg.alpha);
    row("A_1_alpha", None, stable_constant(alpha));
    row("nu(1;D^c)", None, nu_halfline_mass(alpha, 1.0)?);
    row("nu(-1;D)", None, nu_halfline_mass(alpha, -1.0)?);
    row("rho", None, rho(alpha));
    row("sign E_1 ln W", None, log_moment_sign(alpha) as f64);
    let h = hardy_constants(alpha);
    row("C_alpha", None, h.c_alpha);
    row("D_alpha", None, h.d_alpha);
    let betas = cfg.grid.clone().unwrap_or_else(|| beta_grid(alpha));
    for beta in betas {
        GeneratorExponent::new(alpha, beta)?;
        row("C(alpha;beta;D)", Some(beta), generator_constant(alpha, beta, Side::D)?);
        row("C(alpha;beta;D^c)", Some(beta), generator_constant(alpha, beta, Side::Dc)?);
    }
    Ok(out)
}

/// Print the constants table and write `constants.csv`.
pub fn cmd_constants(cfg: &RunConfig) -> Result<i32, CliError> {
    let table = constants_table(cfg)?;
    let dir = prepare(cfg)?;
    write(&dir, "constants.csv", &table)?;
    print!("{table}");
    Ok(EXIT_PASS)
}
