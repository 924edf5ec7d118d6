//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sv_process_cli::config::RunConfig;
use sv_process_cli::report::{Row, Status};
use sv_process_cli::suites;

type Suite = fn(&RunConfig) -> Result<Vec<Row>, sv_process_cli::CliError>;

fn cfg(alpha: f64) -> RunConfig {
    RunConfig { alpha, ..RunConfig::default() }
}

fn run(suite: Suite, c: &RunConfig) -> Vec<Row> {
    suite(c).unwrap_or_else(|e| panic!("suite failed at alpha = {}: {e}", c.alpha))
}

/// Rows whose claim starts with one of `prefixes`, with their alpha.
fn pick<'a>(alpha: f64, rows: &'a [Row], prefixes: &[&str]) -> Vec<(f64, &'a Row)> {
    rows.iter()
        .filter(|r| r.status != Status::Info && prefixes.iter().any(|p| r.claim.starts_with(p)))
        .map(|r| (alpha, r))
        .collect()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn judge(rows: &[(f64, &Row)], elapsed: Duration, limit: Duration) -> Outcome {
    let bad: Vec<String> = rows
        .iter()
        .filter(|(_, r)| r.status != Status::Pass)
        .map(|(a, r)| format!("[alpha {a}] {}: {} vs {} ({})", r.claim, r.estimate, r.target, r.status.as_str()))
        .collect();
    let slow = elapsed > limit;
    let pass = !rows.is_empty() && bad.is_empty() && !slow;
    let mut detail = format!("{} checks, {:.1} s", rows.len(), elapsed.as_secs_f64());
    if rows.is_empty() {
        detail.push_str("; no rows matched");
    }
    if slow {
        detail.push_str(&format!("; over the {} s limit", limit.as_secs()));
    }
    for b in bad {
        detail.push_str("; ");
        detail.push_str(&b);
    }
    Outcome { pass, detail }
}

const TWO_MIN: Duration = Duration::from_secs(120);

fn criterion(n: u32, name: &str, results: &mut Vec<bool>, f: impl FnOnce() -> Outcome) {
    let o = f();
    println!("{} criterion {n}: {name} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    results.push(o.pass);
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn run_bin(args: &[&str], out: &Path) {
    let st = Command::new(env!("CARGO_BIN_EXE_sv-process"))
        .args(args)
        .arg("--out")
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("binary runs");
    assert!(st.code().is_some_and(|c| c <= 1), "{args:?} exited with {st:?}");
}

fn main() {
    let mut results = Vec::new();

    criterion(1, "fractional moment rho(alpha)", &mut results, || {
        let (rows, t) = timed(|| {
            [0.6, 1.0, 1.5].iter().map(|&a| (a, run(suites::moments, &cfg(a)))).collect::<Vec<_>>()
        });
        let picked: Vec<_> = rows.iter().flat_map(|(a, r)| pick(*a, r, &["E_1 W^"])).collect();
        judge(&picked, t, 3 * TWO_MIN)
    });

    let critical = RunConfig { replicas: 1_000_000, ..cfg(1.0) };
    let (crit_rows, crit_t) = timed(|| run(suites::moments, &critical));

    criterion(2, "log-moment trichotomy", &mut results, || {
        let (rows, t) = timed(|| {
            [0.7, 1.3].iter().map(|&a| (a, run(suites::moments, &cfg(a)))).collect::<Vec<_>>()
        });
        let mut picked: Vec<_> = rows.iter().flat_map(|(a, r)| pick(*a, r, &["E_1 ln W"])).collect();
        picked.extend(pick(1.0, &crit_rows, &["E_1 ln W"]));
        judge(&picked, t + crit_t, 3 * TWO_MIN)
    });

    criterion(3, "critical log variance", &mut results, || {
        judge(&pick(1.0, &crit_rows, &["Var ln W"]), crit_t, Duration::from_secs(300))
    });

    let (harm, harm_t) = timed(|| [0.7, 1.5].iter().map(|&a| (a, run(suites::harmonic, &cfg(a)))).collect::<Vec<_>>());
    criterion(4, "harmonicity of h_(alpha-1)", &mut results, || {
        let p: Vec<_> = harm.iter().flat_map(|(a, r)| pick(*a, r, &["int P_D(1,y) |y|", "E_1 |X_(tau_D)|"])).collect();
        judge(&p, harm_t, 2 * TWO_MIN)
    });
    criterion(5, "Poisson kernel normalization and exit sampler", &mut results, || {
        let p: Vec<_> = harm.iter().flat_map(|(a, r)| pick(*a, r, &["int P_D(1,y) dy", "exit position"])).collect();
        judge(&p, harm_t, 2 * TWO_MIN)
    });
    criterion(6, "return-jump law", &mut results, || {
        let p: Vec<_> = harm.iter().flat_map(|(a, r)| pick(*a, r, &["return jump"])).collect();
        judge(&p, harm_t, 2 * TWO_MIN)
    });

    criterion(7, "Hardy constants and inequality", &mut results, || {
        let (rows, t) = timed(|| [0.5, 1.5].iter().map(|&a| (a, run(suites::hardy, &cfg(a)))).collect::<Vec<_>>());
        let p: Vec<_> = rows.iter().flat_map(|(a, r)| pick(*a, r, &["C_", "D_", "Hardy margin"])).collect();
        judge(&p, t, 2 * TWO_MIN)
    });

    criterion(8, "generator constants and Dynkin probe", &mut results, || {
        let (rows, t) = timed(|| [0.5, 1.5].iter().map(|&a| (a, run(suites::generator, &cfg(a)))).collect::<Vec<_>>());
        let p: Vec<_> = rows.iter().flat_map(|(a, r)| pick(*a, r, &["C(alpha", "Dynkin quotient"])).collect();
        judge(&p, t, 2 * TWO_MIN)
    });

    criterion(9, "lifetime trichotomy", &mut results, || {
        let (rows, t) =
            timed(|| [1.3, 0.7, 1.0].iter().map(|&a| (a, run(suites::lifetime, &cfg(a)))).collect::<Vec<_>>());
        let p: Vec<_> = rows.iter().flat_map(|(a, r)| pick(*a, r, &[""])).collect();
        judge(&p, t, 3 * TWO_MIN)
    });

    let (scal, scal_t) = timed(|| run(suites::scaling, &cfg(1.5)));
    criterion(10, "survival asymptotics", &mut results, || {
        judge(&pick(1.5, &scal, &["log-log slope"]), scal_t, TWO_MIN)
    });
    criterion(11, "semigroup properties", &mut results, || {
        judge(&pick(1.5, &scal, &["K_t 1(", "K_t h_(alpha-1)", "X_1 from 2"]), scal_t, TWO_MIN)
    });

    criterion(12, "Neumann verification", &mut results, || {
        let (rows, t) = timed(|| [0.7, 1.5].iter().map(|&a| (a, run(suites::neumann, &cfg(a)))).collect::<Vec<_>>());
        let p: Vec<_> = rows.iter().flat_map(|(a, r)| pick(*a, r, &["N(G f)", "Dynkin(G f)"])).collect();
        judge(&p, t, Duration::from_secs(600))
    });

    criterion(13, "resolvent identity", &mut results, || {
        let c = RunConfig { lambda: 1.0, ..cfg(1.3) };
        let (rows, t) = timed(|| run(suites::resolvent, &c));
        judge(&pick(1.3, &rows, &[""]), t, TWO_MIN)
    });

    criterion(14, "determinism of CSV outputs", &mut results, || {
        let t = Instant::now();
        let runs: [&[&str]; 3] = [
            &["trajectory", "--alpha", "1.5", "--seed", "7"],
            &["verify", "moments", "--alpha", "0.7", "--replicas", "20000"],
            &["constants", "--alpha", "1.5"],
        ];
        let files = ["trajectory.csv", "verify_moments.csv", "constants.csv"];
        let mut rows = Vec::new();
        for (args, file) in runs.iter().zip(files) {
            let a = tempfile::tempdir().unwrap();
            let b = tempfile::tempdir().unwrap();
            run_bin(args, a.path());
            run_bin(args, b.path());
            let x = std::fs::read(a.path().join(file)).unwrap();
            let y = std::fs::read(b.path().join(file)).unwrap();
            let same = !x.is_empty() && x == y;
            rows.push(Row::new(
                format!("{file} is byte-identical across runs"),
                "determinism",
                format!("{} bytes", x.len()),
                format!("{} bytes", y.len()),
                "0",
                Status::of(same),
            ));
        }
        let picked: Vec<_> = rows.iter().map(|r| (0.0, r)).collect();
        judge(&picked, t.elapsed(), TWO_MIN)
    });

    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
