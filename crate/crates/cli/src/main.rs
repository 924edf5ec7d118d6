use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sv_process::parallel::init_thread_pool;
use sv_process_cli::commands::{cmd_constants, cmd_trajectory, cmd_verify};
use sv_process_cli::config::{Overrides, RunConfig};
use sv_process_cli::suites::SUITES;
use sv_process_cli::{CliError, EXIT_USAGE};

/// Simulate and verify the reflected alpha-stable process on the
/// punctured line.
#[derive(Parser, Debug)]
#[command(name = "sv-process", version, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one trajectory and write trajectory.csv and trajectory.svg.
    Trajectory,
    /// Run a verification suite and write its report.
    Verify {
        /// One of: moments, harmonic, hardy, generator, scaling, neumann, lifetime.
        suite: String,
    },
    /// Print and write the table of constants for alpha.
    Constants,
}

#[derive(Args, Debug)]
struct Flags {
    /// Stability index in (0, 2).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Starting point (nonzero).
    #[arg(long, global = true)]
    x0: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Base Monte Carlo budget.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Time horizon for trajectories.
    #[arg(long, global = true)]
    t_max: Option<f64>,
    /// Reflection-count horizon for trajectories.
    #[arg(long, global = true)]
    n_reflections: Option<usize>,
    /// Resolvent parameter.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Comma-separated evaluation points.
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Standard errors allowed on Monte Carlo claims.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Plot log10 |X_t| in the trajectory figure.
    #[arg(long, global = true)]
    log_scale: bool,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            alpha: self.alpha,
            x0: self.x0,
            seed: self.seed,
            replicas: self.replicas,
            t_max: self.t_max,
            n_reflections: self.n_reflections,
            lambda: self.lambda,
            grid: self.grid.clone(),
            tol: self.tol,
            log_scale: self.log_scale,
            output_dir: self.out.clone(),
        }
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(cli.flags.config.as_deref(), &cli.flags.overrides())?;
    init_thread_pool();
    match &cli.command {
        Command::Trajectory => cmd_trajectory(&cfg),
        Command::Verify { suite } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown suite '{suite}'; expected one of {}",
                    SUITES.join(", ")
                )));
            }
            cmd_verify(&cfg, suite).map(|(_, code)| code)
        }
        Command::Constants => cmd_constants(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
