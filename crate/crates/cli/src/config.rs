//! Run configuration: defaults, TOML files and command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run depends on. Together with the program version it
/// determines every output byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub x0: f64,
    pub seed: u64,
    /// Base Monte Carlo budget; suites derive their sample sizes from it.
    pub replicas: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_reflections: Option<usize>,
    pub lambda: f64,
    /// Evaluation points for suites that take a grid (`constants`: the
    /// beta grid; `neumann`: the test points on both sides).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    /// Number of standard errors allowed on Monte Carlo claims.
    pub tol: f64,
    /// Plot `log10 |X_t|` in trajectory figures.
    pub log_scale: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 1.3,
            x0: 1.0,
            seed: 1,
            replicas: 100_000,
            t_max: None,
            n_reflections: None,
            lambda: 1.0,
            grid: None,
            tol: 3.0,
            log_scale: false,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub x0: Option<f64>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub t_max: Option<f64>,
    pub n_reflections: Option<usize>,
    pub lambda: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub log_scale: bool,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Defaults, then the file (if any), then the flags.
    pub fn resolve(file: Option<&Path>, o: &Overrides) -> Result<Self, CliError> {
        let mut c = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(v) = o.alpha {
            c.alpha = v;
        }
        if let Some(v) = o.x0 {
            c.x0 = v;
        }
        if let Some(v) = o.seed {
            c.seed = v;
        }
        if let Some(v) = o.replicas {
            c.replicas = v;
        }
        if o.t_max.is_some() {
            c.t_max = o.t_max;
        }
        if o.n_reflections.is_some() {
            c.n_reflections = o.n_reflections;
        }
        if let Some(v) = o.lambda {
            c.lambda = v;
        }
        if o.grid.is_some() {
            c.grid = o.grid.clone();
        }
        if let Some(v) = o.tol {
            c.tol = v;
        }
        c.log_scale |= o.log_scale;
        if let Some(v) = &o.output_dir {
            c.output_dir = v.clone();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Usage(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad("alpha must lie in (0, 2)");
        }
        if self.x0 == 0.0 || !self.x0.is_finite() {
            return bad("x0 must be a nonzero finite number");
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1");
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return bad("t-max must be positive and finite");
            }
        }
        if self.t_max.is_some() && self.n_reflections.is_some() {
            return bad("give at most one of t-max and n-reflections");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive and finite");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol must be positive and finite");
        }
        if let Some(g) = &self.grid {
            if g.is_empty() || g.iter().any(|v| !v.is_finite()) {
                return bad("grid must be a nonempty list of finite numbers");
            }
        }
        Ok(())
    }

    /// `replicas / d`, at least `floor`.
    pub fn budget(&self, d: usize, floor: usize) -> usize {
        (self.replicas / d).max(floor)
    }
}
