//! Verification reports: one row per claim, written as CSV and Markdown.

use std::fmt::Write;

use sv_process::export::schema_header;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The estimate was too noisy to decide.
    Inconclusive,
    /// Shown for context; does not count towards the verdict.
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
            Status::Info => "info",
        }
    }

    pub fn of(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub claim: String,
    pub anchor: String,
    pub estimate: String,
    pub target: String,
    pub tolerance: String,
    pub status: Status,
}

/// Fixed-width scientific notation, 10 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.9e}")
}

impl Row {
    pub fn new(
        claim: impl Into<String>,
        anchor: impl Into<String>,
        estimate: impl Into<String>,
        target: impl Into<String>,
        tolerance: impl Into<String>,
        status: Status,
    ) -> Self {
        Self {
            claim: claim.into(),
            anchor: anchor.into(),
            estimate: estimate.into(),
            target: target.into(),
            tolerance: tolerance.into(),
            status,
        }
    }

    /// `|estimate - target| <= tol`.
    pub fn within(claim: impl Into<String>, anchor: impl Into<String>, est: f64, target: f64, tol: f64) -> Self {
        let pass = (est - target).abs() <= tol;
        Self::new(claim, anchor, num(est), num(target), num(tol), Status::of(pass))
    }

    /// `estimate <= bound + tol`.
    pub fn at_most(claim: impl Into<String>, anchor: impl Into<String>, est: f64, bound: f64, tol: f64) -> Self {
        let pass = est <= bound + tol;
        Self::new(claim, anchor, num(est), format!("<= {}", num(bound)), num(tol), Status::of(pass))
    }

    /// `estimate >= bound - tol`.
    pub fn at_least(claim: impl Into<String>, anchor: impl Into<String>, est: f64, bound: f64, tol: f64) -> Self {
        let pass = est >= bound - tol;
        Self::new(claim, anchor, num(est), format!(">= {}", num(bound)), num(tol), Status::of(pass))
    }

    /// KS test accepted at level 0.01.
    pub fn ks(claim: impl Into<String>, anchor: impl Into<String>, p_value: f64) -> Self {
        Self::new(claim, anchor, format!("p = {}", num(p_value)), "p > 0.01", "0.01", Status::of(p_value > 0.01))
    }

    pub fn info(mut self) -> Self {
        self.status = Status::Info;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub suite: String,
    pub alpha: f64,
    pub seed: u64,
    pub rows: Vec<Row>,
}

const COLUMNS: [&str; 6] = ["claim", "anchor", "estimate", "target", "tolerance", "status"];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    pub fn new(suite: &str, alpha: f64, seed: u64) -> Self {
        Self { suite: suite.to_string(), alpha, seed, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// True when no counted row failed or was inconclusive.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| matches!(r.status, Status::Pass | Status::Info))
    }

    pub fn to_csv(&self) -> String {
        let mut out = schema_header();
        out.push('\n');
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            let f = [&r.claim, &r.anchor, &r.estimate, &r.target, &r.tolerance, r.status.as_str()];
            let line: Vec<String> = f.iter().map(|s| csv_field(s)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# verify {} (alpha = {}, seed = {})\n", self.suite, self.alpha, self.seed).unwrap();
        writeln!(out, "| {} |", COLUMNS.join(" | ")).unwrap();
        writeln!(out, "|{}", "---|".repeat(COLUMNS.len())).unwrap();
        for r in &self.rows {
            let cells = [&r.claim, &r.anchor, &r.estimate, &r.target, &r.tolerance, r.status.as_str()];
            let cells: Vec<String> = cells.iter().map(|s| s.replace('|', "\\|")).collect();
            writeln!(out, "| {} |", cells.join(" | ")).unwrap();
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(out, "\nVerdict: {verdict}").unwrap();
        out
    }
}
