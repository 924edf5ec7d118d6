//! Test functions on the line: bumps, powers, tables and their sums.

use crate::error::{domain, Result};
use crate::numerics::Jet;

/// Anything that can be evaluated pointwise on the line.
pub trait Evaluable: Sync {
    fn eval(&self, x: f64) -> f64;

    /// Points where the function may fail to be smooth. Quadrature splits
    /// its ranges there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Piecewise-linear function through sorted nodes, zero outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(domain("a table needs at least two (x, y) pairs of equal length"));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain("table abscissae must be strictly increasing"));
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Index `i` with `xs[i] <= x < xs[i + 1]`, if inside the range.
    fn cell(&self, x: f64) -> Option<usize> {
        let n = self.xs.len();
        if !(x >= self.xs[0] && x <= self.xs[n - 1]) {
            return None;
        }
        let i = self.xs.partition_point(|&v| v <= x);
        Some(i.saturating_sub(1).min(n - 2))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.cell(x) {
            None => 0.0,
            Some(i) => {
                let (x0, x1) = (self.xs[i], self.xs[i + 1]);
                let w = (x - x0) / (x1 - x0);
                self.ys[i] + w * (self.ys[i + 1] - self.ys[i])
            }
        }
    }

    fn slope(&self, x: f64) -> f64 {
        match self.cell(x) {
            None => 0.0,
            Some(i) => (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `amplitude * exp(1 - 1 / (1 - ((x - center) / radius)^2))` on the support.
    Bump { center: f64, radius: f64, amplitude: f64 },
    /// `amplitude * |x|^exponent`.
    Power { exponent: f64, amplitude: f64 },
    Constant(f64),
    Table(Table),
    Sum(Vec<TestFunction>),
}

impl TestFunction {
    pub fn bump(center: f64, radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0) || !center.is_finite() || !amplitude.is_finite() {
            return Err(domain("bump needs a finite centre and amplitude and a positive radius"));
        }
        Ok(TestFunction::Bump { center, radius, amplitude })
    }

    /// `h_beta(x) = |x|^beta`.
    pub fn power(exponent: f64) -> Self {
        TestFunction::Power { exponent, amplitude: 1.0 }
    }

    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Ok(TestFunction::Table(Table::new(xs, ys)?))
    }

    pub fn sum(parts: Vec<TestFunction>) -> Self {
        TestFunction::Sum(parts)
    }

    pub fn zero() -> Self {
        TestFunction::Constant(0.0)
    }

    /// Multiply by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            TestFunction::Bump { center, radius, amplitude } => {
                TestFunction::Bump { center: *center, radius: *radius, amplitude: c * amplitude }
            }
            TestFunction::Power { exponent, amplitude } => {
                TestFunction::Power { exponent: *exponent, amplitude: c * amplitude }
            }
            TestFunction::Constant(v) => TestFunction::Constant(c * v),
            TestFunction::Table(t) => TestFunction::Table(Table {
                xs: t.xs.clone(),
                ys: t.ys.iter().map(|y| c * y).collect(),
            }),
            TestFunction::Sum(parts) => TestFunction::Sum(parts.iter().map(|p| p.scaled(c)).collect()),
        }
    }

    /// `u(x / k)` for `k > 0`, where that stays in the same family.
    pub fn dilated(&self, k: f64) -> Self {
        match self {
            TestFunction::Bump { center, radius, amplitude } => {
                TestFunction::Bump { center: k * center, radius: k * radius, amplitude: *amplitude }
            }
            TestFunction::Power { exponent, amplitude } => {
                TestFunction::Power { exponent: *exponent, amplitude: amplitude * k.powf(-exponent) }
            }
            TestFunction::Constant(v) => TestFunction::Constant(*v),
            TestFunction::Table(t) => TestFunction::Table(Table {
                xs: t.xs.iter().map(|x| k * x).collect(),
                ys: t.ys.clone(),
            }),
            TestFunction::Sum(parts) => TestFunction::Sum(parts.iter().map(|p| p.dilated(k)).collect()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Bump { center, radius, amplitude } => {
                let r = (x - center) / radius;
                let q = (1.0 - r) * (1.0 + r);
                if q <= 0.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / q).exp()
                }
            }
            TestFunction::Power { exponent, amplitude } => {
                if *exponent == 0.0 {
                    *amplitude
                } else {
                    amplitude * x.abs().powf(*exponent)
                }
            }
            TestFunction::Constant(v) => *v,
            TestFunction::Table(t) => t.eval(x),
            TestFunction::Sum(parts) => parts.iter().map(|p| p.eval(x)).sum(),
        }
    }

    /// Taylor jet at `x`, or `None` where the function is not smooth.
    pub fn jet<const N: usize>(&self, x: f64) -> Option<Jet<N>> {
        match self {
            TestFunction::Bump { center, radius, amplitude } => {
                let r = Jet::<N>::linear((x - center) / radius, 1.0 / radius);
                let r0 = r.value();
                if (1.0 - r0) * (1.0 + r0) <= 0.0 {
                    return Some(Jet::zero());
                }
                let q = -(r * r) + 1.0;
                let psi = -q.recip() + 1.0;
                Some(psi.exp().scale(*amplitude))
            }
            TestFunction::Power { exponent, amplitude } => {
                if *exponent == 0.0 {
                    return Some(Jet::constant(*amplitude));
                }
                if x == 0.0 {
                    return None;
                }
                let ax = Jet::<N>::linear(x.abs(), x.signum());
                Some(ax.powf(*exponent).scale(*amplitude))
            }
            TestFunction::Constant(v) => Some(Jet::constant(*v)),
            TestFunction::Table(t) => {
                if t.xs.binary_search_by(|v| v.total_cmp(&x)).is_ok() {
                    None
                } else {
                    Some(Jet::linear(t.eval(x), t.slope(x)))
                }
            }
            TestFunction::Sum(parts) => {
                let mut acc = Jet::zero();
                for p in parts {
                    acc = acc + p.jet::<N>(x)?;
                }
                Some(acc)
            }
        }
    }

    /// Whether the function is twice continuously differentiable near `x`.
    pub fn is_c2_at(&self, x: f64) -> bool {
        match self {
            TestFunction::Table(t) => {
                // linear interpolation: kinks at the nodes, and the second
                // derivative jumps there, so only cell interiors qualify
                t.xs.binary_search_by(|v| v.total_cmp(&x)).is_err()
            }
            TestFunction::Power { exponent, .. } => *exponent == 0.0 || x != 0.0,
            TestFunction::Sum(parts) => parts.iter().all(|p| p.is_c2_at(x)),
            _ => true,
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = match self {
            TestFunction::Bump { center, radius, .. } => vec![center - radius, center + radius],
            TestFunction::Power { exponent, .. } if *exponent != 0.0 => vec![0.0],
            TestFunction::Table(t) => t.xs.clone(),
            TestFunction::Sum(parts) => parts.iter().flat_map(|p| p.breakpoints()).collect(),
            _ => Vec::new(),
        };
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Closed intervals covering the support, merged and sorted. `None`
    /// when the support is unbounded.
    pub fn support(&self) -> Option<Vec<(f64, f64)>> {
        let mut iv = match self {
            TestFunction::Bump { center, radius, amplitude } => {
                if *amplitude == 0.0 {
                    Vec::new()
                } else {
                    vec![(center - radius, center + radius)]
                }
            }
            TestFunction::Power { amplitude, .. } => {
                if *amplitude == 0.0 {
                    Vec::new()
                } else {
                    return None;
                }
            }
            TestFunction::Constant(v) => {
                if *v == 0.0 {
                    Vec::new()
                } else {
                    return None;
                }
            }
            TestFunction::Table(t) => vec![(t.xs[0], t.xs[t.xs.len() - 1])],
            TestFunction::Sum(parts) => {
                let mut all = Vec::new();
                for p in parts {
                    all.extend(p.support()?);
                }
                all
            }
        };
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in iv {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Some(merged)
    }

    /// Whether the support stays away from 0.
    pub fn avoids_origin(&self) -> bool {
        match self.support() {
            None => false,
            Some(iv) => iv.iter().all(|&(lo, hi)| lo > 0.0 || hi < 0.0),
        }
    }

    /// An upper bound on `sup |u|`; exact for single bumps and for sums of
    /// bumps with disjoint supports. `None` if unbounded.
    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            TestFunction::Bump { amplitude, .. } => Some(amplitude.abs()),
            TestFunction::Power { exponent, amplitude } => {
                if *exponent == 0.0 || *amplitude == 0.0 {
                    Some(amplitude.abs())
                } else {
                    None
                }
            }
            TestFunction::Constant(v) => Some(v.abs()),
            TestFunction::Table(t) => Some(t.ys.iter().fold(0.0, |m: f64, y| m.max(y.abs()))),
            TestFunction::Sum(parts) => {
                let sups: Option<Vec<f64>> = parts.iter().map(|p| p.sup_abs()).collect();
                let sups = sups?;
                let supports: Option<Vec<Vec<(f64, f64)>>> = parts.iter().map(|p| p.support()).collect();
                let disjoint = supports.is_some_and(|s| {
                    let mut all: Vec<(f64, f64)> = s.into_iter().flatten().collect();
                    all.sort_by(|a, b| a.0.total_cmp(&b.0));
                    all.windows(2).all(|w| w[0].1 < w[1].0)
                });
                if disjoint {
                    Some(sups.into_iter().fold(0.0, f64::max))
                } else {
                    Some(sups.into_iter().sum())
                }
            }
        }
    }
}

impl Evaluable for TestFunction {
    fn eval(&self, x: f64) -> f64 {
        TestFunction::eval(self, x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        TestFunction::breakpoints(self)
    }
}

impl<F: Fn(f64) -> f64 + Sync> Evaluable for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}
