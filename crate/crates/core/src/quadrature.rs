//! Deterministic quadrature of the singular integrals on test functions.
//!
//! * `(-Delta)^(alpha/2) u(x)` through the symmetric second difference
//! * the nonlocal normal derivative `N u(x)` for `x < 0`
//! * the energy `E_D(u, v)` over `(R x R) \ (D^c x D^c)`
//! * the two sides of the Hardy inequality
//!
//! Near the diagonal the integrands are replaced by their Taylor series,
//! obtained exactly from jets, so no small differences are ever formed.

use crate::analytic::{hardy_constants, stable_constant, Alpha};
use crate::error::{domain, Error, Result};
use crate::numerics::{Jet, TanhSinh};
use crate::testfn::{Evaluable, TestFunction};

/// Default accuracy target of the public routines.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Jet length used for Taylor expansions around the diagonal.
const JET: usize = 12;

fn rule(tol: f64) -> TanhSinh {
    TanhSinh { abs_tol: tol * 1e-2, rel_tol: tol * 1e-2, max_level: 11 }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Breaks in `(lo, hi)`, with `lo` and `hi` added.
fn breaks_between(lo: f64, hi: f64, pts: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut b: Vec<f64> = pts.into_iter().filter(|&p| p > lo && p < hi).collect();
    b.push(lo);
    b.push(hi);
    sorted_unique(b)
}

/// Where `x + sign * y` meets a breakpoint at an end of `[w0, w1]`, the
/// argument is rebuilt from that breakpoint and the exact endpoint
/// distance, so nodes next to a singular point never round onto it.
enum Anchor {
    Free,
    Lo(f64),
    Hi(f64),
}

impl Anchor {
    fn new(bps: &[f64], x: f64, sign: f64, w: &[f64]) -> Self {
        for &b in bps {
            let d = sign * (b - x);
            if d == w[1] {
                return Anchor::Hi(b);
            }
            if d == w[0] {
                return Anchor::Lo(b);
            }
        }
        Anchor::Free
    }

    fn at(&self, x: f64, sign: f64, y: f64, l: f64, r: f64) -> f64 {
        match *self {
            Anchor::Free => x + sign * y,
            Anchor::Hi(b) => b - sign * r,
            Anchor::Lo(b) => b + sign * l,
        }
    }
}

/// Checked accumulation of piecewise integrals.
struct Sum {
    value: f64,
    ok: bool,
}

impl Sum {
    fn new() -> Self {
        Sum { value: 0.0, ok: true }
    }

    fn add(&mut self, out: crate::numerics::QuadOutput) {
        self.value += out.value;
        self.ok &= out.converged && out.value.is_finite();
    }

    fn finish(self, what: &str) -> Result<f64> {
        if self.ok {
            Ok(self.value)
        } else {
            Err(Error::Quadrature(format!("{what}: integrand did not converge")))
        }
    }
}

/// `(-Delta)^(alpha/2) u(x) = -A int_0^inf (u(x+y) + u(x-y) - 2u(x)) y^(-1-alpha) dy`.
pub fn fractional_laplacian_pv(alpha: Alpha, u: &TestFunction, x: f64) -> Result<f64> {
    fractional_laplacian_pv_tol(alpha, u, x, DEFAULT_TOL)
}

pub fn fractional_laplacian_pv_tol(alpha: Alpha, u: &TestFunction, x: f64, tol: f64) -> Result<f64> {
    if !u.is_c2_at(x) {
        return Err(domain(format!("test function is not C^2 at x = {x}")));
    }
    let jet: Jet<JET> = u.jet(x).ok_or_else(|| domain(format!("test function is not smooth at x = {x}")))?;
    let a = alpha.value();
    let bps = u.breakpoints();
    let dists: Vec<f64> = bps.iter().map(|b| (x - b).abs()).filter(|&d| d > 0.0).collect();
    let nearest = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = bps.iter().fold(x.abs().max(1.0), |m, b| m.max(b.abs()));
    let y_t = 0.1 * nearest.min(scale);

    // Taylor part: 2 sum_k c_{2k} int_0^{y_t} y^(2k - 1 - alpha) dy
    let mut taylor = 0.0;
    let mut k = 2;
    while k < JET {
        let e = k as f64 - a;
        taylor += 2.0 * jet.0[k] * y_t.powf(e) / e;
        k += 2;
    }

    let u0 = jet.value();
    let q = rule(tol);
    let kernel = |y: f64| (u.eval(x + y) + u.eval(x - y) - 2.0 * u0) * y.powf(-1.0 - a);
    let bounded = u.support().is_some();
    let m = 10.0 * scale.max(y_t);
    let mut sum = Sum::new();
    let breaks = breaks_between(y_t, m, dists.iter().copied());
    for w in breaks.windows(2) {
        let (plus, minus) = (Anchor::new(&bps, x, 1.0, w), Anchor::new(&bps, x, -1.0, w));
        sum.add(q.integrate(w[0], w[1], |y, l, r| {
            let s = u.eval(plus.at(x, 1.0, y, l, r)) + u.eval(minus.at(x, -1.0, y, l, r));
            (s - 2.0 * u0) * y.powf(-1.0 - a)
        }));
    }
    let mut total = sum.finish("fractional laplacian")? + taylor;
    // beyond m every breakpoint is behind us
    if bounded {
        // u(x +- y) = 0 there
        total += -2.0 * u0 * m.powf(-a) / a;
    } else {
        let tail = q.integrate_tail(m, kernel);
        if !tail.converged || !tail.value.is_finite() {
            return Err(Error::Quadrature("fractional laplacian tail diverges".into()));
        }
        total += tail.value;
    }
    Ok(-stable_constant(alpha) * total)
}

/// `N u(x) = int_D (u(x) - u(y)) nu(x, y) dy` for `x < 0`.
pub fn nonlocal_normal_derivative(alpha: Alpha, u: &dyn Evaluable, x: f64) -> Result<f64> {
    nonlocal_normal_derivative_tol(alpha, u, x, DEFAULT_TOL)
}

pub fn nonlocal_normal_derivative_tol(alpha: Alpha, u: &dyn Evaluable, x: f64, tol: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(domain("normal derivative is defined for x < 0"));
    }
    let a = alpha.value();
    let amp = stable_constant(alpha);
    let ax = -x;
    let bps: Vec<f64> = u.breakpoints().into_iter().filter(|&b| b > 0.0).collect();
    let m = 10.0 * bps.iter().fold(ax.max(1.0), |m, b| m.max(*b));
    check_growth(a, u, m)?;
    let q = rule(tol);
    let integrand = |y: f64| u.eval(y) * (y + ax).powf(-1.0 - a);
    let mut sum = Sum::new();
    let mut pts = bps.clone();
    pts.push(ax);
    for w in breaks_between(0.0, m, pts).windows(2) {
        sum.add(q.integrate(w[0], w[1], |y, _, _| integrand(y)));
    }
    sum.add(q.integrate_tail(m, integrand));
    let inner = sum.finish("normal derivative")?;
    Ok(amp / a * ax.powf(-a) * u.eval(x) - amp * inner)
}

/// Reject `u` whose growth makes `int u(y) y^(-1-alpha) dy` diverge, by
/// the log-log slope of `|u|` over several decades beyond `m`.
fn check_growth(a: f64, u: &dyn Evaluable, m: f64) -> Result<()> {
    let ys: Vec<f64> = (0..8).map(|j| m * 10f64.powi(j)).collect();
    let vals: Vec<f64> = ys.iter().map(|&y| u.eval(y).abs()).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(domain("test function is not finite on D"));
    }
    let (y0, y1) = (ys[5], ys[7]);
    let (v0, v1) = (vals[5], vals[7]);
    if v0 > 0.0 && v1 > 0.0 {
        let slope = (v1 / v0).ln() / (y1 / y0).ln();
        if slope >= a - 1e-9 {
            return Err(domain(format!(
                "growth exponent {slope:.3} >= alpha: the normal derivative diverges"
            )));
        }
    }
    Ok(())
}

/// Support of a test function, required to be bounded and away from 0.
fn punctured_support(u: &TestFunction) -> Result<Vec<(f64, f64)>> {
    let s = u.support().ok_or_else(|| domain("test function must have bounded support"))?;
    if s.iter().any(|&(lo, hi)| lo <= 0.0 && hi >= 0.0) {
        return Err(domain("test function support must avoid 0"));
    }
    Ok(s)
}

/// `E_D(u, v)`: half the double integral of `(u(x)-u(y))(v(x)-v(y)) nu(x,y)`
/// over `(R x R) \ (D^c x D^c)`.
pub fn dirichlet_form(alpha: Alpha, u: &TestFunction, v: &TestFunction) -> Result<f64> {
    dirichlet_form_tol(alpha, u, v, DEFAULT_TOL)
}

pub fn dirichlet_form_tol(alpha: Alpha, u: &TestFunction, v: &TestFunction, tol: f64) -> Result<f64> {
    let su = punctured_support(u)?;
    let sv = punctured_support(v)?;
    if su.is_empty() || sv.is_empty() {
        return Ok(0.0);
    }
    Ok(interior_part(alpha, u, v, &su, &sv, tol)? + crossing_part(alpha, u, v, &su, &sv, tol)?)
}

fn positive_parts(s: &[(f64, f64)]) -> Vec<(f64, f64)> {
    s.iter().copied().filter(|iv| iv.0 > 0.0).collect()
}

fn negative_parts(s: &[(f64, f64)]) -> Vec<(f64, f64)> {
    s.iter().copied().filter(|iv| iv.1 < 0.0).collect()
}

/// The `D x D` half: `int_0^inf A h^(-1-alpha) I(h) dh`, with
/// `I(h) = int_{x>0} (u(x+h)-u(x)) (v(x+h)-v(x)) dx`.
fn interior_part(
    alpha: Alpha,
    u: &TestFunction,
    v: &TestFunction,
    su: &[(f64, f64)],
    sv: &[(f64, f64)],
    tol: f64,
) -> Result<f64> {
    let pu = positive_parts(su);
    let pv = positive_parts(sv);
    if pu.is_empty() || pv.is_empty() {
        return Ok(0.0);
    }
    let a = alpha.value();
    let amp = stable_constant(alpha);
    let q = rule(tol);
    let edges: Vec<f64> = sorted_unique(pu.iter().chain(&pv).flat_map(|&(l, h)| [l, h]).collect());
    let lo = edges[0];
    let hi = edges[edges.len() - 1];
    let min_width = pu.iter().chain(&pv).map(|&(l, h)| h - l).fold(f64::INFINITY, f64::min);
    let h_s = 1e-3 * min_width.min(lo);

    // small h: I(h) = h^2 int u'v' - h^4 / 12 int u''v'' + O(h^6)
    let mut j0 = Sum::new();
    let mut j2 = Sum::new();
    for w in edges.windows(2) {
        j0.add(q.integrate(w[0], w[1], |x, _, _| {
            let (ju, jv): (Jet<3>, Jet<3>) = (u.jet(x).unwrap_or(Jet::zero()), v.jet(x).unwrap_or(Jet::zero()));
            ju.0[1] * jv.0[1]
        }));
        j2.add(q.integrate(w[0], w[1], |x, _, _| {
            let (ju, jv): (Jet<3>, Jet<3>) = (u.jet(x).unwrap_or(Jet::zero()), v.jet(x).unwrap_or(Jet::zero()));
            4.0 * ju.0[2] * jv.0[2]
        }));
    }
    let j0 = j0.finish("energy near the diagonal")?;
    let j2 = j2.finish("energy near the diagonal")?;
    let near = amp * (j0 * h_s.powf(2.0 - a) / (2.0 - a) - j2 / 12.0 * h_s.powf(4.0 - a) / (4.0 - a));

    // I(h) by quadrature in x with the moving breakpoints e - h
    let i_of_h = |h: f64| -> f64 {
        let mut pts = edges.clone();
        pts.extend(edges.iter().map(|e| e - h));
        let b = breaks_between(lo.min((lo - h).max(0.0)).max(0.0), hi, pts);
        let mut s = 0.0;
        for w in b.windows(2) {
            s += q
                .integrate(w[0], w[1], |x, _, _| (u.eval(x + h) - u.eval(x)) * (v.eval(x + h) - v.eval(x)))
                .value;
        }
        s
    };
    // beyond h = hi both shifted terms vanish on x > 0
    let mut hb: Vec<f64> = vec![h_s, hi];
    for &e in &edges {
        for &f in &edges {
            if f - e > h_s {
                hb.push(f - e);
            }
        }
        if e > h_s {
            hb.push(e);
        }
    }
    let hb = sorted_unique(hb.into_iter().filter(|&h| h >= h_s && h <= hi).collect());
    let mut mid = Sum::new();
    for w in hb.windows(2) {
        mid.add(q.integrate(w[0], w[1], |h, _, _| i_of_h(h) * h.powf(-1.0 - a)));
    }
    let mid = amp * mid.finish("energy on D x D")?;

    let mut p0 = Sum::new();
    for w in edges.windows(2) {
        p0.add(q.integrate(w[0], w[1], |x, _, _| u.eval(x) * v.eval(x)));
    }
    let far = amp * p0.finish("energy tail")? * hi.powf(-a) / a;
    Ok(near + mid + far)
}

/// The `D x D^c` part, counted once (it appears twice in the symmetric
/// double integral, which is halved).
fn crossing_part(
    alpha: Alpha,
    u: &TestFunction,
    v: &TestFunction,
    su: &[(f64, f64)],
    sv: &[(f64, f64)],
    tol: f64,
) -> Result<f64> {
    let a = alpha.value();
    let amp = stable_constant(alpha);
    let q = rule(tol);
    let mut sum = Sum::new();
    // diagonal terms: int u v nu(x, opposite half-line)
    let mut all: Vec<(f64, f64)> = su.to_vec();
    all.extend_from_slice(sv);
    let edges = sorted_unique(all.iter().flat_map(|&(l, h)| [l, h]).collect());
    for w in edges.windows(2) {
        if w[0] < 0.0 && w[1] > 0.0 {
            continue;
        }
        sum.add(q.integrate(w[0], w[1], |x, _, _| u.eval(x) * v.eval(x) * amp / a * x.abs().powf(-a)));
    }
    let diag = sum.finish("energy across the origin")?;
    let cross = |f: &TestFunction, sf: &[(f64, f64)], g: &TestFunction, sg: &[(f64, f64)]| -> Result<f64> {
        let mut sum = Sum::new();
        for &(xl, xh) in &positive_parts(sf) {
            for &(yl, yh) in &negative_parts(sg) {
                sum.add(q.integrate(xl, xh, |x, _, _| {
                    let fx = f.eval(x);
                    if fx == 0.0 {
                        return 0.0;
                    }
                    fx * q.integrate(yl, yh, |y, _, _| g.eval(y) * (x - y).powf(-1.0 - a)).value
                }));
            }
        }
        Ok(amp * sum.finish("energy cross term")?)
    };
    Ok(diag - cross(u, su, v, sv)? - cross(v, sv, u, su)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// `int_D u^2 |x|^(-alpha)`.
    pub weight_d: f64,
    /// `int_{D^c} u^2 |x|^(-alpha)`.
    pub weight_dc: f64,
}

/// `int u^2 |x|^(-alpha)` over one half-line.
pub fn hardy_weight(alpha: Alpha, u: &TestFunction, positive: bool) -> Result<f64> {
    let s = punctured_support(u)?;
    let a = alpha.value();
    let q = rule(DEFAULT_TOL);
    let mut sum = Sum::new();
    let edges = sorted_unique(s.iter().flat_map(|&(l, h)| [l, h]).chain(u.breakpoints()).collect());
    for w in edges.windows(2) {
        let keep = if positive { w[0] >= 0.0 } else { w[1] <= 0.0 };
        if keep {
            sum.add(q.integrate(w[0], w[1], |x, _, _| {
                let ux = u.eval(x);
                ux * ux * x.abs().powf(-a)
            }));
        }
    }
    sum.finish("hardy weight")
}

/// Both sides of `E[u] >= (C + D) int_D u^2 |x|^-alpha + C int_{D^c} u^2 |x|^-alpha`.
pub fn hardy_check(alpha: Alpha, u: &TestFunction) -> Result<HardyCheck> {
    if alpha.is_critical() {
        return Err(domain("the Hardy inequality degenerates at alpha = 1"));
    }
    let h = hardy_constants(alpha);
    let lhs = dirichlet_form(alpha, u, u)?;
    let weight_d = hardy_weight(alpha, u, true)?;
    let weight_dc = hardy_weight(alpha, u, false)?;
    let rhs = (h.c_alpha + h.d_alpha) * weight_d + h.c_alpha * weight_dc;
    Ok(HardyCheck { lhs, rhs, margin: lhs - rhs, weight_d, weight_dc })
}

/// Test functions used by the Hardy checks and the tables: a bump in `D`,
/// its mirror image, and a two-bump sum straddling the origin.
pub fn bundled_test_functions() -> Vec<(&'static str, TestFunction)> {
    vec![
        ("bump(1.5, 0.5)", TestFunction::Bump { center: 1.5, radius: 0.5, amplitude: 1.0 }),
        ("bump(-1.5, 0.5)", TestFunction::Bump { center: -1.5, radius: 0.5, amplitude: 1.0 }),
        ("two-bump", two_bump()),
    ]
}

/// `bump(1.5, 0.75) + 0.5 bump(-1.5, 0.9)`.
pub fn two_bump() -> TestFunction {
    TestFunction::Sum(vec![
        TestFunction::Bump { center: 1.5, radius: 0.75, amplitude: 1.0 },
        TestFunction::Bump { center: -1.5, radius: 0.9, amplitude: 0.5 },
    ])
}
