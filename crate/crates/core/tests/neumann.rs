use sv_process::analytic::{generator_constant, stable_constant};
use sv_process::neumann::{
    dynkin_grid, dynkin_probe, green_apply, green_dynkin, green_normal_residual, lambda_potential,
    potential_grid, resolvent_grid, resolvent_residual, LocalField,
};
use sv_process::quadrature::two_bump;
use sv_process::stats::EstimateCI;
use sv_process::{Alpha, Evaluable, McGrid, Side, StepPolicy, TestFunction};

fn al(a: f64) -> Alpha {
    Alpha::new(a).unwrap()
}

fn policy() -> StepPolicy {
    StepPolicy::for_start(1.0)
}

fn bump() -> TestFunction {
    TestFunction::bump(1.5, 0.5, 1.0).unwrap()
}

#[test]
fn one_step_identity_on_the_complement() {
    // f vanishes on D^c, so N G f(x) = f(x) = 0 there
    let (res, gx) = green_normal_residual(al(1.5), &bump(), -1.0, 4000, &policy(), 11, 0).unwrap();
    assert!(gx.mean > 0.0);
    assert!(res.mean.abs() < 4.0 * res.se, "residual {res:?}");
}

#[test]
fn green_of_nonnegative_f_is_nonnegative() {
    let f = bump();
    for &x in &[-2.0, 0.7, 1.5, 10.0] {
        let g = green_apply(al(1.5), &f, x, 1500, &policy(), 3, 0).unwrap();
        assert!(g.value.mean >= -3.0 * g.value.se, "x={x}: {:?}", g.value);
        assert!(g.truncation_bound >= 0.0);
    }
    // far away the process still reaches the support
    let g = green_apply(al(1.5), &f, 10.0, 3000, &policy(), 4, 0).unwrap();
    assert!(g.value.lo(3.0) > 0.0, "{:?}", g.value);
}

#[test]
fn green_rejects_bad_input() {
    let p = policy();
    assert!(green_apply(al(1.0), &bump(), 1.0, 10, &p, 1, 0).is_err());
    let touching = TestFunction::bump(0.5, 0.5, 1.0).unwrap();
    assert!(green_apply(al(1.5), &touching, 1.0, 10, &p, 1, 0).is_err());
    assert!(green_apply(al(1.5), &TestFunction::power(0.3), 1.0, 10, &p, 1, 0).is_err());
    assert!(lambda_potential(al(1.5), &bump(), 0.0, 1.0, 10, &p, 1, 0).is_err());
    assert!(lambda_potential(al(1.5), &bump(), -1.0, 1.0, 10, &p, 1, 0).is_err());
    // lambda > 0 tolerates a support through 0
    assert!(lambda_potential(al(1.5), &touching, 1.0, 1.0, 10, &p, 1, 0).is_ok());
}

#[test]
fn zero_function_gives_exact_zero() {
    let z = TestFunction::zero();
    let g = green_apply(al(0.7), &z, 1.0, 50, &policy(), 1, 0).unwrap();
    assert_eq!(g.value.mean, 0.0);
    assert_eq!(g.value.se, 0.0);
    let u = lambda_potential(al(1.3), &z, 2.0, -1.0, 50, &policy(), 1, 0).unwrap();
    assert_eq!(u.value.mean, 0.0);
}

#[test]
fn green_is_linear() {
    let f = bump();
    let g = TestFunction::bump(3.0, 0.5, 0.5).unwrap();
    let p = policy();
    let a = al(1.5);
    // scaling leaves every path unchanged
    let gf = green_apply(a, &f, 1.0, 800, &p, 5, 0).unwrap().value;
    let g2f = green_apply(a, &f.scaled(-2.5), 1.0, 800, &p, 5, 0).unwrap().value;
    assert!((g2f.mean + 2.5 * gf.mean).abs() <= 1e-10 * gf.mean.abs());
    // sums agree within joint errors on independent streams
    let n = 3000;
    let gf = green_apply(a, &f, 1.0, n, &p, 6, 0).unwrap().value;
    let gg = green_apply(a, &g, 1.0, n, &p, 7, 0).unwrap().value;
    let sum = TestFunction::sum(vec![f.scaled(2.0), g.scaled(-1.0)]);
    let gs = green_apply(a, &sum, 1.0, n, &p, 8, 0).unwrap().value;
    let combo = gf.scale(2.0).minus(&gg.scale(1.0));
    let diff = gs.minus(&combo);
    assert!(diff.mean.abs() < 4.0 * diff.se, "{diff:?}");
}

#[test]
fn green_decays_towards_the_origin_when_alpha_exceeds_one() {
    let f = bump();
    let a = al(1.5);
    let vals: Vec<EstimateCI> = [0.5, 0.1, 0.02]
        .iter()
        .enumerate()
        .map(|(i, &x)| green_apply(a, &f, x, 3000, &policy(), 20 + i as u64, 0).unwrap().value)
        .collect();
    for w in vals.windows(2) {
        let d = w[0].minus(&w[1]);
        assert!(d.lo(3.0) > 0.0, "{:?} vs {:?}", w[0], w[1]);
    }
    let far = green_apply(a, &f, 1.5, 3000, &policy(), 30, 0).unwrap().value;
    assert!(vals[2].mean < 0.25 * far.mean, "{:?} vs {:?}", vals[2], far);
}

#[test]
fn large_lambda_recovers_f() {
    let f = bump();
    let lambda = 100.0;
    let u = lambda_potential(al(1.3), &f, lambda, 1.5, 3000, &policy(), 9, 0).unwrap();
    let lu = u.value.scale(lambda);
    assert!((lu.mean - f.eval(1.5)).abs() < (3.0 * lu.se).max(0.05), "{lu:?}");
}

#[test]
fn lambda_potential_respects_sup_bound() {
    let plateau = TestFunction::table(vec![-20.0, -19.0, 19.0, 20.0], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let lambda = 1.0;
    for (i, &x) in [-3.0, -0.2, 0.4, 2.0].iter().enumerate() {
        let u = lambda_potential(al(1.3), &plateau, lambda, x, 1000, &policy(), 40 + i as u64, 0).unwrap();
        // each path integral is at most ||f|| / lambda, so the mean is too
        assert!(u.value.mean <= 1.0 / lambda * (1.0 + 1e-12), "{:?}", u.value);
        // near 0 the lifetime is short for alpha > 1
        if x.abs() > 1.0 {
            assert!(u.value.mean > 0.9, "{:?}", u.value);
        }
    }
    let f = two_bump();
    let sup = f.sup_abs().unwrap();
    for &lambda in &[0.5, 2.0] {
        let u = lambda_potential(al(0.7), &f, lambda, -1.0, 500, &policy(), 50, 0).unwrap();
        assert!(u.value.mean.abs() + 3.0 * u.value.se <= sup / lambda + 3.0 * u.value.se);
        assert!(u.value.mean.abs() <= sup / lambda);
    }
}

#[test]
fn resolvent_is_nonincreasing_in_lambda() {
    let f = bump();
    let vals: Vec<EstimateCI> = [0.5, 1.0, 2.0]
        .iter()
        .enumerate()
        .map(|(i, &l)| lambda_potential(al(1.3), &f, l, 1.0, 3000, &policy(), 60 + i as u64, 0).unwrap().value)
        .collect();
    for w in vals.windows(2) {
        let d = w[0].minus(&w[1]);
        assert!(d.mean > -3.0 * d.se, "{:?} vs {:?}", w[0], w[1]);
    }
}

#[test]
fn potential_grid_matches_pointwise_estimates() {
    let f = bump();
    let xs = [-1.0, 0.5, 2.0];
    let grid = potential_grid(al(1.3), &f, 1.0, &xs, 1500, &policy(), 70, 0).unwrap();
    for (i, &x) in xs.iter().enumerate() {
        let u = lambda_potential(al(1.3), &f, 1.0, x, 1500, &policy(), 71 + i as u64, 0).unwrap().value;
        let d = grid.values[i].minus(&u);
        assert!(d.mean.abs() < 4.0 * d.se, "x={x}: {d:?}");
    }
}

#[test]
fn resolvent_residual_is_small() {
    let f = two_bump();
    let c = resolvent_residual(al(1.3), &f, 1.0, -1.0, &resolvent_grid(al(1.3), 1e-3).unwrap(), 600, &policy(), 80, 0).unwrap();
    // the residual is reported net of f(x)
    assert!(c.residual.mean.abs() < 4.0 * c.residual.se + c.tail_bound, "{:?}", c.residual);
    assert!(c.tail_bound < 1e-3);
    assert!(resolvent_residual(al(1.3), &f, 1.0, 1.0, &resolvent_grid(al(1.3), 1e-3).unwrap(), 10, &policy(), 80, 0).is_err());
}

#[test]
fn resolvent_grid_meets_tail_target() {
    for &a in &[0.3, 0.7, 1.0, 1.7] {
        let alpha = al(a);
        let ys = resolvent_grid(alpha, 1e-4).unwrap();
        assert!(ys.windows(2).all(|w| w[1] > w[0]));
        let last = *ys.last().unwrap();
        assert!(last >= 1000.0);
        assert!(stable_constant(alpha) * last.powf(-a) / a <= 1e-4, "alpha={a}");
    }
    assert!(resolvent_grid(al(1.0), 0.0).is_err());
}

#[test]
fn dynkin_probe_on_powers_approaches_generator() {
    for &(a, beta) in &[(1.5, 0.25), (0.5, -0.25)] {
        let alpha = al(a);
        let u = TestFunction::power(beta);
        let target = -stable_constant(alpha) * generator_constant(alpha, beta, Side::D).unwrap();
        let mut last = None;
        for (m, &r) in [0.2, 0.1, 0.05].iter().enumerate() {
            let e = dynkin_probe(alpha, &u, 1.0, r, 200_000, 90, m as u64 * 1_000_000).unwrap();
            last = Some(e);
        }
        let e = last.unwrap();
        let tol = (3.0 * e.se).max(0.1 * target.abs());
        assert!((e.mean - target).abs() < tol, "alpha={a}: {e:?} vs {target}");
    }
}

#[test]
fn dynkin_probe_on_the_complement_is_closed_form() {
    let alpha = al(1.5);
    // h_(alpha - 1) is harmonic for the normal derivative
    let e = dynkin_probe(alpha, &TestFunction::power(0.5), -1.0, 0.5, 10, 1, 0).unwrap();
    assert_eq!(e.se, 0.0);
    assert!(e.mean.abs() < 1e-8, "{e:?}");
    let c = dynkin_probe(alpha, &TestFunction::Constant(2.0), 1.0, 0.5, 1000, 1, 0).unwrap();
    assert!(c.mean.abs() < 1e-12);
    let c = dynkin_probe(alpha, &TestFunction::Constant(2.0), -1.0, 0.5, 10, 1, 0).unwrap();
    assert!(c.mean.abs() < 1e-10);
    assert!(dynkin_probe(alpha, &TestFunction::Constant(2.0), 0.5, 0.5, 10, 1, 0).is_err());
    assert!(dynkin_probe(alpha, &TestFunction::Constant(2.0), -0.5, 0.7, 10, 1, 0).is_err());
}

#[test]
fn mc_grid_interpolates_linearly() {
    let xs = vec![-1.0, 0.0, 2.0];
    let vals = xs.iter().map(|&x| EstimateCI::exact(3.0 * x + 1.0)).collect();
    let g = McGrid::new(xs, vals).unwrap();
    assert!((g.eval(1.0) - 4.0).abs() < 1e-14);
    assert!((g.eval(-0.5) + 0.5).abs() < 1e-14);
    // held constant past the ends
    assert_eq!(g.eval(-7.0), -2.0);
    assert_eq!(g.eval(9.0), 7.0);
    assert!(McGrid::new(vec![1.0, 0.0], vec![EstimateCI::exact(0.0); 2]).is_err());
    assert!(McGrid::new(vec![0.0, 1.0], vec![EstimateCI::exact(0.0)]).is_err());
}

#[test]
fn local_field_reproduces_cubics() {
    let cubic = |y: f64| 0.3 * y * y * y - y * y + 2.0 * y - 0.5;
    let (x, w) = (1.5, 0.6);
    let ys = dynkin_grid(x, w);
    assert!(ys.windows(2).all(|p| p[0] < p[1]));
    assert!(ys.iter().all(|&y| y != 0.0));
    let vals = ys.iter().map(|&y| EstimateCI::exact(cubic(y))).collect();
    let field = LocalField::new(x, w, McGrid::new(ys, vals).unwrap()).unwrap();
    for &y in &[1.0, 1.3, 1.5, 1.77, 2.05] {
        assert!((field.eval(y) - cubic(y)).abs() < 1e-9, "y={y}");
        let lin: f64 = field.coefficients(y).iter().map(|&(i, c)| c * field.grid.values[i].mean).sum();
        assert!((lin - cubic(y)).abs() < 1e-9);
    }
}

#[test]
fn green_dynkin_matches_minus_f() {
    let f = two_bump();
    let x = 1.5;
    let (rows, field) = green_dynkin(al(0.7), &f, x, &[0.2, 0.1], 30_000, 100, 50_000, &policy(), 100, 0).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(field.half_width >= 0.2);
    let (_, e) = rows[1];
    assert!((e.mean + f.eval(x)).abs() < 4.0 * e.se + 0.1 * f.sup_abs().unwrap(), "{e:?}");
    assert!(green_dynkin(al(0.7), &f, x, &[1.6], 100, 10, 100, &policy(), 1, 0).is_err());
}
