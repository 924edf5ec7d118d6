use std::f64::consts::PI;

use sv_process::analytic::{log_moment_variance_critical, rho};
use sv_process::chain::*;
use sv_process::stats::ks_two_sample;
use sv_process::{Alpha, RngStream};

fn al(a: f64) -> Alpha {
    Alpha::new(a).unwrap()
}

#[test]
fn fractional_moment_matches_rho() {
    for &a in &[0.6, 1.0, 1.5] {
        let alpha = al(a);
        let ens = simulate_ensemble(alpha, 1.0, 10, 10_000, 1, 0).unwrap();
        let st = chain_log_stats(alpha, &ens).unwrap();
        assert!(st.mean_w_pow.contains(rho(alpha), 3.0), "alpha={a}: {:?} vs {}", st.mean_w_pow, rho(alpha));
        assert_eq!(w_pow_target(alpha), rho(alpha));
    }
    // W^0 = 1 exactly at alpha = 1
    let ens = simulate_ensemble(al(1.0), 1.0, 5, 100, 2, 0).unwrap();
    let st = chain_log_stats(al(1.0), &ens).unwrap();
    assert_eq!(st.mean_w_pow.mean, 1.0);
    assert_eq!(rho(al(1.0)), 1.0);
}

#[test]
fn critical_log_variance() {
    let alpha = al(1.0);
    let ens = simulate_ensemble(alpha, 1.0, 100, 2000, 3, 0).unwrap();
    let st = chain_log_stats(alpha, &ens).unwrap();
    let target = 4.0 * PI * PI / 3.0;
    assert!((log_moment_variance_critical() - target).abs() < 1e-12);
    assert!(st.var_ln_w.contains(target, 3.0), "{:?}", st.var_ln_w);
    assert!(st.mean_ln_w.contains(0.0, 3.0), "{:?}", st.mean_ln_w);
}

#[test]
fn drift_trichotomy() {
    let cases = [(0.7, Drift::EscapesToInfinity), (1.0, Drift::Oscillates), (1.5, Drift::AbsorbedAtZero)];
    for (i, &(a, want)) in cases.iter().enumerate() {
        let ens = simulate_ensemble(al(a), 1.0, 100, 1000, 10 + i as u64, 0).unwrap();
        assert_eq!(classify_drift(al(a), &ens).unwrap(), want, "alpha={a}");
    }
    // short chains cannot certify oscillation
    let ens = simulate_ensemble(al(1.0), 1.0, 20, 10, 13, 0).unwrap();
    assert_eq!(classify_drift(al(1.0), &ens).unwrap(), Drift::Indeterminate);
    assert!(classify_drift(al(1.0), &[]).is_err());
}

#[test]
fn log_slope_sign_follows_alpha() {
    let up = log_slope(&simulate_ensemble(al(0.7), 1.0, 200, 300, 20, 0).unwrap()).unwrap();
    assert!(up.lo(3.0) > 0.0, "{up:?}");
    let down = log_slope(&simulate_ensemble(al(1.3), 1.0, 200, 300, 21, 0).unwrap()).unwrap();
    assert!(down.hi(3.0) < 0.0, "{down:?}");
}

#[test]
fn start_point_invariance() {
    let alpha = al(1.3);
    let n = 5;
    let rel = |x0: f64, seed| -> Vec<f64> {
        simulate_ensemble(alpha, x0, n, 10_000, seed, 0).unwrap().iter().map(|p| p.v(n) / x0).collect()
    };
    let ks = ks_two_sample(&rel(1.0, 30), &rel(3.0, 31)).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn holds_are_independent_of_later_jumps() {
    let ens = simulate_ensemble(al(1.2), 1.0, 2, 20_000, 40, 0).unwrap();
    let pairs: Vec<(f64, f64)> = ens.iter().map(|p| (p.log_hold[0], p.log_w[1])).collect();
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let r = sxy / (sxx * syy).sqrt();
    assert!(r.abs() < 3.0 / n.sqrt(), "r = {r}");
}

#[test]
fn ensemble_is_reproducible_and_exports() {
    let a = simulate_ensemble(al(0.9), 2.0, 4, 3, 50, 7).unwrap();
    let b = simulate_ensemble(al(0.9), 2.0, 4, 3, 50, 7).unwrap();
    assert_eq!(a, b);
    let one = simulate_chain(al(0.9), 2.0, 4, &mut RngStream::new(50, 8)).unwrap();
    assert_eq!(one, a[1]);
    let csv = ensemble_csv_rows(&a);
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.lines().all(|l| l.split(',').count() == 5));
    assert!(csv.starts_with("0,1,"));
}

#[test]
fn log_stats_need_samples() {
    assert!(chain_log_stats(al(1.0), &[]).is_err());
    let short = simulate_ensemble(al(1.0), 1.0, 1, 2, 0, 0).unwrap();
    assert!(chain_log_stats(al(1.0), &short).is_err());
}
