use sv_process::chain::simulate_ensemble;
use sv_process::export::*;
use sv_process::walk::simulate_trajectory;
use sv_process::{Alpha, Horizon, RngStream, StepPolicy};

fn traj(seed: u64) -> sv_process::Trajectory {
    let a = Alpha::new(1.3).unwrap();
    simulate_trajectory(a, 1.0, Horizon::Reflections(8), &StepPolicy::for_start(1.0), &mut RngStream::new(seed, 0)).unwrap()
}

#[test]
fn trajectory_csv_layout() {
    let tr = traj(1);
    let csv = trajectory_csv(&tr);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), schema_header());
    assert_eq!(lines.next().unwrap(), "t,position,segment_kind");
    let mut last_t = 0.0;
    let mut rows = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 3);
        let (t, x): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        assert!(t >= last_t);
        last_t = t;
        match f[2] {
            "walk" => assert!(x > 0.0),
            "hold" => assert!(x < 0.0),
            k => panic!("unknown kind {k}"),
        }
        rows += 1;
    }
    let want: usize = tr.segments.iter().map(|s| if s.level().is_some() { 2 } else { s.points.len() }).sum();
    assert_eq!(rows, want);
    // same seed, same bytes
    assert_eq!(csv, trajectory_csv(&traj(1)));
    assert_ne!(csv, trajectory_csv(&traj(2)));
}

#[test]
fn svg_has_one_mark_per_segment() {
    let tr = traj(3);
    for log_scale in [false, true] {
        let svg = trajectory_svg(&tr, &SvgOptions { log_scale, title: "a<b".into(), ..SvgOptions::default() });
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        let walks = tr.segments.iter().filter(|s| s.level().is_none()).count();
        let holds = tr.segments.len() - walks;
        assert_eq!(svg.matches("<polyline").count(), walks);
        assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), holds);
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        assert_eq!(svg.contains("log10"), log_scale);
    }
}

#[test]
fn chain_csv_layout() {
    let ens = simulate_ensemble(Alpha::new(0.8).unwrap(), 1.0, 3, 2, 4, 0).unwrap();
    let csv = chain_csv(&ens);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], schema_header());
    assert_eq!(lines[1], "replica,k,v,exit,hold");
    assert_eq!(lines.len(), 2 + 6);
}
