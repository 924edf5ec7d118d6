//! CSV and SVG output for trajectories and chains.
//!
//! Every CSV starts with a versioned header comment so that fixtures can
//! be checked against the layout they were written with. Numbers are
//! printed in Rust's shortest round-trip form, which keeps output
//! byte-identical across runs with the same inputs.

use std::fmt::Write;

use crate::chain::{ensemble_csv_rows, ChainPath};
use crate::walk::{SegmentKind, Trajectory};

/// Version of the CSV layouts written by this module.
pub const SCHEMA: u32 = 1;

/// `# sv-process v<version> schema=<n>`.
pub fn schema_header() -> String {
    format!("# sv-process v{} schema={}", env!("CARGO_PKG_VERSION"), SCHEMA)
}

pub fn kind_name(kind: SegmentKind) -> &'static str {
    match kind {
        SegmentKind::Walk => "walk",
        SegmentKind::Hold => "hold",
    }
}

/// Trajectory as `t,position,segment_kind` rows. A hold contributes its
/// two end points.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = schema_header();
    out.push_str("\nt,position,segment_kind\n");
    for seg in &tr.segments {
        let kind = kind_name(seg.kind);
        match seg.kind {
            SegmentKind::Walk => {
                for &(t, x) in &seg.points {
                    writeln!(out, "{t},{x},{kind}").unwrap();
                }
            }
            SegmentKind::Hold => {
                let z = seg.points[0].1;
                writeln!(out, "{},{z},{kind}", seg.t_start).unwrap();
                writeln!(out, "{},{z},{kind}", seg.t_end).unwrap();
            }
        }
    }
    out
}

/// Chain ensemble as `replica,k,V_k,exit_k,hold_k` rows.
pub fn chain_csv(ensemble: &[ChainPath]) -> String {
    let mut out = schema_header();
    out.push_str("\nreplica,k,v,exit,hold\n");
    out.push_str(&ensemble_csv_rows(ensemble));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    /// Plot `log10 |X_t|` instead of `X_t`.
    pub log_scale: bool,
    pub title: String,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { width: 900.0, height: 420.0, log_scale: false, title: String::new() }
    }
}

const MARGIN: f64 = 48.0;
const LOG_FLOOR: f64 = 1e-300;
const WALK_COLOR: &str = "#1f5fa8";
const HOLD_COLOR: &str = "#c0392b";

/// Self-contained SVG of a trajectory: a polyline per walk segment and a
/// horizontal stroke per hold.
pub fn trajectory_svg(tr: &Trajectory, opts: &SvgOptions) -> String {
    let val = |x: f64| if opts.log_scale { x.abs().max(LOG_FLOOR).log10() } else { x };
    let t_end = tr.end_time.max(tr.segments.last().map_or(0.0, |s| s.t_end));
    let t_end = if t_end > 0.0 { t_end } else { 1.0 };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for seg in &tr.segments {
        for &(_, x) in &seg.points {
            lo = lo.min(val(x));
            hi = hi.max(val(x));
        }
    }
    if !opts.log_scale {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        lo = -1.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let (w, h) = (opts.width, opts.height);
    let px = |t: f64| MARGIN + (w - 2.0 * MARGIN) * t / t_end;
    let py = |v: f64| h - MARGIN - (h - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    // axes
    let (x0, x1) = (MARGIN, w - MARGIN);
    let (y0, y1) = (h - MARGIN, MARGIN);
    writeln!(out, r#"<path d="M{x0:.2} {y1:.2} V{y0:.2} H{x1:.2}" stroke="black" fill="none" stroke-width="1"/>"#)
        .unwrap();
    if !opts.log_scale {
        let yz = py(0.0);
        writeln!(
            out,
            r##"<line x1="{x0:.2}" y1="{yz:.2}" x2="{x1:.2}" y2="{yz:.2}" stroke="#999" stroke-dasharray="4 3"/>"##
        )
        .unwrap();
    }
    let label = if opts.log_scale { "log10 |X_t|" } else { "X_t" };
    writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif">{label}</text>"#, 4.0, y1 - 8.0)
        .unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif" text-anchor="end">t = {}</text>"#,
        x1,
        h - 12.0,
        fmt_tick(t_end)
    )
    .unwrap();
    for (v, anchor) in [(lo, y0), (hi, y1)] {
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            anchor + 4.0,
            fmt_tick(v)
        )
        .unwrap();
    }
    if !opts.title.is_empty() {
        writeln!(
            out,
            r#"<text x="{:.2}" y="20" font-size="14" font-family="sans-serif" text-anchor="middle">{}</text>"#,
            0.5 * w,
            xml_escape(&opts.title)
        )
        .unwrap();
    }
    for seg in &tr.segments {
        match seg.kind {
            SegmentKind::Walk => {
                let mut pts = String::new();
                for (i, &(t, x)) in seg.points.iter().enumerate() {
                    if i > 0 {
                        pts.push(' ');
                    }
                    write!(pts, "{:.2},{:.2}", px(t), py(val(x))).unwrap();
                }
                if seg.points.len() == 1 {
                    // a walk that left on its first step still gets a mark
                    let (t, x) = seg.points[0];
                    write!(pts, " {:.2},{:.2}", px(seg.t_end.max(t)), py(val(x))).unwrap();
                }
                writeln!(out, r#"<polyline points="{pts}" fill="none" stroke="{WALK_COLOR}" stroke-width="1"/>"#)
                    .unwrap();
            }
            SegmentKind::Hold => {
                let y = py(val(seg.points[0].1));
                writeln!(
                    out,
                    r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{HOLD_COLOR}" stroke-width="1.5"/>"#,
                    px(seg.t_start),
                    px(seg.t_end)
                )
                .unwrap();
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
