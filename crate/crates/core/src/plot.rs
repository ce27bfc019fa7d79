//! Plot data: whitespace-separated columns for gnuplot and a bare-bones SVG
//! line chart of opinion trajectories.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::sim::{fmt_num, Trajectory};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Columns `t lambda norm x_1_1 … x_Na_No`, one row per kept sample.
pub fn write_dat<W: Write>(mut w: W, traj: &Trajectory, stride: usize) -> Result<()> {
    let z0 = &traj.states[0];
    let (na, no) = (z0.na(), z0.no());
    let mut head = String::from("# t lambda norm");
    for i in 1..=na {
        for j in 1..=no {
            let _ = write!(head, " x_{i}_{j}");
        }
    }
    writeln!(w, "{head}")?;
    let n = traj.times.len();
    let o = 1.0 / no as f64;
    for s in (0..n).filter(|&s| s % stride.max(1) == 0 || s + 1 == n) {
        let z = &traj.states[s];
        let mut line = format!("{} {} {}", fmt_num(traj.times[s]), fmt_num(traj.lambdas[s]), fmt_num(z.norm()));
        for v in z.as_slice() {
            let _ = write!(line, " {}", fmt_num(v + o));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// SVG chart of every `x_ij(t)`, colored by option.
pub fn svg_chart(traj: &Trajectory, title: &str, stride: usize) -> String {
    let (w, h, pad) = (800.0, 480.0, 50.0);
    let n = traj.times.len();
    let idx: Vec<usize> = (0..n).filter(|&s| s % stride.max(1) == 0 || s + 1 == n).collect();
    let z0 = &traj.states[0];
    let (na, no) = (z0.na(), z0.no());
    let o = 1.0 / no as f64;
    let (t0, t1) = (traj.times[0], traj.times[n - 1].max(traj.times[0] + 1e-9));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &s in &idx {
        for v in traj.states[s].as_slice() {
            lo = lo.min(v + o);
            hi = hi.max(v + o);
        }
    }
    if hi - lo < 1e-6 {
        lo -= 0.05;
        hi += 0.05;
    }
    let sx = |t: f64| pad + (t - t0) / (t1 - t0) * (w - 2.0 * pad);
    let sy = |x: f64| h - pad - (x - lo) / (hi - lo) * (h - 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{pad},{pad} L{pad},{} L{},{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    for (v, anchor) in [(lo, h - pad), (hi, pad)] {
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{:.3}</text>"#, pad - 4.0, anchor + 4.0, v);
    }
    for (t, anchor) in [(t0, "start"), (t1, "end")] {
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">t={}</text>"#, sx(t), h - pad + 16.0, fmt_num(t));
    }
    for i in 0..na {
        for j in 0..no {
            let mut d = String::new();
            for (c, &s) in idx.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if c == 0 { "M" } else { " L" }, sx(traj.times[s]), sy(traj.states[s].get(i, j) + o));
            }
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{}" stroke-width="0.8" stroke-opacity="0.7"/>"#, PALETTE[j % PALETTE.len()]);
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
