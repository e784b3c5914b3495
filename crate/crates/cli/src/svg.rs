//! Static SVG plots.

use std::fmt::Write;

use toric_ding::invariants::StabilityReport;
use toric_ding::polytope::ReflexivePolytope;
use toric_ding::scalar::{rational_string, rational_to_f64, Scalar};
use toric_ding::solver::IterationRecord;

const SIZE: f64 = 480.0;
const PAD: f64 = 48.0;

struct Frame {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let span = SIZE - 2.0 * PAD;
        let sx = (x - self.lo[0]) / (self.hi[0] - self.lo[0]);
        let sy = (y - self.lo[1]) / (self.hi[1] - self.lo[1]);
        (PAD + sx * span, SIZE - PAD - sy * span)
    }
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Polygon with the zero line of `l` and the value of `l` at each vertex.
/// Only two-dimensional polytopes are drawn.
pub fn polytope_plot(polytope: &ReflexivePolytope, report: &StabilityReport) -> Option<String> {
    if polytope.dim() != 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = polytope.vertices().iter().map(|v| (v.0[0] as f64, v.0[1] as f64)).collect();
    let ext = pts.iter().fold(1.0f64, |m, &(x, y)| m.max(x.abs()).max(y.abs())) + 0.5;
    let frame = Frame {
        lo: [-ext, -ext],
        hi: [ext, ext],
    };
    // Order the vertices by angle for the outline.
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        let ta = pts[a].1.atan2(pts[a].0);
        let tb = pts[b].1.atan2(pts[b].0);
        ta.partial_cmp(&tb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = String::new();
    header(&mut out);
    let outline: Vec<String> = order
        .iter()
        .map(|&i| {
            let (x, y) = frame.map(pts[i].0, pts[i].1);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#e8eef7" stroke="#1f3b70" stroke-width="2"/>"##,
        outline.join(" ")
    );
    let (ox, oy) = frame.map(0.0, 0.0);
    let _ = writeln!(out, r##"<circle cx="{ox:.2}" cy="{oy:.2}" r="3" fill="#1f3b70"/>"##);
    // Zero line a + ⟨b, x⟩ = 0, clipped to the frame.
    let a = rational_to_f64(&report.l.a);
    let b = [rational_to_f64(&report.l.b[0]), rational_to_f64(&report.l.b[1])];
    if b[0] != 0.0 || b[1] != 0.0 {
        let (p, q) = if b[1].abs() > b[0].abs() {
            ((-ext, (-a + b[0] * ext) / b[1]), (ext, (-a - b[0] * ext) / b[1]))
        } else {
            (((-a + b[1] * ext) / b[0], -ext), ((-a - b[1] * ext) / b[0], ext))
        };
        let (x1, y1) = frame.map(p.0, p.1);
        let (x2, y2) = frame.map(q.0, q.1);
        let _ = writeln!(
            out,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#b03030" stroke-dasharray="6 4"/>"##
        );
    }
    for (v, value) in &report.vertex_values {
        let (x, y) = frame.map(v.0[0] as f64, v.0[1] as f64);
        let _ = writeln!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="#1f3b70"/>"##);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">l = {}</text>"#,
            x + 6.0,
            y - 6.0,
            escape(&rational_string(value))
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="24">{}: alpha = {}</text>"#,
        escape(polytope.name()),
        escape(&rational_string(&report.alpha))
    );
    out.push_str("</svg>\n");
    Some(out)
}

/// `log10` of the gradient norm (solid) and of the residual (dashed)
/// against iteration.
pub fn convergence_plot<S: Scalar>(history: &[IterationRecord<S>]) -> String {
    let iters = history.len().max(2) as f64 - 1.0;
    let log = |v: S| v.to_f64().unwrap_or(f64::NAN).max(1e-300).log10();
    let grads: Vec<f64> = history.iter().map(|r| log(r.grad_norm)).collect();
    let resids: Vec<f64> = history.iter().map(|r| log(r.residual_l1)).collect();
    let all = grads.iter().chain(&resids).copied().filter(|v| v.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let lo = lo.floor().min(-1.0);
    let hi = hi.ceil().max(lo + 1.0);
    let frame = Frame {
        lo: [0.0, lo],
        hi: [iters, hi],
    };
    let mut out = String::new();
    header(&mut out);
    let (x0, y0) = frame.map(0.0, lo);
    let (x1, y1) = frame.map(iters, hi);
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#999"/>"##,
        x1 - x0,
        y0 - y1
    );
    for (values, style) in [(&grads, ""), (&resids, r#" stroke-dasharray="5 3""#)] {
        let path: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let (x, y) = frame.map(i as f64, g.clamp(lo, hi));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f3b70" stroke-width="1.5"{style}/>"##,
            path.join(" ")
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="24">log10 gradient norm (solid), residual L1 (dashed)</text>"#
    );
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{hi}</text>"#, 8.0, y1 + 4.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{lo}</text>"#, 8.0, y0 + 4.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x1 - 20.0, y0 + 18.0, iters as usize);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use toric_ding::catalog::lookup;
    use toric_ding::invariants::{solve_l, stability_report_for};

    #[test]
    fn plots_are_well_formed() {
        let f1 = lookup("F1").unwrap().polytope;
        let l = solve_l(&f1.moments()).unwrap();
        let r = stability_report_for(&f1, &l, 0).unwrap();
        let svg = polytope_plot(&f1, &r).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("l = ").count(), 4);
        assert!(svg.contains("<line"));
        let p1 = lookup("P1").unwrap().polytope;
        let l = solve_l(&p1.moments()).unwrap();
        assert!(polytope_plot(&p1, &stability_report_for(&p1, &l, 0).unwrap()).is_none());
        let hist = vec![
            IterationRecord { iteration: 0, value: 1.0, grad_norm: 1.0, residual_l1: 0.1 },
            IterationRecord { iteration: 1, value: 0.5, grad_norm: 1e-9, residual_l1: 0.01 },
        ];
        assert_eq!(convergence_plot(&hist).matches("<polyline").count(), 2);
    }
}
