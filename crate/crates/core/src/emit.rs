//! Artifact emission: CSV files (shortest round-trip float formatting, so
//! re-parsing reproduces values bit-exactly), layered SVG figures, and the
//! human-readable run report (12 significant digits).

use std::fmt::Write as _;

use crate::admissibility::Verdict;
use crate::fields::FieldRaster;
use crate::geometry::{BoundaryCurve, PieceKind, Point2};
use crate::pipeline::RunOutcome;
use crate::reconstruct::{CellMask, ScalarField};

fn fnum(v: f64) -> String {
    // shortest representation that round-trips through parsing
    format!("{v}")
}

/// One row per pair arc: kind, pair id, side, start, end, variation.
pub fn decomposition_csv(out: &RunOutcome) -> String {
    let l = out.map.curve().total_len();
    let mut s = String::from("kind,pair,side,s0,s1,tv\n");
    let d = &out.decomposition;
    for (i, c) in d.chis.iter().enumerate() {
        for (side, arc) in [("plus", &c.plus.arc), ("minus", &c.minus.arc)] {
            let _ = writeln!(
                s,
                "chi,{i},{side},{},{},{}",
                fnum(arc.start),
                fnum(arc.end(l)),
                fnum(c.tv)
            );
        }
    }
    for (i, g) in d.gammas.iter().enumerate() {
        for (side, arc) in [("plus", &g.plus.arc), ("minus", &g.minus.arc)] {
            let _ = writeln!(
                s,
                "gamma,{i},{side},{},{},{}",
                fnum(arc.start),
                fnum(arc.end(l)),
                fnum(g.tv)
            );
        }
    }
    for (i, e) in out.e_pairs.iter().enumerate() {
        for (side, arc) in [("plus", &e.plus.arc), ("minus", &e.minus.arc)] {
            let _ = writeln!(
                s,
                "extension,{i},{side},{},{},{}",
                fnum(arc.start),
                fnum(arc.end(l)),
                fnum(e.tv)
            );
        }
    }
    for (i, fl) in d.flats.iter().enumerate() {
        let _ = writeln!(
            s,
            "flat,{i},,{},{},0",
            fnum(fl.start),
            fnum(fl.end(l))
        );
    }
    s
}

pub fn rays_csv(out: &RunOutcome) -> String {
    let mut s = String::from("s_plus,s_minus,x_plus,y_plus,x_minus,y_minus,level,length\n");
    if let Some(plan) = &out.plan {
        for a in &plan.atoms {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fnum(a.source_s),
                fnum(a.target_s),
                fnum(a.source.x),
                fnum(a.source.y),
                fnum(a.target.x),
                fnum(a.target.y),
                fnum(a.level),
                fnum(a.source.dist(a.target))
            );
        }
    }
    s
}

pub fn raster_csv(r: &FieldRaster) -> String {
    let mut s = String::from("i,j,x_center,y_center,sigma,vx,vy\n");
    for j in 0..r.ny {
        for i in 0..r.nx {
            let k = r.idx(i, j);
            if r.sigma[k] == 0.0 {
                continue;
            }
            let c = r.cell_center(i, j);
            let _ = writeln!(
                s,
                "{i},{j},{},{},{},{},{}",
                fnum(c.x),
                fnum(c.y),
                fnum(r.sigma[k]),
                fnum(r.vx[k]),
                fnum(r.vy[k])
            );
        }
    }
    s
}

pub fn u_csv(fld: &ScalarField) -> String {
    let mut s = String::from("i,j,x,y,u,mask\n");
    for j in 0..fld.ny {
        for i in 0..fld.nx {
            let k = fld.idx(i, j);
            let mask = match fld.mask[k] {
                CellMask::Exterior => continue,
                CellMask::Interior => "interior",
                CellMask::BoundaryAdjacent => "boundary",
                CellMask::Invalid => "invalid",
            };
            let c = fld.cell_center(i, j);
            let _ = writeln!(
                s,
                "{i},{j},{},{},{},{mask}",
                fnum(c.x),
                fnum(c.y),
                fnum(fld.u[k])
            );
        }
    }
    s
}

pub fn verdicts_csv(out: &RunOutcome) -> String {
    let mut s = String::from("condition,verdict,margin,witness\n");
    for c in &out.conditions {
        let verdict = match c.verdict {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Undecided => "undecided",
        };
        let witness = c
            .witnesses
            .first()
            .map(|w| {
                w.points
                    .iter()
                    .map(|(a, b)| format!("{} {} {} {}", fnum(a.x), fnum(a.y), fnum(b.x), fnum(b.y)))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{verdict},{},{witness}",
            c.condition.label(),
            fnum(c.margin)
        );
    }
    s
}

pub fn oracle_csv(out: &RunOutcome) -> String {
    let mut s = String::from("cost,duality_gap,cyclical_margin,interior_fraction,cross_cell_offdiagonal\n");
    let _ = writeln!(
        s,
        "{},{},{},{},{}",
        out.oracle_cost.map(fnum).unwrap_or_default(),
        out.duality_gap.map(fnum).unwrap_or_default(),
        out.cyclical_margin.map(fnum).unwrap_or_default(),
        out.interior_fraction.map(fnum).unwrap_or_default(),
        out.cross_cell_offdiag.map(fnum).unwrap_or_default(),
    );
    s
}

pub fn cross_cell_csv(m: &[Vec<f64>]) -> String {
    let mut s = String::from("from_cell,to_cell,mass\n");
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                let _ = writeln!(s, "{i},{j},{}", fnum(v));
            }
        }
    }
    s
}

pub fn scan_csv(rows: &[(f64, bool, f64)]) -> String {
    let mut s = String::from("param,verdict,margin\n");
    for (p, sat, margin) in rows {
        let _ = writeln!(
            s,
            "{},{},{}",
            fnum(*p),
            if *sat { "satisfied" } else { "violated" },
            fnum(*margin)
        );
    }
    s
}

fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    format!("{:.*e}", 11, v)
}

/// Human summary: per-stage results with 12 significant digits.
pub fn report_text(out: &RunOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", out.scenario_name);
    if let Some(n) = out.refine_n {
        let _ = writeln!(s, "partition refinement: n = {n}");
    }
    let _ = writeln!(s, "conditions:");
    for c in &out.conditions {
        let verdict = match c.verdict {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "VIOLATED",
            Verdict::Undecided => "undecided",
        };
        let _ = writeln!(
            s,
            "  {:<4} {:<10} margin {}",
            c.condition.label(),
            verdict,
            sig12(c.margin)
        );
        for n in &c.notes {
            let _ = writeln!(s, "       note: {n}");
        }
    }
    let mut kv = |k: &str, v: Option<f64>| {
        if let Some(v) = v {
            let _ = writeln!(s, "{k}: {}", sig12(v));
        }
    };
    kv("map plan cost", out.map_cost);
    kv("oracle cost", out.oracle_cost);
    kv("discrete TV of u", out.u_tv);
    kv("duality gap", out.duality_gap);
    kv("cyclical margin", out.cyclical_margin);
    kv("boundary mass", out.boundary_mass);
    kv("pushforward defect", out.pushforward);
    kv("rotation discrepancy", out.rotation);
    kv("cross-cell off-diagonal mass", out.cross_cell_offdiag);
    kv("oracle interior ray fraction", out.interior_fraction);
    if !out.divergence.is_empty() {
        let worst = out
            .divergence
            .iter()
            .cloned()
            .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let _ = writeln!(
            s,
            "divergence residual (worst) : {} [{}]",
            sig12(worst.1),
            worst.0
        );
    }
    for n in &out.notes {
        let _ = writeln!(s, "note: {n}");
    }
    if let Some(fail) = &out.first_failure {
        let _ = writeln!(s, "result: FAILED ({fail})");
    } else {
        let _ = writeln!(s, "result: ok");
    }
    s
}

// ---------------------------------------------------------------- SVG --

struct SvgMap {
    scale: f64,
    pad: f64,
    min: Point2,
    max_y: f64,
    width: f64,
    height: f64,
}

impl SvgMap {
    fn new(curve: &BoundaryCurve, target: f64) -> SvgMap {
        let (lo, hi) = curve.bbox();
        let w = (hi.x - lo.x).max(1e-9);
        let h = (hi.y - lo.y).max(1e-9);
        let scale = target / w.max(h);
        let pad = 0.05 * target;
        SvgMap {
            scale,
            pad,
            min: lo,
            max_y: hi.y,
            width: w * scale + 2.0 * pad,
            height: h * scale + 2.0 * pad,
        }
    }
    fn x(&self, p: Point2) -> f64 {
        (p.x - self.min.x) * self.scale + self.pad
    }
    fn y(&self, p: Point2) -> f64 {
        (self.max_y - p.y) * self.scale + self.pad
    }
    fn pt(&self, p: Point2) -> String {
        format!("{:.3},{:.3}", self.x(p), self.y(p))
    }
}

fn curve_path(curve: &BoundaryCurve, m: &SvgMap) -> String {
    let mut d = String::new();
    let first = curve.pieces()[0].start;
    let _ = write!(d, "M {}", m.pt(first));
    for piece in curve.pieces() {
        match piece.kind {
            PieceKind::Line => {
                let _ = write!(d, " L {}", m.pt(piece.end));
            }
            PieceKind::Arc { sweep, .. } => {
                let r = piece.radius() * m.scale;
                let large = if sweep.abs() > std::f64::consts::PI { 1 } else { 0 };
                // the y-flip mirrors orientation
                let flag = if sweep > 0.0 { 0 } else { 1 };
                let _ = write!(
                    d,
                    " A {:.3} {:.3} 0 {large} {flag} {}",
                    r,
                    r,
                    m.pt(piece.end)
                );
            }
        }
    }
    d.push_str(" Z");
    d
}

fn arc_polyline(curve: &BoundaryCurve, arc: &crate::geometry::BoundaryArc, m: &SvgMap) -> String {
    let pts = curve.sample_arc(arc, 48);
    pts.iter()
        .map(|p| m.pt(*p))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Marching-squares contour segments of the field at one level.
fn contour_segments(fld: &ScalarField, level: f64) -> Vec<(Point2, Point2)> {
    let mut segs = Vec::new();
    let val = |i: usize, j: usize| -> Option<f64> {
        let k = fld.idx(i, j);
        match fld.mask[k] {
            CellMask::Interior | CellMask::BoundaryAdjacent => Some(fld.u[k]),
            _ => None,
        }
    };
    let node = |i: usize, j: usize| fld.cell_center(i, j);
    for j in 0..fld.ny - 1 {
        for i in 0..fld.nx - 1 {
            let (Some(v00), Some(v10), Some(v01), Some(v11)) =
                (val(i, j), val(i + 1, j), val(i, j + 1), val(i + 1, j + 1))
            else {
                continue;
            };
            let corners = [
                (node(i, j), v00),
                (node(i + 1, j), v10),
                (node(i + 1, j + 1), v11),
                (node(i, j + 1), v01),
            ];
            let mut cuts: Vec<Point2> = Vec::new();
            for e in 0..4 {
                let (p0, a) = corners[e];
                let (p1, b) = corners[(e + 1) % 4];
                if (a < level) != (b < level) {
                    let t = (level - a) / (b - a);
                    cuts.push(p0 + (p1 - p0) * t);
                }
            }
            if cuts.len() == 2 {
                segs.push((cuts[0], cuts[1]));
            } else if cuts.len() == 4 {
                segs.push((cuts[0], cuts[1]));
                segs.push((cuts[2], cuts[3]));
            }
        }
    }
    segs
}

/// Layered figure: boundary, decomposition arcs, partition cells, rays,
/// density heat, solution contours.
pub fn svg(out: &RunOutcome, contour_levels: usize) -> String {
    let curve = out.map.curve();
    let m = SvgMap::new(curve, 800.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}">"#,
        m.width, m.height, m.width, m.height
    );

    if let Some(vp) = &out.validated {
        let _ = writeln!(s, r##"<g id="partition" fill-opacity="0.15" stroke="#888" stroke-width="0.5">"##);
        for cell in &vp.partition.cells {
            let fill = match cell.kind {
                crate::partition::CellKind::Convex => "#d62728",
                crate::partition::CellKind::NonConvexPair => "#9467bd",
                crate::partition::CellKind::Constant => "#7f7f7f",
            };
            let _ = writeln!(
                s,
                r#"<path d="{}" fill="{fill}"/>"#,
                curve_path(&cell.region, &m)
            );
        }
        let _ = writeln!(s, "</g>");
    }

    if let Some(r) = &out.raster {
        let max_sigma = r.sigma.iter().cloned().fold(0.0f64, f64::max);
        if max_sigma > 0.0 {
            let _ = writeln!(s, r#"<g id="sigma">"#);
            for j in 0..r.ny {
                for i in 0..r.nx {
                    let v = r.sigma[r.idx(i, j)];
                    if v <= 0.0 {
                        continue;
                    }
                    let c = r.cell_center(i, j);
                    let half = Point2::new(0.5 * r.hx, 0.5 * r.hy);
                    let tl = m.pt(Point2::new(c.x - half.x, c.y + half.y));
                    let (x, y) = {
                        let mut it = tl.split(',');
                        (
                            it.next().unwrap().to_string(),
                            it.next().unwrap().to_string(),
                        )
                    };
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{:.3}" height="{:.3}" fill="#ff7f0e" fill-opacity="{:.3}"/>"##,
                        r.hx * m.scale,
                        r.hy * m.scale,
                        (v / max_sigma).min(1.0) * 0.8
                    );
                }
            }
            let _ = writeln!(s, "</g>");
        }
    }

    if let Some(plan) = &out.plan {
        let _ = writeln!(
            s,
            r##"<g id="rays" stroke="#1f77b4" stroke-width="0.4" stroke-opacity="0.5">"##
        );
        let step = (plan.atoms.len() / 200).max(1);
        for a in plan.atoms.iter().step_by(step) {
            let _ = writeln!(
                s,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                m.x(a.source),
                m.y(a.source),
                m.x(a.target),
                m.y(a.target)
            );
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g id="decomposition" fill="none" stroke-width="3">"#);
    for c in &out.decomposition.chis {
        for (arc, color) in [(&c.plus.arc, "#d62728"), (&c.minus.arc, "#e377c2")] {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" stroke="{color}"/>"#,
                arc_polyline(curve, arc, &m)
            );
        }
    }
    for g in &out.decomposition.gammas {
        for (arc, color) in [(&g.plus.arc, "#1f77b4"), (&g.minus.arc, "#17becf")] {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" stroke="{color}"/>"#,
                arc_polyline(curve, arc, &m)
            );
        }
    }
    for e in &out.e_pairs {
        for (arc, color) in [(&e.plus.arc, "#9467bd"), (&e.minus.arc, "#c5b0d5")] {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" stroke="{color}"/>"#,
                arc_polyline(curve, arc, &m)
            );
        }
    }
    for fl in &out.decomposition.flats {
        let _ = writeln!(
            s,
            r##"<polyline points="{}" stroke="#7f7f7f"/>"##,
            arc_polyline(curve, fl, &m)
        );
    }
    let _ = writeln!(s, "</g>");

    if let Some(fld) = &out.field {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (k, &u) in fld.u.iter().enumerate() {
            if matches!(fld.mask[k], CellMask::Interior | CellMask::BoundaryAdjacent) {
                lo = lo.min(u);
                hi = hi.max(u);
            }
        }
        if hi > lo {
            let _ = writeln!(
                s,
                r##"<g id="contours" stroke="#2ca02c" stroke-width="0.8" fill="none">"##
            );
            for k in 1..=contour_levels {
                let level = lo + (hi - lo) * k as f64 / (contour_levels + 1) as f64;
                for (a, b) in contour_segments(fld, level) {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                        m.x(a),
                        m.y(a),
                        m.x(b),
                        m.y(b)
                    );
                }
            }
            let _ = writeln!(s, "</g>");
        }
    }

    let _ = writeln!(
        s,
        r##"<g id="boundary"><path d="{}" fill="none" stroke="#000" stroke-width="1.5"/></g>"##,
        curve_path(curve, &m)
    );
    s.push_str("</svg>\n");
    s
}
