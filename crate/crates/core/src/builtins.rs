//! Built-in scenario data: boundary curves, boundary functions, and the
//! partitions that go with them.

use std::f64::consts::PI;

use thiserror::Error;

use crate::decomp::PairSide;
use crate::geometry::{BoundaryArc, BoundaryCurve, BoundaryPiece, GeometryError, Point2};
use crate::partition::{Cell, CellKind, CellPairArcs, LoopElement, Partition, PartitionError, Provenance};
use crate::trace::{TraceError, TraceFunction};

pub const DISK_TRACE_BREAKPOINTS: usize = 4096;

#[derive(Debug, Error)]
pub enum BuiltinError {
    #[error("unknown built-in scenario {0}")]
    Unknown(String),
    #[error("parameter {name} = {value} outside supported range {range}")]
    BadParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error(transparent)]
    Curve(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Everything a built-in scenario contributes to the pipeline.
pub struct BuiltinData {
    pub curve: BoundaryCurve,
    pub trace: TraceFunction,
    pub partition: Option<Partition>,
    /// Whether cross-cell cycle inequalities are required strictly.
    pub strict_cycles: bool,
}

fn pt(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn polygon(points: &[(f64, f64)]) -> Result<BoundaryCurve, GeometryError> {
    let n = points.len();
    BoundaryCurve::new(
        (0..n)
            .map(|i| {
                let p = points[i];
                let q = points[(i + 1) % n];
                BoundaryPiece::line(pt(p.0, p.1), pt(q.0, q.1))
            })
            .collect(),
    )
}

/// Unit square with g = min(coordinate distance to the nearest corner, delta)
/// along each side.
pub fn delta_square(delta: f64) -> Result<BuiltinData, BuiltinError> {
    if !(0.0..0.5).contains(&delta) || delta <= 0.0 {
        return Err(BuiltinError::BadParameter {
            name: "delta",
            value: delta,
            range: "(0, 0.5)",
        });
    }
    let curve = polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])?;
    let mut bk = Vec::new();
    for side in 0..4 {
        let o = side as f64;
        bk.push((o, 0.0));
        bk.push((o + delta, delta));
        bk.push((o + 1.0 - delta, delta));
    }
    Ok(BuiltinData {
        curve,
        trace: TraceFunction::from_breakpoints(bk, 4.0)?,
        partition: None,
        strict_cycles: true,
    })
}

/// Unit disk with g(theta) = cos(theta), sampled densely in arclength.
pub fn disk_cosine() -> Result<BuiltinData, BuiltinError> {
    let c = pt(0.0, 0.0);
    let p = |a: f64| pt(a.cos(), a.sin());
    let q = PI / 2.0;
    let curve = BoundaryCurve::new(
        (0..4)
            .map(|k| BoundaryPiece::arc(p(k as f64 * q), p((k + 1) as f64 * q), c, q))
            .collect(),
    )?;
    let n = DISK_TRACE_BREAKPOINTS;
    let bk = (0..n)
        .map(|k| {
            let s = 2.0 * PI * k as f64 / n as f64;
            (s, s.cos())
        })
        .collect();
    Ok(BuiltinData {
        curve,
        trace: TraceFunction::from_breakpoints(bk, 2.0 * PI)?,
        partition: None,
        strict_cycles: true,
    })
}

/// C-shaped region [-1,1]x[0,1] minus the notch [-a,a]x[0,b], with boundary
/// data sliding from 0 on the lower lips to -1 on the far wall.
pub fn rect_cshape(a: f64, b: f64) -> Result<BuiltinData, BuiltinError> {
    if !(0.0..1.0).contains(&a) || a <= 0.0 {
        return Err(BuiltinError::BadParameter {
            name: "a",
            value: a,
            range: "(0, 1)",
        });
    }
    if !(0.0..1.0).contains(&b) || b <= 0.0 {
        return Err(BuiltinError::BadParameter {
            name: "b",
            value: b,
            range: "(0, 1)",
        });
    }
    let curve = polygon(&[
        (a, 0.0),
        (1.0, 0.0),
        (1.0, 1.0),
        (-1.0, 1.0),
        (-1.0, 0.0),
        (-a, 0.0),
        (-a, b),
        (a, b),
    ])?;
    // arclength milestones
    let s_right_b = 1.0 - a + b; // (1, b)
    let s_right_top = 2.0 - a; // (1, 1)
    let s_left_top = 4.0 - a; // (-1, 1)
    let s_left_b = 5.0 - a - b; // (-1, b)
    let s_notch_l0 = 6.0 - 2.0 * a; // (-a, 0)
    let s_notch_lb = s_notch_l0 + b; // (-a, b)
    let s_notch_rb = 6.0 + b; // (a, b)
    let total = 6.0 + 2.0 * b;
    let bk = vec![
        (0.0, 0.0),
        (s_right_b, 0.0),
        (s_right_top, -1.0),
        (s_left_top, -1.0),
        (s_left_b, 0.0),
        (s_notch_l0, 0.0),
        (s_notch_lb, -1.0),
        (s_notch_rb, -1.0),
    ];
    let trace = TraceFunction::from_breakpoints(bk, total)?;

    // partition: three constant cells plus two refinable wing families
    let x1 = Cell::new(
        CellKind::Constant,
        &[
            LoopElement::Boundary(BoundaryArc::new(s_notch_lb, 2.0 * a)),
            LoopElement::Line(pt(a, b), pt(1.0, 1.0)),
            LoopElement::Boundary(BoundaryArc::new(s_right_top, 2.0)),
            LoopElement::Line(pt(-1.0, 1.0), pt(-a, b)),
        ],
        &curve,
        None,
        None,
    )?;
    let x2 = Cell::new(
        CellKind::Constant,
        &[
            LoopElement::Boundary(BoundaryArc::new(s_left_b, b + 1.0 - a)),
            LoopElement::Line(pt(-a, 0.0), pt(-1.0, b)),
        ],
        &curve,
        None,
        None,
    )?;
    let x3 = Cell::new(
        CellKind::Constant,
        &[
            LoopElement::Boundary(BoundaryArc::new(0.0, 1.0 - a + b)),
            LoopElement::Line(pt(1.0, b), pt(a, 0.0)),
        ],
        &curve,
        None,
        None,
    )?;
    // right wing: notch wall (increasing) against the right edge (decreasing)
    let right_plus = PairSide::new(BoundaryArc::new(s_notch_rb, b), true);
    let right_minus = PairSide::new(BoundaryArc::new(s_right_b, 1.0 - b), false);
    let right = Cell::new(
        CellKind::Convex,
        &[
            LoopElement::Boundary(right_plus.arc),
            LoopElement::Line(pt(a, 0.0), pt(1.0, b)),
            LoopElement::Boundary(right_minus.arc),
            LoopElement::Line(pt(1.0, 1.0), pt(a, b)),
        ],
        &curve,
        Some("right".into()),
        Some(CellPairArcs {
            plus: right_plus,
            minus: right_minus,
            tv: 1.0,
        }),
    )?;
    let left_plus = PairSide::new(BoundaryArc::new(s_left_top, 1.0 - b), true);
    let left_minus = PairSide::new(BoundaryArc::new(s_notch_l0, b), false);
    let left = Cell::new(
        CellKind::Convex,
        &[
            LoopElement::Boundary(left_plus.arc),
            LoopElement::Line(pt(-1.0, b), pt(-a, 0.0)),
            LoopElement::Boundary(left_minus.arc),
            LoopElement::Line(pt(-a, b), pt(-1.0, 1.0)),
        ],
        &curve,
        Some("left".into()),
        Some(CellPairArcs {
            plus: left_plus,
            minus: left_minus,
            tv: 1.0,
        }),
    )?;
    Ok(BuiltinData {
        curve,
        trace,
        partition: Some(Partition {
            cells: vec![x1, x2, x3, right, left],
            provenance: Provenance::Supplied,
        }),
        strict_cycles: true,
    })
}

/// Upper half-annulus 1 <= r <= r_out with data climbing from 0 at the base
/// to 1 over an angular ramp of width alpha on both circles.
pub fn circ_cshape(r_out: f64, alpha: f64) -> Result<BuiltinData, BuiltinError> {
    if r_out <= 1.0 {
        return Err(BuiltinError::BadParameter {
            name: "R",
            value: r_out,
            range: "(1, inf)",
        });
    }
    if alpha <= 0.0 || alpha >= PI / 2.0 {
        return Err(BuiltinError::BadParameter {
            name: "alpha",
            value: alpha,
            range: "(0, pi/2)",
        });
    }
    let r = r_out;
    let c = pt(0.0, 0.0);
    let outer = |t: f64| pt(r * t.cos(), r * t.sin());
    let inner = |t: f64| pt(t.cos(), t.sin());
    let curve = BoundaryCurve::new(vec![
        BoundaryPiece::arc(outer(0.0), outer(PI), c, PI),
        BoundaryPiece::line(outer(PI), inner(PI)),
        BoundaryPiece::arc(inner(PI), inner(0.0), c, -PI),
        BoundaryPiece::line(inner(0.0), outer(0.0)),
    ])?;
    let s0 = r * PI + (r - 1.0); // start of the inner arc
    let total = r * PI + PI + 2.0 * (r - 1.0);
    let bk = vec![
        (0.0, 0.0),
        (r * alpha, 1.0),
        (r * (PI - alpha), 1.0),
        (r * PI, 0.0),
        (s0, 0.0),
        (s0 + alpha, 1.0),
        (s0 + PI - alpha, 1.0),
        (s0 + PI, 0.0),
    ];
    let trace = TraceFunction::from_breakpoints(bk, total)?;

    let x1 = Cell::new(
        CellKind::Constant,
        &[
            LoopElement::Boundary(BoundaryArc::new(r * alpha, r * (PI - 2.0 * alpha))),
            LoopElement::Line(outer(PI - alpha), inner(PI - alpha)),
            LoopElement::Boundary(BoundaryArc::new(s0 + alpha, PI - 2.0 * alpha)),
            LoopElement::Line(inner(alpha), outer(alpha)),
        ],
        &curve,
        None,
        None,
    )?;
    // right family: outer ramp (increasing) against the inner ramp below it
    let right_plus = PairSide::new(BoundaryArc::new(0.0, r * alpha), true);
    let right_minus = PairSide::new(BoundaryArc::new(s0 + PI - alpha, alpha), false);
    let right = Cell::new(
        CellKind::NonConvexPair,
        &[
            LoopElement::Boundary(right_plus.arc),
            LoopElement::Line(outer(alpha), inner(alpha)),
            LoopElement::Boundary(right_minus.arc),
            LoopElement::Line(inner(0.0), outer(0.0)),
        ],
        &curve,
        Some("right".into()),
        Some(CellPairArcs {
            plus: right_plus,
            minus: right_minus,
            tv: 1.0,
        }),
    )?;
    let left_plus = PairSide::new(BoundaryArc::new(s0, alpha), true);
    let left_minus = PairSide::new(BoundaryArc::new(r * (PI - alpha), r * alpha), false);
    let left = Cell::new(
        CellKind::NonConvexPair,
        &[
            LoopElement::Boundary(left_plus.arc),
            LoopElement::Line(inner(PI - alpha), outer(PI - alpha)),
            LoopElement::Boundary(left_minus.arc),
            LoopElement::Line(outer(PI), inner(PI)),
        ],
        &curve,
        Some("left".into()),
        Some(CellPairArcs {
            plus: left_plus,
            minus: left_minus,
            tv: 1.0,
        }),
    )?;
    Ok(BuiltinData {
        curve,
        trace,
        partition: Some(Partition {
            cells: vec![x1, right, left],
            provenance: Provenance::Supplied,
        }),
        strict_cycles: true,
    })
}

/// Octagonal region between the squares [-a,a]^2 and [-b,b]^2 where two
/// distinct optimal plans exist at equal cost; only the one with interior
/// rays reconstructs a solution.
pub fn nonuniq_squares(a: f64, b: f64) -> Result<BuiltinData, BuiltinError> {
    if a <= 0.0 || b <= a {
        return Err(BuiltinError::BadParameter {
            name: "a,b",
            value: a,
            range: "0 < a < b",
        });
    }
    let curve = polygon(&[
        (a, a),
        (-a, a),
        (-b, b),
        (-b, -b),
        (-a, -a),
        (a, -a),
        (b, -b),
        (b, b),
    ])?;
    let diag = std::f64::consts::SQRT_2 * (b - a);
    let s_nw0 = 2.0 * a; // (-a, a)
    let s_left0 = s_nw0 + diag; // (-b, b)
    let s_sw0 = s_left0 + 2.0 * b; // (-b, -b)
    let s_bot0 = s_sw0 + diag; // (-a, -a)
    let s_se0 = s_bot0 + 2.0 * a; // (a, -a)
    let s_right0 = s_se0 + diag; // (b, -b)
    let s_ne0 = s_right0 + 2.0 * b; // (b, b)
    let total = s_ne0 + diag;
    let bk = vec![
        (0.0, a),
        (s_nw0, a),
        (s_left0, b),
        (s_sw0, b),
        (s_bot0, a),
        (s_se0, a),
        (s_right0, b),
        (s_ne0, b),
    ];
    let trace = TraceFunction::from_breakpoints(bk, total)?;

    let x1 = Cell::new(
        CellKind::Constant,
        &[
            LoopElement::Boundary(BoundaryArc::new(0.0, 2.0 * a)),
            LoopElement::Line(pt(-a, a), pt(-a, -a)),
            LoopElement::Boundary(BoundaryArc::new(s_bot0, 2.0 * a)),
            LoopElement::Line(pt(a, -a), pt(a, a)),
        ],
        &curve,
        None,
        None,
    )?;
    let left_plus = PairSide::new(BoundaryArc::new(s_nw0, diag), true);
    let left_minus = PairSide::new(BoundaryArc::new(s_sw0, diag), false);
    let left = Cell::new(
        CellKind::Convex,
        &[
            LoopElement::Boundary(BoundaryArc::new(s_nw0, diag + 2.0 * b + diag)),
            LoopElement::Line(pt(-a, -a), pt(-a, a)),
        ],
        &curve,
        Some("left".into()),
        Some(CellPairArcs {
            plus: left_plus,
            minus: left_minus,
            tv: b - a,
        }),
    )?;
    let right_plus = PairSide::new(BoundaryArc::new(s_se0, diag), true);
    let right_minus = PairSide::new(BoundaryArc::new(s_ne0, diag), false);
    let right = Cell::new(
        CellKind::Convex,
        &[
            LoopElement::Boundary(BoundaryArc::new(s_se0, diag + 2.0 * b + diag)),
            LoopElement::Line(pt(a, a), pt(a, -a)),
        ],
        &curve,
        Some("right".into()),
        Some(CellPairArcs {
            plus: right_plus,
            minus: right_minus,
            tv: b - a,
        }),
    )?;
    Ok(BuiltinData {
        curve,
        trace,
        partition: Some(Partition {
            cells: vec![x1, left, right],
            provenance: Provenance::Supplied,
        }),
        strict_cycles: false,
    })
}

/// Unit square with a tent on the bottom edge: all transport happens along
/// the boundary itself, so no trace-sense solution exists.
pub fn edge_counterexample() -> Result<BuiltinData, BuiltinError> {
    let curve = polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])?;
    let bk = vec![(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)];
    Ok(BuiltinData {
        curve,
        trace: TraceFunction::from_breakpoints(bk, 4.0)?,
        partition: None,
        strict_cycles: true,
    })
}

/// Boundary data that climbs on a singular-continuous set is outside the
/// representable class; the constructor refuses with a diagnostic.
pub fn cantor_square() -> Result<BuiltinData, BuiltinError> {
    Err(BuiltinError::Trace(TraceError::SingularContinuous(
        "the trace climbs on a measure-zero set; piecewise-linear breakpoints cannot express it"
            .into(),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::validate;
    use crate::trace::tangential_derivative;

    #[test]
    fn rect_cshape_partition_validates() {
        let data = rect_cshape(0.25, 0.5).unwrap();
        let f = tangential_derivative(&data.trace);
        let p = data.partition.unwrap();
        let v = validate(&p, &f, &data.curve).unwrap();
        assert_eq!(v.merged.gammas.len(), 2);
        assert!(v.merged.chis.is_empty());
        assert!(v.e_pairs.is_empty());
        // wings own the pairs
        assert_eq!(v.pair_owner.len(), 2);
    }

    #[test]
    fn rect_cshape_refines_into_quads() {
        let data = rect_cshape(0.25, 0.5).unwrap();
        let f = tangential_derivative(&data.trace);
        let p = data.partition.unwrap();
        let q = crate::partition::refine(&p, "right", 4, &f, &data.curve).unwrap();
        assert_eq!(q.cells.len(), 8); // 3 constant + 4 right slices + 1 left
        let slices: Vec<&Cell> = q
            .cells
            .iter()
            .filter(|c| c.family.as_deref() == Some("right"))
            .collect();
        assert_eq!(slices.len(), 4);
        // slice corners sit at quarter levels on the notch wall
        let lvl_pts: Vec<f64> = slices
            .iter()
            .map(|c| {
                let arcs = c.pair.unwrap();
                data.curve.point_at_wrapped(arcs.plus.arc.start).y
            })
            .collect();
        let mut sorted = lvl_pts.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // the wall is traversed downward, so each slice starts at its top
        for (got, want) in sorted.iter().zip([0.125, 0.25, 0.375, 0.5]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let v = validate(&q, &f, &data.curve).unwrap();
        assert_eq!(v.merged.gammas.len(), 5);
    }

    #[test]
    fn refined_slices_have_equal_tv() {
        let data = rect_cshape(0.25, 0.5).unwrap();
        let f = tangential_derivative(&data.trace);
        let p = data.partition.unwrap();
        let q = crate::partition::refine_all(&p, 8, &f, &data.curve).unwrap();
        for cell in q.cells.iter().filter(|c| c.family.is_some()) {
            let arcs = cell.pair.unwrap();
            let tvp = f.tv_of_arc(&arcs.plus.arc);
            let tvm = f.tv_of_arc(&arcs.minus.arc);
            assert!((tvp - 1.0 / 8.0).abs() < 1e-12 * f.total_tv());
            assert!((tvm - 1.0 / 8.0).abs() < 1e-12 * f.total_tv());
        }
    }

    #[test]
    fn circ_cshape_partition_validates() {
        let data = circ_cshape(2.0, 1.0).unwrap();
        let f = tangential_derivative(&data.trace);
        let p = data.partition.unwrap();
        let v = validate(&p, &f, &data.curve).unwrap();
        assert_eq!(v.e_pairs.len(), 2);
        assert!(v.merged.chis.is_empty() && v.merged.gammas.is_empty());
        // refined into annular sectors
        let q = crate::partition::refine_all(&p, 6, &f, &data.curve).unwrap();
        assert_eq!(q.cells.len(), 13);
        let v = validate(&q, &f, &data.curve).unwrap();
        assert_eq!(v.e_pairs.len(), 12);
    }

    #[test]
    fn nonuniq_partition_validates() {
        let data = nonuniq_squares(1.0, 2.0).unwrap();
        let f = tangential_derivative(&data.trace);
        let p = data.partition.unwrap();
        let v = validate(&p, &f, &data.curve).unwrap();
        assert_eq!(v.merged.gammas.len(), 2);
        assert!(v.e_pairs.is_empty());
    }

    #[test]
    fn areas_cover_domain() {
        for data in [
            rect_cshape(0.25, 0.5).unwrap(),
            circ_cshape(2.0, 1.0).unwrap(),
            nonuniq_squares(1.0, 2.0).unwrap(),
        ] {
            let p = data.partition.as_ref().unwrap();
            let sum: f64 = p.cells.iter().map(|c| c.area()).sum();
            let want = data.curve.signed_area();
            assert!(
                ((sum - want) / want).abs() < 1e-9,
                "{sum} vs {want}"
            );
        }
    }

    #[test]
    fn cantor_refused() {
        assert!(matches!(
            cantor_square(),
            Err(BuiltinError::Trace(TraceError::SingularContinuous(_)))
        ));
    }
}
