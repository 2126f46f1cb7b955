//! Planar primitives for closed boundary curves made of line segments and
//! circular arcs: arclength parametrization, point location, segment
//! containment, convexity analysis, convex hulls of arc families.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EPS_REL: f64 = 1e-9;
/// Samples per arc when building hulls of boundary arcs.
pub const HULL_SAMPLES_PER_ARC: usize = 64;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("curve must have at least one piece")]
    Empty,
    #[error("piece {0} has non-positive length")]
    DegeneratePiece(usize),
    #[error("piece {index} endpoint does not meet piece {next} start (gap {gap:.3e})")]
    NotClosed { index: usize, next: usize, gap: f64 },
    #[error("curve is negatively oriented (signed area {0:.3e})")]
    NegativeOrientation(f64),
    #[error("pieces {0} and {1} intersect away from shared endpoints")]
    SelfIntersection(usize, usize),
    #[error("cusp at junction of pieces {0} and {1}")]
    Cusp(usize, usize),
    #[error("arc sweep {0} out of range")]
    BadSweep(f64),
    #[error("parameter {s} outside [0, {len})")]
    ParamOutOfRange { s: f64, len: f64 },
    #[error("degenerate segment (endpoints within tolerance)")]
    DegenerateSegment,
    #[error("empty arc list")]
    EmptyArcList,
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }
    pub fn unit(self) -> Point2 {
        let n = self.norm();
        Point2::new(self.x / n, self.y / n)
    }
    /// Rotation by +pi/2 (counterclockwise).
    pub fn rot90(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}
impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}
impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

pub fn midpoint(a: Point2, b: Point2) -> Point2 {
    Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PieceKind {
    Line,
    /// Circular arc around `center`; `sweep` is the signed subtended angle,
    /// positive counterclockwise, in (-2pi, 2pi) \ {0}.
    Arc { center: Point2, sweep: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryPiece {
    pub start: Point2,
    pub end: Point2,
    pub kind: PieceKind,
}

impl BoundaryPiece {
    pub fn line(start: Point2, end: Point2) -> Self {
        BoundaryPiece {
            start,
            end,
            kind: PieceKind::Line,
        }
    }
    pub fn arc(start: Point2, end: Point2, center: Point2, sweep: f64) -> Self {
        BoundaryPiece {
            start,
            end,
            kind: PieceKind::Arc { center, sweep },
        }
    }

    pub fn len(&self) -> f64 {
        match self.kind {
            PieceKind::Line => self.start.dist(self.end),
            PieceKind::Arc { center, sweep } => (self.start - center).norm() * sweep.abs(),
        }
    }

    pub fn radius(&self) -> f64 {
        match self.kind {
            PieceKind::Line => f64::INFINITY,
            PieceKind::Arc { center, .. } => (self.start - center).norm(),
        }
    }

    /// Point at arclength `t` from the start of the piece, t in [0, len].
    pub fn point_at(&self, t: f64) -> Point2 {
        match self.kind {
            PieceKind::Line => {
                let d = (self.end - self.start).unit();
                self.start + d * t
            }
            PieceKind::Arc { center, sweep } => {
                let r = (self.start - center).norm();
                let a0 = (self.start - center).angle();
                let a = a0 + sweep.signum() * t / r;
                center + Point2::new(a.cos(), a.sin()) * r
            }
        }
    }

    /// Unit tangent at arclength `t`, following the traversal direction.
    pub fn tangent_at(&self, t: f64) -> Point2 {
        match self.kind {
            PieceKind::Line => (self.end - self.start).unit(),
            PieceKind::Arc { center, sweep } => {
                let r = (self.start - center).norm();
                let a0 = (self.start - center).angle();
                let a = a0 + sweep.signum() * t / r;
                Point2::new(-a.sin(), a.cos()) * sweep.signum()
            }
        }
    }

    pub fn dist_to_point(&self, p: Point2) -> f64 {
        match self.kind {
            PieceKind::Line => dist_point_segment(p, self.start, self.end),
            PieceKind::Arc { center, sweep } => {
                let r = (self.start - center).norm();
                let v = p - center;
                let d = v.norm();
                if d < 1e-300 {
                    return r;
                }
                let ang = v.angle();
                if self.angle_on_arc(ang, 0.0) {
                    (d - r).abs()
                } else {
                    let _ = sweep;
                    p.dist(self.start).min(p.dist(self.end))
                }
            }
        }
    }

    /// Whether the polar angle `ang` (about the arc center) falls within the
    /// swept range, padded by `pad` radians on each side.
    fn angle_on_arc(&self, ang: f64, pad: f64) -> bool {
        if let PieceKind::Arc { center, sweep } = self.kind {
            let a0 = (self.start - center).angle();
            // offset from a0 in sweep direction, normalized to [0, 2pi)
            let mut off = (ang - a0) * sweep.signum();
            off = off.rem_euclid(std::f64::consts::TAU);
            off <= sweep.abs() + pad || off >= std::f64::consts::TAU - pad
        } else {
            false
        }
    }

}

fn dist_point_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// How a probe segment meets a boundary piece.
#[derive(Clone, Copy, Debug)]
enum Hit {
    /// Touch/crossing at segment parameter t in [0,1].
    Point(f64),
    /// Collinear overlap over segment parameters [t0, t1].
    Overlap(f64, f64),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Region {
    Inside,
    Boundary,
    Outside,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum ConvexityClass {
    StrictlyConvex,
    Convex,
    NonConvex,
}

/// Open arc on a boundary curve, by start arclength and length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub start: f64,
    pub len: f64,
}

impl BoundaryArc {
    pub fn new(start: f64, len: f64) -> Self {
        BoundaryArc { start, len }
    }
    pub fn end(&self, total: f64) -> f64 {
        let e = self.start + self.len;
        if e >= total {
            e - total
        } else {
            e
        }
    }
    pub fn wraps(&self, total: f64) -> bool {
        self.start + self.len > total
    }
    /// Whether arclength `s` (in [0, total)) lies in the closed arc.
    pub fn contains(&self, s: f64, total: f64, tol: f64) -> bool {
        let mut off = s - self.start;
        if off < 0.0 {
            off += total;
        }
        (-tol..=self.len + tol).contains(&off)
    }
    /// Arclength at offset `d` from the start, wrapped into [0, total).
    pub fn at(&self, d: f64, total: f64) -> f64 {
        let mut s = self.start + d;
        while s >= total {
            s -= total;
        }
        while s < 0.0 {
            s += total;
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct ConvexityReport {
    pub class: ConvexityClass,
    pub flat_spans: Vec<BoundaryArc>,
    /// Concave arc pieces, plus zero-length spans marking reflex corners.
    pub reflex_spans: Vec<BoundaryArc>,
    /// Arclength parameters with no tangent line (corners).
    pub singular_params: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    pieces: Vec<BoundaryPiece>,
    cum_len: Vec<f64>,
    total_len: f64,
    bbox: (Point2, Point2),
    eps: f64,
}

impl BoundaryCurve {
    pub fn new(pieces: Vec<BoundaryPiece>) -> Result<Self, GeometryError> {
        Self::with_eps_rel(pieces, DEFAULT_EPS_REL)
    }

    pub fn with_eps_rel(pieces: Vec<BoundaryPiece>, eps_rel: f64) -> Result<Self, GeometryError> {
        if pieces.is_empty() {
            return Err(GeometryError::Empty);
        }
        let mut bbox = (
            Point2::new(f64::INFINITY, f64::INFINITY),
            Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in &pieces {
            for q in piece_extent_samples(p) {
                bbox.0.x = bbox.0.x.min(q.x);
                bbox.0.y = bbox.0.y.min(q.y);
                bbox.1.x = bbox.1.x.max(q.x);
                bbox.1.y = bbox.1.y.max(q.y);
            }
        }
        let diameter = bbox.0.dist(bbox.1);
        let eps = eps_rel * diameter.max(1e-12);

        let mut cum = Vec::with_capacity(pieces.len() + 1);
        let mut acc = 0.0;
        for (i, p) in pieces.iter().enumerate() {
            if let PieceKind::Arc { sweep, .. } = p.kind {
                if sweep == 0.0 || sweep.abs() >= std::f64::consts::TAU {
                    return Err(GeometryError::BadSweep(sweep));
                }
            }
            let l = p.len();
            if l <= eps || l.is_nan() {
                return Err(GeometryError::DegeneratePiece(i));
            }
            cum.push(acc);
            acc += l;
        }
        cum.push(acc);

        let n = pieces.len();
        for i in 0..n {
            let j = (i + 1) % n;
            let gap = pieces[i].end.dist(pieces[j].start);
            if gap > eps * 10.0 {
                return Err(GeometryError::NotClosed {
                    index: i,
                    next: j,
                    gap,
                });
            }
        }

        let curve = BoundaryCurve {
            pieces,
            cum_len: cum,
            total_len: acc,
            bbox,
            eps,
        };

        let area = curve.signed_area();
        if area <= 0.0 {
            return Err(GeometryError::NegativeOrientation(area));
        }
        curve.check_simple()?;
        curve.check_cusps()?;
        Ok(curve)
    }

    pub fn pieces(&self) -> &[BoundaryPiece] {
        &self.pieces
    }
    pub fn total_len(&self) -> f64 {
        self.total_len
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn bbox(&self) -> (Point2, Point2) {
        self.bbox
    }
    pub fn diameter(&self) -> f64 {
        self.bbox.0.dist(self.bbox.1)
    }

    pub fn signed_area(&self) -> f64 {
        // shoelace over chords plus circular-segment corrections
        let mut a2 = 0.0;
        for p in &self.pieces {
            a2 += p.start.cross(p.end);
            if let PieceKind::Arc { center, sweep } = p.kind {
                let r = (p.start - center).norm();
                a2 += r * r * (sweep - sweep.sin());
            }
        }
        0.5 * a2
    }

    fn check_simple(&self) -> Result<(), GeometryError> {
        let n = self.pieces.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if pieces_intersect_improperly(&self.pieces[i], &self.pieces[j], self.eps, adjacent)
                {
                    return Err(GeometryError::SelfIntersection(i, j));
                }
            }
        }
        Ok(())
    }

    fn check_cusps(&self) -> Result<(), GeometryError> {
        let n = self.pieces.len();
        for i in 0..n {
            let j = (i + 1) % n;
            let t_in = self.pieces[i].tangent_at(self.pieces[i].len());
            let t_out = self.pieces[j].tangent_at(0.0);
            let turn = t_in.cross(t_out).atan2(t_in.dot(t_out));
            if turn.abs() > std::f64::consts::PI - 1e-7 {
                return Err(GeometryError::Cusp(i, j));
            }
        }
        Ok(())
    }

    pub fn wrap(&self, s: f64) -> f64 {
        let mut s = s % self.total_len;
        if s < 0.0 {
            s += self.total_len;
        }
        s
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let s = self.wrap(s);
        let i = match self
            .cum_len
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.pieces.len() - 1),
            Err(i) => i - 1,
        };
        (i, s - self.cum_len[i])
    }

    pub fn point_at(&self, s: f64) -> Result<Point2, GeometryError> {
        if !(0.0..self.total_len).contains(&s) {
            return Err(GeometryError::ParamOutOfRange {
                s,
                len: self.total_len,
            });
        }
        Ok(self.point_at_wrapped(s))
    }

    pub fn point_at_wrapped(&self, s: f64) -> Point2 {
        let (i, t) = self.locate(s);
        self.pieces[i].point_at(t)
    }

    pub fn tangent_at(&self, s: f64) -> Point2 {
        let (i, t) = self.locate(s);
        self.pieces[i].tangent_at(t)
    }

    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        self.pieces
            .iter()
            .map(|bp| bp.dist_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of the curve around `p`; valid when `p` is farther
    /// than `clearance` from the boundary. Arcs are chord-subdivided until
    /// the sag is below half the clearance.
    fn winding_number(&self, p: Point2, clearance: f64) -> i32 {
        let mut total = 0.0;
        for piece in &self.pieces {
            match piece.kind {
                PieceKind::Line => total += angle_delta(p, piece.start, piece.end),
                PieceKind::Arc { center, sweep } => {
                    let r = (piece.start - center).norm();
                    // sag of a chord over angle step h is r(1-cos(h/2))
                    let max_step = 2.0 * (1.0 - (clearance * 0.5 / r).min(0.5)).acos().max(1e-3);
                    let nsub = ((sweep.abs() / max_step).ceil() as usize).clamp(1, 40_000);
                    let mut prev = piece.start;
                    for k in 1..=nsub {
                        let t = piece.len() * k as f64 / nsub as f64;
                        let next = piece.point_at(t);
                        total += angle_delta(p, prev, next);
                        prev = next;
                    }
                }
            }
        }
        (total / std::f64::consts::TAU).round() as i32
    }

    pub fn classify_point(&self, p: Point2, tol: f64) -> Region {
        let d = self.distance_to_boundary(p);
        if d <= tol {
            return Region::Boundary;
        }
        if self.winding_number(p, d) != 0 {
            Region::Inside
        } else {
            Region::Outside
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.classify_point(p, self.eps) != Region::Outside
    }

    /// True iff the open segment ]p,q[ lies in the open interior.
    pub fn open_segment_in_domain(&self, p: Point2, q: Point2) -> Result<bool, GeometryError> {
        let seg_len = p.dist(q);
        if seg_len <= self.eps {
            return Err(GeometryError::DegenerateSegment);
        }
        for piece in &self.pieces {
            for hit in segment_piece_hits(p, q, piece, self.eps) {
                match hit {
                    Hit::Overlap(t0, t1) => {
                        if (t1 - t0) * seg_len > 2.0 * self.eps {
                            return Ok(false);
                        }
                    }
                    Hit::Point(t) => {
                        let x = p + (q - p) * t;
                        if x.dist(p) > self.eps && x.dist(q) > self.eps {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        // segment interior never meets the boundary: decided by one probe
        Ok(self.classify_point(midpoint(p, q), self.eps) == Region::Inside)
    }

    pub fn convexity_report(&self) -> ConvexityReport {
        let angle_eps = 1e-7;
        let n = self.pieces.len();
        let mut flat = Vec::new();
        let mut reflex = Vec::new();
        let mut singular = Vec::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            let span = BoundaryArc::new(self.cum_len[i], piece.len());
            match piece.kind {
                PieceKind::Line => flat.push(span),
                PieceKind::Arc { sweep, .. } => {
                    if sweep < 0.0 {
                        reflex.push(span);
                    }
                }
            }
        }
        for i in 0..n {
            let j = (i + 1) % n;
            let t_in = self.pieces[i].tangent_at(self.pieces[i].len());
            let t_out = self.pieces[j].tangent_at(0.0);
            let turn = t_in.cross(t_out).atan2(t_in.dot(t_out));
            if turn.abs() > angle_eps {
                let s = self.wrap(self.cum_len[j]);
                singular.push(s);
                if turn < 0.0 {
                    reflex.push(BoundaryArc::new(s, 0.0));
                }
            }
        }
        singular.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let class = if !reflex.is_empty() {
            ConvexityClass::NonConvex
        } else if !flat.is_empty() {
            ConvexityClass::Convex
        } else {
            ConvexityClass::StrictlyConvex
        };
        ConvexityReport {
            class,
            flat_spans: flat,
            reflex_spans: reflex,
            singular_params: singular,
        }
    }

    /// Pieces covering a boundary arc, trimmed at its endpoints, each with
    /// the arclength of its start on this curve.
    pub fn sub_pieces(&self, arc: &BoundaryArc) -> Vec<(BoundaryPiece, f64)> {
        let mut out = Vec::new();
        let (mut idx, mut t0) = self.locate(arc.start);
        let mut remaining = arc.len.min(self.total_len);
        let mut global = self.wrap(arc.start);
        while remaining > 1e-12 * self.total_len {
            let piece = &self.pieces[idx];
            let plen = piece.len();
            let take = (plen - t0).min(remaining);
            if take > 1e-12 * self.total_len {
                let a = piece.point_at(t0);
                let b = piece.point_at(t0 + take);
                let trimmed = match piece.kind {
                    PieceKind::Line => BoundaryPiece::line(a, b),
                    PieceKind::Arc { center, sweep } => {
                        BoundaryPiece::arc(a, b, center, sweep * take / plen)
                    }
                };
                out.push((trimmed, global));
            }
            remaining -= take;
            global = self.wrap(global + take);
            idx = (idx + 1) % self.pieces.len();
            t0 = 0.0;
        }
        out
    }

    /// Sample points along a boundary arc (both endpoints included).
    pub fn sample_arc(&self, arc: &BoundaryArc, n: usize) -> Vec<Point2> {
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let d = arc.len * k as f64 / (n - 1) as f64;
                self.point_at_wrapped(arc.at(d, self.total_len))
            })
            .collect()
    }
}

fn piece_extent_samples(p: &BoundaryPiece) -> Vec<Point2> {
    match p.kind {
        PieceKind::Line => vec![p.start, p.end],
        PieceKind::Arc { .. } => {
            let l = p.len();
            (0..=8).map(|k| p.point_at(l * k as f64 / 8.0)).collect()
        }
    }
}

fn angle_delta(p: Point2, a: Point2, b: Point2) -> f64 {
    let va = a - p;
    let vb = b - p;
    va.cross(vb).atan2(va.dot(vb))
}

/// Intersections of segment [p,q] with a boundary piece, as parameters on
/// the segment. Tolerance-padded at the far ends so genuine touches are
/// not lost to rounding.
fn segment_piece_hits(p: Point2, q: Point2, piece: &BoundaryPiece, eps: f64) -> Vec<Hit> {
    let d = q - p;
    let seg_len = d.norm();
    let t_eps = eps / seg_len;
    let mut hits = Vec::new();
    match piece.kind {
        PieceKind::Line => {
            let a = piece.start;
            let b = piece.end;
            let e = b - a;
            let denom = d.cross(e);
            if denom.abs() * seg_len.max(e.norm()) < eps * eps {
                // parallel; collinear only if a is on the probe line
                if dist_point_line(a, p, q) <= eps {
                    let ta = (a - p).dot(d) / (seg_len * seg_len);
                    let tb = (b - p).dot(d) / (seg_len * seg_len);
                    let lo = ta.min(tb).max(0.0);
                    let hi = ta.max(tb).min(1.0);
                    if hi > lo {
                        hits.push(Hit::Overlap(lo, hi));
                    } else if hi >= lo - t_eps {
                        hits.push(Hit::Point(0.5 * (lo + hi)));
                    }
                }
            } else {
                let t = (a - p).cross(e) / denom;
                let u = (a - p).cross(d) / denom;
                let u_eps = eps / e.norm();
                if (-t_eps..=1.0 + t_eps).contains(&t) && (-u_eps..=1.0 + u_eps).contains(&u) {
                    hits.push(Hit::Point(t.clamp(0.0, 1.0)));
                }
            }
        }
        PieceKind::Arc { center, sweep: _ } => {
            let r = piece.radius();
            // |p + t d - c|^2 = r^2
            let f = p - center;
            let aa = d.dot(d);
            let bb = 2.0 * f.dot(d);
            let cc = f.dot(f) - r * r;
            let disc = bb * bb - 4.0 * aa * cc;
            let ang_pad = eps / r;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for t in [(-bb - sq) / (2.0 * aa), (-bb + sq) / (2.0 * aa)] {
                    if (-t_eps..=1.0 + t_eps).contains(&t) {
                        let x = p + d * t;
                        if piece.angle_on_arc((x - center).angle(), ang_pad) {
                            hits.push(Hit::Point(t.clamp(0.0, 1.0)));
                        }
                    }
                }
            } else {
                // tangential near-touch
                let t = (-bb / (2.0 * aa)).clamp(0.0, 1.0);
                let x = p + d * t;
                if piece.dist_to_point(x) <= eps {
                    hits.push(Hit::Point(t));
                }
            }
        }
    }
    hits
}

fn dist_point_line(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    ((p - a).cross(d) / d.norm()).abs()
}

/// True iff two segments intersect at a point interior to at least one of
/// them; shared endpoints do not count.
pub fn segments_cross_interior(a: (Point2, Point2), b: (Point2, Point2)) -> bool {
    let eps = 1e-12
        * (a.0.dist(a.1))
            .max(b.0.dist(b.1))
            .max(a.0.norm())
            .max(b.0.norm())
            .max(1.0);
    let d1 = a.1 - a.0;
    let d2 = b.1 - b.0;
    let denom = d1.cross(d2);
    if denom.abs() < eps {
        // parallel: interior contact only via collinear overlap
        if dist_point_line(b.0, a.0, a.1) > eps {
            return false;
        }
        let l2 = d1.dot(d1);
        let t0 = (b.0 - a.0).dot(d1) / l2;
        let t1 = (b.1 - a.0).dot(d1) / l2;
        let lo = t0.min(t1).max(0.0);
        let hi = t0.max(t1).min(1.0);
        return hi - lo > eps / d1.norm();
    }
    let t = (b.0 - a.0).cross(d2) / denom;
    let u = (b.0 - a.0).cross(d1) / denom;
    let te = eps / d1.norm();
    let ue = eps / d2.norm();
    if !(-te..=1.0 + te).contains(&t) || !(-ue..=1.0 + ue).contains(&u) {
        return false;
    }
    let t_interior = t > te && t < 1.0 - te;
    let u_interior = u > ue && u < 1.0 - ue;
    t_interior || u_interior
}

fn pieces_intersect_improperly(
    a: &BoundaryPiece,
    b: &BoundaryPiece,
    eps: f64,
    adjacent: bool,
) -> bool {
    // sample-based probe: chords of b against a's exact hit test
    let nb = match b.kind {
        PieceKind::Line => 1,
        PieceKind::Arc { .. } => 32,
    };
    let lb = b.len();
    for k in 0..nb {
        let p = b.point_at(lb * k as f64 / nb as f64);
        let q = b.point_at(lb * (k + 1) as f64 / nb as f64);
        if p.dist(q) < eps {
            continue;
        }
        for hit in segment_piece_hits(p, q, a, eps) {
            let xs = match hit {
                Hit::Point(t) => vec![p + (q - p) * t],
                Hit::Overlap(t0, t1) => {
                    if (t1 - t0) * p.dist(q) > 4.0 * eps {
                        return true;
                    }
                    vec![p + (q - p) * (0.5 * (t0 + t1))]
                }
            };
            for x in xs {
                let near_shared = if adjacent {
                    x.dist(a.start) < 4.0 * eps
                        || x.dist(a.end) < 4.0 * eps
                        || x.dist(b.start) < 4.0 * eps
                        || x.dist(b.end) < 4.0 * eps
                } else {
                    false
                };
                if !near_shared {
                    return true;
                }
            }
        }
    }
    false
}

/// Convex polygon (counterclockwise); may be degenerate (collinear points).
#[derive(Clone, Debug)]
pub struct ConvexPolygon {
    pub vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn hull_of(points: &[Point2]) -> ConvexPolygon {
        let mut pts: Vec<Point2> = points.to_vec();
        pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
        pts.dedup_by(|a, b| a.dist(*b) < 1e-14);
        if pts.len() < 3 {
            return ConvexPolygon { vertices: pts };
        }
        let mut lower: Vec<Point2> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 {
                let a = lower[lower.len() - 2];
                let b = lower[lower.len() - 1];
                if (b - a).cross(p - a) <= 0.0 {
                    lower.pop();
                } else {
                    break;
                }
            }
            lower.push(p);
        }
        let mut upper: Vec<Point2> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 {
                let a = upper[upper.len() - 2];
                let b = upper[upper.len() - 1];
                if (b - a).cross(p - a) <= 0.0 {
                    upper.pop();
                } else {
                    break;
                }
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() < 2 {
            // fully collinear input
            let mut ends = vec![pts[0], pts[pts.len() - 1]];
            ends.dedup_by(|a, b| a.dist(*b) < 1e-14);
            return ConvexPolygon { vertices: ends };
        }
        ConvexPolygon { vertices: lower }
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut a2 = 0.0;
        for i in 0..v.len() {
            a2 += v[i].cross(v[(i + 1) % v.len()]);
        }
        0.5 * a2
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let v = &self.vertices;
        if v.len() < 3 {
            if v.len() == 2 {
                return dist_point_segment(p, v[0], v[1]) <= tol;
            }
            return v.first().map(|&a| a.dist(p) <= tol).unwrap_or(false);
        }
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            if (b - a).cross(p - a) < -tol * (b - a).norm() {
                return false;
            }
        }
        true
    }

    /// Minimum distance between two convex polygons; zero when they overlap.
    pub fn distance_to(&self, other: &ConvexPolygon) -> f64 {
        if self.vertices.is_empty() || other.vertices.is_empty() {
            return f64::INFINITY;
        }
        if other.vertices.iter().any(|&p| self.contains(p, 0.0))
            || self.vertices.iter().any(|&p| other.contains(p, 0.0))
        {
            return 0.0;
        }
        let edges = |poly: &ConvexPolygon| -> Vec<(Point2, Point2)> {
            let v = &poly.vertices;
            if v.len() == 1 {
                vec![(v[0], v[0])]
            } else {
                (0..v.len())
                    .map(|i| (v[i], v[(i + 1) % v.len()]))
                    .collect()
            }
        };
        let mut best = f64::INFINITY;
        for (a0, a1) in edges(self) {
            for (b0, b1) in edges(other) {
                best = best.min(dist_segment_segment(a0, a1, b0, b1));
            }
        }
        best
    }
}

fn dist_segment_segment(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> f64 {
    if segments_cross_interior((a0, a1), (b0, b1)) {
        return 0.0;
    }
    dist_point_segment(a0, b0, b1)
        .min(dist_point_segment(a1, b0, b1))
        .min(dist_point_segment(b0, a0, a1))
        .min(dist_point_segment(b1, a0, a1))
}

/// Convex hull of a family of boundary arcs, sampled at `samples` points
/// per arc (endpoints always included).
pub fn convex_hull_region(
    curve: &BoundaryCurve,
    arcs: &[BoundaryArc],
    samples: usize,
) -> Result<ConvexPolygon, GeometryError> {
    if arcs.is_empty() {
        return Err(GeometryError::EmptyArcList);
    }
    let mut pts = Vec::new();
    for arc in arcs {
        pts.extend(curve.sample_arc(arc, samples.max(2)));
    }
    Ok(ConvexPolygon::hull_of(&pts))
}
