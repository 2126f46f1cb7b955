//! Domain partitions: convex cells, matched-arc cells on non-convex
//! boundary portions, and constant cells, with level-slice refinement of
//! cell families.
//!
//! Partitions are supplied (by a scenario or a built-in), never discovered;
//! validation rebuilds each convex cell's induced boundary function and runs
//! the pair decomposition on the cell itself.

use thiserror::Error;

use crate::decomp::{
    decompose, verify_h1, ArcDecomposition, ChiPair, DecomposeError, ExtensionPair, GammaPair,
    PairSide,
};
use crate::geometry::{
    convex_hull_region, BoundaryArc, BoundaryCurve, BoundaryPiece, ConvexityClass, GeometryError,
    PieceKind, Point2, Region, HULL_SAMPLES_PER_ARC,
};
use crate::trace::{tangential_derivative, SignedBoundaryMeasure, TraceError, TraceFunction};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("partition geometry: {0}")]
    Geometry(String),
    #[error("cells cover area {got:.9} of domain area {want:.9}")]
    Coverage { got: f64, want: f64 },
    #[error("cell {cell}: boundary measure of the cell is {mass:.3e}, not zero")]
    MassImbalance { cell: usize, mass: f64 },
    #[error("cell {cell}: induced boundary function invalid: {detail}")]
    InducedTrace { cell: usize, detail: String },
    #[error("cell {cell}: pair structure invalid: {0:?}", .violations)]
    CellStructure {
        cell: usize,
        violations: Vec<String>,
    },
    #[error("unknown cell family {0}")]
    UnknownFamily(String),
    #[error("family {0} is not sliceable: {1}")]
    NotSliceable(String, String),
    #[error("refinement exhausted at n={n}: {detail}")]
    RefinementExhausted { n: usize, detail: String },
    #[error(transparent)]
    Curve(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CellKind {
    /// Convex cell carrying its own pair decomposition ("C").
    Convex,
    /// Cell with one matched arc pair, at least one arc non-convex ("E").
    NonConvexPair,
    /// Cell whose boundary trace is constant ("X").
    Constant,
}

impl CellKind {
    pub fn tag(&self) -> &'static str {
        match self {
            CellKind::Convex => "C",
            CellKind::NonConvexPair => "E",
            CellKind::Constant => "X",
        }
    }
    pub fn from_tag(t: &str) -> Option<CellKind> {
        match t {
            "C" => Some(CellKind::Convex),
            "E" => Some(CellKind::NonConvexPair),
            "X" => Some(CellKind::Constant),
            _ => None,
        }
    }
}

/// Ordered elements of a cell boundary loop.
#[derive(Clone, Debug)]
pub enum LoopElement {
    /// Follow the domain boundary along this arc (positive orientation).
    Boundary(BoundaryArc),
    /// Straight interior edge.
    Line(Point2, Point2),
}

/// Matched trace arcs of a refinable cell.
#[derive(Clone, Copy, Debug)]
pub struct CellPairArcs {
    pub plus: PairSide,
    pub minus: PairSide,
    pub tv: f64,
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub kind: CellKind,
    pub region: BoundaryCurve,
    /// Per region piece: arclength of its start on the domain boundary,
    /// when the piece lies on it.
    piece_tags: Vec<Option<f64>>,
    pub trace_arcs: Vec<BoundaryArc>,
    pub family: Option<String>,
    pub pair: Option<CellPairArcs>,
}

impl Cell {
    pub fn new(
        kind: CellKind,
        elements: &[LoopElement],
        curve: &BoundaryCurve,
        family: Option<String>,
        pair: Option<CellPairArcs>,
    ) -> Result<Cell, PartitionError> {
        let mut pieces = Vec::new();
        let mut tags = Vec::new();
        let mut trace_arcs = Vec::new();
        for el in elements {
            match el {
                LoopElement::Boundary(arc) => {
                    for (piece, global) in curve.sub_pieces(arc) {
                        pieces.push(piece);
                        tags.push(Some(global));
                    }
                    trace_arcs.push(*arc);
                }
                LoopElement::Line(a, b) => {
                    pieces.push(BoundaryPiece::line(*a, *b));
                    tags.push(None);
                }
            }
        }
        let region = BoundaryCurve::with_eps_rel(pieces, 1e-9)
            .map_err(|e| PartitionError::Geometry(format!("cell loop: {e}")))?;
        Ok(Cell {
            kind,
            region,
            piece_tags: tags,
            trace_arcs,
            family,
            pair,
        })
    }

    pub fn area(&self) -> f64 {
        self.region.signed_area()
    }

    /// Map a cell arclength to the domain boundary, when it falls on a
    /// shared piece. Junction points prefer the tagged side.
    pub fn to_domain_arclength(&self, s_cell: f64, domain_len: f64) -> Option<f64> {
        let s = s_cell.rem_euclid(self.region.total_len());
        let tol = 1e-9 * self.region.total_len();
        let mut acc = 0.0;
        let mut best: Option<f64> = None;
        for (piece, tag) in self.region.pieces().iter().zip(&self.piece_tags) {
            let l = piece.len();
            if s >= acc - tol && s <= acc + l + tol {
                if let Some(g) = tag {
                    let off = (s - acc).clamp(0.0, l);
                    best = Some((g + off).rem_euclid(domain_len));
                    if s > acc + tol && s < acc + l - tol {
                        return best;
                    }
                }
            }
            acc += l;
        }
        best
    }

    /// Inverse of `to_domain_arclength` for points on this cell's trace.
    pub fn from_domain_arclength(&self, s_domain: f64, domain_len: f64) -> Option<f64> {
        let mut acc = 0.0;
        for (piece, tag) in self.region.pieces().iter().zip(&self.piece_tags) {
            let l = piece.len();
            if let Some(g) = tag {
                let mut off = s_domain - g;
                if off < -0.5 * domain_len {
                    off += domain_len;
                }
                if off > 0.5 * domain_len {
                    off -= domain_len;
                }
                if (-1e-12..=l + 1e-12).contains(&off) {
                    return Some(acc + off.clamp(0.0, l));
                }
            }
            acc += l;
        }
        None
    }

    /// Whether a domain arclength falls on this cell's trace.
    pub fn owns_boundary_point(&self, s: f64, domain_len: f64, tol: f64) -> bool {
        self.trace_arcs
            .iter()
            .any(|arc| arc.contains(s, domain_len, tol))
    }

    /// Boundary function of the cell: the domain trace along shared pieces,
    /// constant along interior edges.
    pub fn induced_trace(
        &self,
        g: &TraceFunction,
        domain_len: f64,
    ) -> Result<TraceFunction, PartitionError> {
        let mut bk: Vec<(f64, f64)> = Vec::new();
        let mut acc = 0.0f64;
        let mut last_value: Option<f64> = None;
        let cell_len = self.region.total_len();
        let tol = 1e-7 * (1.0 + g.lipschitz_bound() * domain_len);
        for (piece, tag) in self.region.pieces().iter().zip(&self.piece_tags) {
            let l = piece.len();
            match tag {
                Some(gs) => {
                    let v0 = g.eval(*gs);
                    if let Some(lv) = last_value {
                        if (lv - v0).abs() > tol {
                            return Err(PartitionError::Geometry(format!(
                                "induced boundary function jumps by {:.3e}",
                                (lv - v0).abs()
                            )));
                        }
                    }
                    bk.push((acc, v0));
                    // interior breakpoints of g on this piece
                    for &(s, v) in g.breakpoints() {
                        let mut off = s - gs;
                        if off < 0.0 {
                            off += domain_len;
                        }
                        if off > 1e-12 && off < l - 1e-12 {
                            bk.push((acc + off, v));
                        }
                    }
                    last_value = Some(g.eval((gs + l).rem_euclid(domain_len)));
                }
                None => {
                    let v = last_value.unwrap_or_else(|| {
                        // loop starts on an interior edge: take the value at
                        // the first shared piece, walking backward is overkill
                        self.first_trace_value(g, domain_len).unwrap_or(0.0)
                    });
                    bk.push((acc, v));
                    last_value = Some(v);
                }
            }
            acc += l;
        }
        // wraparound continuity
        if let (Some(lv), Some(&(_, first))) = (last_value, bk.first()) {
            if (lv - first).abs() > tol {
                return Err(PartitionError::Geometry(format!(
                    "induced boundary function discontinuous at loop closure ({:.3e})",
                    (lv - first).abs()
                )));
            }
        }
        Ok(TraceFunction::from_breakpoints(bk, cell_len)?)
    }

    fn first_trace_value(&self, g: &TraceFunction, domain_len: f64) -> Option<f64> {
        let _ = domain_len;
        self.piece_tags
            .iter()
            .flatten()
            .next()
            .map(|gs| g.eval(*gs))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Provenance {
    Supplied,
    Refined(usize),
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub cells: Vec<Cell>,
    pub provenance: Provenance,
}

/// A partition that passed validation, with the per-cell decompositions
/// mapped back to domain coordinates and merged.
#[derive(Clone, Debug)]
pub struct ValidatedPartition {
    pub partition: Partition,
    pub merged: ArcDecomposition,
    pub e_pairs: Vec<ExtensionPair>,
    /// Cell index owning each pair, in transport-map order
    /// (chis, then gammas, then extension pairs).
    pub pair_owner: Vec<usize>,
    pub notes: Vec<String>,
}

impl ValidatedPartition {
    pub fn cell_of_boundary_point(&self, s: f64, domain_len: f64, tol: f64) -> Option<usize> {
        self.partition
            .cells
            .iter()
            .position(|c| c.owns_boundary_point(s, domain_len, tol))
    }
}

pub fn validate(
    p: &Partition,
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
) -> Result<ValidatedPartition, PartitionError> {
    let mut notes = Vec::new();
    let domain_area = curve.signed_area();
    let cell_area: f64 = p.cells.iter().map(|c| c.area()).sum();
    if ((cell_area - domain_area) / domain_area).abs() > 1e-6 {
        return Err(PartitionError::Coverage {
            got: cell_area,
            want: domain_area,
        });
    }

    // cells must sit inside the closed domain
    for (i, cell) in p.cells.iter().enumerate() {
        for piece in cell.region.pieces() {
            for k in 0..3 {
                let pt = piece.point_at(piece.len() * (0.25 + 0.25 * k as f64));
                if curve.classify_point(pt, 10.0 * curve.eps()) == Region::Outside {
                    return Err(PartitionError::Geometry(format!(
                        "cell {i} leaves the domain near ({:.6}, {:.6})",
                        pt.x, pt.y
                    )));
                }
            }
        }
    }

    let tv_g = f.total_tv().max(1e-300);
    let l = curve.total_len();
    let mut chis: Vec<ChiPair> = Vec::new();
    let mut gammas: Vec<GammaPair> = Vec::new();
    let mut chi_owner = Vec::new();
    let mut gamma_owner = Vec::new();
    let mut e_pairs: Vec<ExtensionPair> = Vec::new();
    let mut e_owner = Vec::new();

    for (i, cell) in p.cells.iter().enumerate() {
        let trace_mass: f64 = cell.trace_arcs.iter().map(|a| f.measure_of_arc(a)).sum();
        match cell.kind {
            CellKind::Constant => {
                let tv: f64 = cell.trace_arcs.iter().map(|a| f.tv_of_arc(a)).sum();
                if tv > 1e-12 * tv_g {
                    return Err(PartitionError::CellStructure {
                        cell: i,
                        violations: vec![format!(
                            "constant cell carries variation {tv:.3e}"
                        )],
                    });
                }
            }
            CellKind::Convex => {
                if trace_mass.abs() > 1e-9 * tv_g {
                    return Err(PartitionError::MassImbalance {
                        cell: i,
                        mass: trace_mass,
                    });
                }
                if cell.region.convexity_report().class == ConvexityClass::NonConvex {
                    return Err(PartitionError::CellStructure {
                        cell: i,
                        violations: vec!["convex cell is not convex".into()],
                    });
                }
                let g_i = cell.induced_trace(f.trace(), l).map_err(|e| {
                    PartitionError::InducedTrace {
                        cell: i,
                        detail: e.to_string(),
                    }
                })?;
                let f_i = tangential_derivative(&g_i);
                let d_i = decompose(&f_i, &cell.region)?;
                let rep = verify_h1(&d_i, &f_i, &cell.region, 1e-9);
                if !rep.pass {
                    return Err(PartitionError::CellStructure {
                        cell: i,
                        violations: rep.violations,
                    });
                }
                // map the cell's pairs back to domain coordinates
                for c in &d_i.chis {
                    let corner = cell.to_domain_arclength(c.corner, l).ok_or_else(|| {
                        PartitionError::Geometry(format!("cell {i}: corner off the trace"))
                    })?;
                    chis.push(ChiPair {
                        corner,
                        plus: map_side(cell, &c.plus, l, i)?,
                        minus: map_side(cell, &c.minus, l, i)?,
                        tv: c.tv,
                        hull: c.hull.clone(),
                    });
                    chi_owner.push(i);
                }
                for gp in &d_i.gammas {
                    gammas.push(GammaPair {
                        plus: map_side(cell, &gp.plus, l, i)?,
                        minus: map_side(cell, &gp.minus, l, i)?,
                        tv: gp.tv,
                        hull: gp.hull.clone(),
                    });
                    gamma_owner.push(i);
                }
            }
            CellKind::NonConvexPair => {
                let pair = cell.pair.ok_or_else(|| PartitionError::CellStructure {
                    cell: i,
                    violations: vec!["matched-arc cell without designated sides".into()],
                })?;
                let mut violations = Vec::new();
                let tvp = f.tv_of_arc(&pair.plus.arc);
                let tvm = f.tv_of_arc(&pair.minus.arc);
                if (tvp - tvm).abs() > 1e-9 * tv_g {
                    violations.push(format!("side TV mismatch: {tvp:.12e} vs {tvm:.12e}"));
                }
                if (f.pos_of_arc(&pair.plus.arc) - tvp).abs() > 1e-9 * tv_g {
                    violations.push("plus side is not monotone increasing".into());
                }
                if (f.neg_of_arc(&pair.minus.arc) - tvm).abs() > 1e-9 * tv_g {
                    violations.push("minus side is not monotone decreasing".into());
                }
                if !violations.is_empty() {
                    return Err(PartitionError::CellStructure {
                        cell: i,
                        violations,
                    });
                }
                if !side_has_concavity(curve, &pair.plus.arc)
                    && !side_has_concavity(curve, &pair.minus.arc)
                {
                    notes.push(format!(
                        "cell {i}: both matched arcs are convex; a convex cell would do"
                    ));
                }
                e_pairs.push(ExtensionPair {
                    plus: pair.plus,
                    minus: pair.minus,
                    tv: tvp,
                });
                e_owner.push(i);
            }
        }
    }

    let merged = ArcDecomposition {
        chis,
        gammas,
        flats: f.monotone_decomposition().flat.clone(),
        residual: Vec::new(),
    };
    let mut pair_owner = chi_owner;
    pair_owner.extend(gamma_owner);
    pair_owner.extend(e_owner);

    Ok(ValidatedPartition {
        partition: p.clone(),
        merged,
        e_pairs,
        pair_owner,
        notes,
    })
}

fn map_side(
    cell: &Cell,
    side: &PairSide,
    domain_len: f64,
    cell_idx: usize,
) -> Result<PairSide, PartitionError> {
    let start = cell
        .to_domain_arclength(side.arc.start, domain_len)
        .ok_or_else(|| {
            PartitionError::Geometry(format!(
                "cell {cell_idx}: pair arc leaves the shared boundary"
            ))
        })?;
    Ok(PairSide {
        arc: BoundaryArc::new(start, side.arc.len),
        anchor_at_start: side.anchor_at_start,
    })
}

fn side_has_concavity(curve: &BoundaryCurve, arc: &BoundaryArc) -> bool {
    curve
        .sub_pieces(arc)
        .iter()
        .any(|(p, _)| matches!(p.kind, PieceKind::Arc { sweep, .. } if sweep < 0.0))
}

/// Position on a pair side at cumulative TV `tv` from the side anchor.
pub fn side_position_at_tv(
    f: &SignedBoundaryMeasure,
    side: &PairSide,
    tv: f64,
    domain_len: f64,
) -> f64 {
    let total = f.tv_of_arc(&side.arc);
    let off = if side.anchor_at_start {
        f.offset_at_tv(&side.arc, tv)
    } else {
        // the anchor sits at the arc end; tv accumulates backward
        f.offset_at_tv(&side.arc, (total - tv).max(0.0))
    };
    side.arc.at(off, domain_len)
}

fn slice_side(
    f: &SignedBoundaryMeasure,
    side: &PairSide,
    tv_lo: f64,
    tv_hi: f64,
    domain_len: f64,
) -> PairSide {
    let total = f.tv_of_arc(&side.arc);
    let (o0, o1) = if side.anchor_at_start {
        (f.offset_at_tv(&side.arc, tv_lo), f.offset_at_tv(&side.arc, tv_hi))
    } else {
        (
            f.offset_at_tv(&side.arc, (total - tv_lo).max(0.0)),
            f.offset_at_tv(&side.arc, (total - tv_hi).max(0.0)),
        )
    };
    let (lo, hi) = (o0.min(o1), o0.max(o1));
    PairSide {
        arc: BoundaryArc::new(side.arc.at(lo, domain_len), hi - lo),
        anchor_at_start: side.anchor_at_start,
    }
}

/// Slice every cell of `family` into `n` equal-TV level slices.
pub fn refine(
    p: &Partition,
    family: &str,
    n: usize,
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
) -> Result<Partition, PartitionError> {
    if n <= 1 {
        let mut q = p.clone();
        q.provenance = Provenance::Refined(1);
        return Ok(q);
    }
    let l = curve.total_len();
    let mut cells = Vec::new();
    let mut seen = false;
    for cell in &p.cells {
        if cell.family.as_deref() != Some(family) {
            cells.push(cell.clone());
            continue;
        }
        seen = true;
        let pair = cell.pair.ok_or_else(|| {
            PartitionError::NotSliceable(family.into(), "no designated sides".into())
        })?;
        for i in 0..n {
            let t0 = pair.tv * i as f64 / n as f64;
            let t1 = pair.tv * (i + 1) as f64 / n as f64;
            let plus = slice_side(f, &pair.plus, t0, t1, l);
            let minus = slice_side(f, &pair.minus, t0, t1, l);
            // level edges join equal-TV endpoints of the two sides
            let plus_start = curve.point_at_wrapped(plus.arc.start);
            let plus_end = curve.point_at_wrapped(plus.arc.end(l));
            let minus_start = curve.point_at_wrapped(minus.arc.start);
            let minus_end = curve.point_at_wrapped(minus.arc.end(l));
            let elements = vec![
                LoopElement::Boundary(plus.arc),
                LoopElement::Line(plus_end, minus_start),
                LoopElement::Boundary(minus.arc),
                LoopElement::Line(minus_end, plus_start),
            ];
            let slice = Cell::new(
                cell.kind,
                &elements,
                curve,
                cell.family.clone(),
                Some(CellPairArcs {
                    plus,
                    minus,
                    tv: t1 - t0,
                }),
            )?;
            if slice.region.signed_area() <= 0.0 {
                return Err(PartitionError::NotSliceable(
                    family.into(),
                    "slice loop is not positively oriented".into(),
                ));
            }
            cells.push(slice);
        }
    }
    if !seen {
        return Err(PartitionError::UnknownFamily(family.into()));
    }
    Ok(Partition {
        cells,
        provenance: Provenance::Refined(n),
    })
}

pub fn families(p: &Partition) -> Vec<String> {
    let mut out: Vec<String> = p
        .cells
        .iter()
        .filter_map(|c| c.family.clone())
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn refine_all(
    p: &Partition,
    n: usize,
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
) -> Result<Partition, PartitionError> {
    let mut q = p.clone();
    for fam in families(p) {
        q = refine(&q, &fam, n, f, curve)?;
    }
    q.provenance = Provenance::Refined(n);
    Ok(q)
}

/// Double the family slicing until `check` accepts the refined partition.
///
/// `check` sees the refined partition and reports the failing conditions
/// (empty = pass). The last report is carried in the error on exhaustion.
pub fn auto_refine_until(
    p: &Partition,
    n_max: usize,
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
    check: &mut dyn FnMut(&Partition) -> Result<Vec<String>, PartitionError>,
) -> Result<(Partition, usize), PartitionError> {
    if families(p).is_empty() {
        let fails = check(p)?;
        if fails.is_empty() {
            return Ok((p.clone(), 1));
        }
        return Err(PartitionError::RefinementExhausted {
            n: 1,
            detail: fails.join("; "),
        });
    }
    let mut n = 1;
    loop {
        let q = refine_all(p, n, f, curve)?;
        let fails = check(&q)?;
        if fails.is_empty() {
            return Ok((q, n));
        }
        if n >= n_max {
            return Err(PartitionError::RefinementExhausted {
                n,
                detail: fails.join("; "),
            });
        }
        n *= 2;
    }
}

/// Hull region of a merged pair, for point-location during reconstruction.
pub fn pair_region_hull(
    curve: &BoundaryCurve,
    plus: &BoundaryArc,
    minus: &BoundaryArc,
) -> crate::geometry::ConvexPolygon {
    convex_hull_region(curve, &[*plus, *minus], HULL_SAMPLES_PER_ARC).expect("two arcs")
}
