//! Partition of the boundary into paired monotone arcs and flat parts.
//!
//! Local extrema of g seed corner pairs that grow both sides at equal
//! TV-rate; the leftover monotone mass is matched cyclically at equal TV
//! into separated pairs. The output either satisfies the admissibility
//! structure or the operation refuses.

use thiserror::Error;

use crate::geometry::{
    convex_hull_region, BoundaryArc, BoundaryCurve, ConvexPolygon, HULL_SAMPLES_PER_ARC,
};
use crate::trace::SignedBoundaryMeasure;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("monotone mass cannot be paired into an admissible decomposition: {detail}")]
    Unsatisfiable {
        detail: String,
        offending: Vec<BoundaryArc>,
    },
}

/// One side of a pair; cumulative TV is measured from the anchor end.
#[derive(Clone, Copy, Debug)]
pub struct PairSide {
    pub arc: BoundaryArc,
    /// Whether the TV anchor sits at the forward start of the arc.
    pub anchor_at_start: bool,
}

impl PairSide {
    pub fn new(arc: BoundaryArc, anchor_at_start: bool) -> Self {
        PairSide {
            arc,
            anchor_at_start,
        }
    }
}

/// Corner pair: two monotone arcs whose closures meet at a single corner,
/// a strict local extremum of g.
#[derive(Clone, Debug)]
pub struct ChiPair {
    pub corner: f64,
    pub plus: PairSide,
    pub minus: PairSide,
    pub tv: f64,
    pub hull: ConvexPolygon,
}

/// Separated pair: two monotone arcs of equal TV at positive distance,
/// with matched g-values at corresponding endpoints.
#[derive(Clone, Debug)]
pub struct GammaPair {
    pub plus: PairSide,
    pub minus: PairSide,
    pub tv: f64,
    pub hull: ConvexPolygon,
}

/// Pair of matched arcs on a non-convex portion of the boundary, supplied
/// by a domain partition rather than found here.
#[derive(Clone, Debug)]
pub struct ExtensionPair {
    pub plus: PairSide,
    pub minus: PairSide,
    pub tv: f64,
}

#[derive(Clone, Debug)]
pub struct ArcDecomposition {
    pub chis: Vec<ChiPair>,
    pub gammas: Vec<GammaPair>,
    pub flats: Vec<BoundaryArc>,
    /// Leftover arcs carrying no TV mass (normally empty).
    pub residual: Vec<BoundaryArc>,
}

impl ArcDecomposition {
    pub fn pair_count(&self) -> usize {
        self.chis.len() + self.gammas.len()
    }
    pub fn total_pair_tv(&self) -> f64 {
        self.chis.iter().map(|c| c.tv).sum::<f64>()
            + self.gammas.iter().map(|g| g.tv).sum::<f64>()
    }
    pub fn hulls(&self) -> Vec<&ConvexPolygon> {
        self.chis
            .iter()
            .map(|c| &c.hull)
            .chain(self.gammas.iter().map(|g| &g.hull))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct H1Report {
    pub pass: bool,
    pub violations: Vec<String>,
}

struct Span {
    arc: BoundaryArc,
    sign: i8,
    tv: f64,
    claimed_head: f64,
    claimed_tail: f64,
}

impl Span {
    fn available(&self) -> f64 {
        self.tv - self.claimed_head - self.claimed_tail
    }
}

pub fn decompose(
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
) -> Result<ArcDecomposition, DecomposeError> {
    let l = curve.total_len();
    let tol_tv = 1e-12 * f.total_tv().max(1e-300);
    let m = f.monotone_decomposition();

    let mut spans: Vec<Span> = m
        .increasing
        .iter()
        .map(|&arc| (arc, 1i8))
        .chain(m.decreasing.iter().map(|&arc| (arc, -1i8)))
        .map(|(arc, sign)| Span {
            arc,
            sign,
            tv: f.tv_of_arc(&arc),
            claimed_head: 0.0,
            claimed_tail: 0.0,
        })
        .collect();
    spans.sort_by(|a, b| a.arc.start.partial_cmp(&b.arc.start).unwrap());

    // strict local extrema: a monotone arc ending exactly where an
    // opposite-sign one begins
    let join_tol = 1e-9 * l;
    let mut extrema: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..spans.len() {
        for j in 0..spans.len() {
            if i == j || spans[i].sign == spans[j].sign {
                continue;
            }
            let e = spans[i].arc.end(l);
            let d = (e - spans[j].arc.start).abs();
            let d = d.min(l - d);
            if d <= join_tol {
                extrema.push((spans[j].arc.start, i, j));
            }
        }
    }
    extrema.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut chis: Vec<ChiPair> = Vec::new();
    for &(corner, before, after) in &extrema {
        let tv = spans[before].available().min(spans[after].available());
        if tv <= tol_tv {
            continue;
        }
        spans[before].claimed_tail += tv;
        spans[after].claimed_head += tv;

        let b = &spans[before];
        let d_before = b.arc.len - f.offset_at_tv(&b.arc, b.tv - b.claimed_tail);
        let before_arc = BoundaryArc::new(b.arc.at(b.arc.len - d_before, l), d_before);
        let a = &spans[after];
        let d_after = f.offset_at_tv(&a.arc, a.claimed_head);
        let after_arc = BoundaryArc::new(a.arc.start, d_after);

        // local min: decreasing into the corner, increasing out of it
        let (plus, minus) = if spans[after].sign > 0 {
            (
                PairSide::new(after_arc, true),
                PairSide::new(before_arc, false),
            )
        } else {
            (
                PairSide::new(before_arc, false),
                PairSide::new(after_arc, true),
            )
        };
        let hull = convex_hull_region(curve, &[plus.arc, minus.arc], HULL_SAMPLES_PER_ARC)
            .expect("non-empty arcs");
        chis.push(ChiPair {
            corner,
            plus,
            minus,
            tv,
            hull,
        });
    }

    // remnant monotone mass after corner claims
    struct Remnant {
        arc: BoundaryArc,
        sign: i8,
        tv: f64,
    }
    let mut remnants: Vec<Remnant> = Vec::new();
    for sp in &spans {
        let rem = sp.available();
        if rem <= tol_tv {
            continue;
        }
        let d0 = f.offset_at_tv(&sp.arc, sp.claimed_head);
        let d1 = f.offset_at_tv(&sp.arc, sp.tv - sp.claimed_tail);
        remnants.push(Remnant {
            arc: BoundaryArc::new(sp.arc.at(d0, l), d1 - d0),
            sign: sp.sign,
            tv: rem,
        });
    }
    remnants.sort_by(|a, b| a.arc.start.partial_cmp(&b.arc.start).unwrap());

    let mut gammas: Vec<GammaPair> = Vec::new();
    if !remnants.is_empty() {
        // cyclic balanced matching; the cut position is a free choice, so try
        // each and keep the first one whose pairs are admissible
        let k = remnants.len();
        let mut found = false;
        let mut last_detail = String::from("no balanced matching over remnant arcs");
        'cuts: for cut in 0..k {
            let mut head_used = vec![0.0; k];
            let mut tail_used = vec![0.0; k];
            // stack of (remnant idx, tv still available from its tail)
            let mut stack: Vec<(usize, f64)> = Vec::new();
            let mut frags: Vec<(usize, f64, f64, usize, f64, f64)> = Vec::new();
            for step in 0..k {
                let j = (cut + step) % k;
                let mut rem_j = remnants[j].tv;
                while rem_j > tol_tv {
                    let Some(&mut (ti, ref mut trem)) = stack.last_mut() else {
                        break;
                    };
                    if remnants[ti].sign == remnants[j].sign {
                        break;
                    }
                    let m = trem.min(rem_j);
                    frags.push((
                        ti,
                        tail_used[ti],
                        tail_used[ti] + m,
                        j,
                        head_used[j],
                        head_used[j] + m,
                    ));
                    *trem -= m;
                    tail_used[ti] += m;
                    rem_j -= m;
                    head_used[j] += m;
                    if *trem <= tol_tv {
                        stack.pop();
                    }
                }
                if rem_j > tol_tv {
                    stack.push((j, rem_j));
                }
            }
            if !stack.is_empty() {
                continue;
            }
            // realize fragments as pairs
            let mut cand: Vec<GammaPair> = Vec::new();
            for &(xi, xa, xb, yi, ya, yb) in &frags {
                let x = &remnants[xi];
                let y = &remnants[yi];
                // x is consumed from its tail: forward TV range [tv-xb, tv-xa]
                let x0 = f.offset_at_tv(&x.arc, x.tv - xb);
                let x1 = f.offset_at_tv(&x.arc, x.tv - xa);
                let x_arc = BoundaryArc::new(x.arc.at(x0, l), x1 - x0);
                let y0 = f.offset_at_tv(&y.arc, ya);
                let y1 = f.offset_at_tv(&y.arc, yb);
                let y_arc = BoundaryArc::new(y.arc.at(y0, l), y1 - y0);
                let (plus, minus) = if x.sign > 0 {
                    (PairSide::new(x_arc, true), PairSide::new(y_arc, false))
                } else {
                    (PairSide::new(y_arc, true), PairSide::new(x_arc, false))
                };
                let hull =
                    convex_hull_region(curve, &[plus.arc, minus.arc], HULL_SAMPLES_PER_ARC)
                        .expect("non-empty arcs");
                cand.push(GammaPair {
                    plus,
                    minus,
                    tv: xb - xa,
                    hull,
                });
            }
            // admissibility of the candidate matching
            match matching_admissible(&cand, &chis, f, curve) {
                Ok(()) => {
                    gammas = cand;
                    found = true;
                    break 'cuts;
                }
                Err(why) => last_detail = why,
            }
        }
        if !found {
            return Err(DecomposeError::Unsatisfiable {
                detail: last_detail,
                offending: remnants.iter().map(|r| r.arc).collect(),
            });
        }
    }

    let flats = f.monotone_decomposition().flat.clone();
    Ok(ArcDecomposition {
        chis,
        gammas,
        flats,
        residual: Vec::new(),
    })
}

/// Split every pair at the singular boundary parameters inside its arcs,
/// so each resulting pair lives on smooth arcs. The innermost piece of a
/// corner pair keeps its corner; everything else becomes a separated pair.
/// Sub-pairs cut by the same ray share a hull edge, so this is a
/// preprocessing view of the same transport, not a drop-in replacement
/// for the primary decomposition.
pub fn repartition_at_singular(
    d: &ArcDecomposition,
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
) -> ArcDecomposition {
    let l = curve.total_len();
    let singular = curve.convexity_report().singular_params;
    let tol = 1e-9 * l;

    // TV coordinate of a boundary point from the side anchor, if inside
    let cut_tvs = |side: &PairSide, tv_total: f64| -> Vec<f64> {
        let mut cuts = Vec::new();
        for &s in &singular {
            if !side.arc.contains(s, l, -tol) {
                continue;
            }
            let mut off = s - side.arc.start;
            if off < 0.0 {
                off += l;
            }
            if off <= tol || off >= side.arc.len - tol {
                continue;
            }
            let head_tv = f.tv_of_arc(&BoundaryArc::new(side.arc.start, off));
            let tv = if side.anchor_at_start {
                head_tv
            } else {
                tv_total - head_tv
            };
            if tv > tol && tv < tv_total - tol {
                cuts.push(tv);
            }
        }
        cuts
    };

    let sub_side = |side: &PairSide, tv_total: f64, lo: f64, hi: f64| -> PairSide {
        let (o0, o1) = if side.anchor_at_start {
            (f.offset_at_tv(&side.arc, lo), f.offset_at_tv(&side.arc, hi))
        } else {
            (
                f.offset_at_tv(&side.arc, tv_total - hi),
                f.offset_at_tv(&side.arc, tv_total - lo),
            )
        };
        PairSide::new(
            BoundaryArc::new(side.arc.at(o0.min(o1), l), (o1 - o0).abs()),
            side.anchor_at_start,
        )
    };

    let mut chis = Vec::new();
    let mut gammas = Vec::new();
    let mut split = |plus: &PairSide, minus: &PairSide, tv: f64, corner: Option<f64>| {
        let mut cuts = cut_tvs(plus, tv);
        cuts.extend(cut_tvs(minus, tv));
        cuts.push(tv);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < tol);
        let mut lo = 0.0;
        for (k, &hi) in cuts.iter().enumerate() {
            let p = sub_side(plus, tv, lo, hi);
            let m = sub_side(minus, tv, lo, hi);
            let hull = convex_hull_region(curve, &[p.arc, m.arc], HULL_SAMPLES_PER_ARC)
                .expect("non-empty arcs");
            match (k, corner) {
                (0, Some(c)) => chis.push(ChiPair {
                    corner: c,
                    plus: p,
                    minus: m,
                    tv: hi - lo,
                    hull,
                }),
                _ => gammas.push(GammaPair {
                    plus: p,
                    minus: m,
                    tv: hi - lo,
                    hull,
                }),
            }
            lo = hi;
        }
    };
    for c in &d.chis {
        split(&c.plus, &c.minus, c.tv, Some(c.corner));
    }
    for g in &d.gammas {
        split(&g.plus, &g.minus, g.tv, None);
    }
    ArcDecomposition {
        chis,
        gammas,
        flats: d.flats.clone(),
        residual: d.residual.clone(),
    }
}

fn matching_admissible(
    gammas: &[GammaPair],
    chis: &[ChiPair],
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
) -> Result<(), String> {
    let eps = curve.eps();
    let margin = 8.0 * eps;
    let tol_g = 1e-9 * f.total_tv().max(1e-300);
    let g = f.trace();
    for (i, p) in gammas.iter().enumerate() {
        let d = arc_distance(curve, &p.plus.arc, &p.minus.arc);
        if d <= eps {
            return Err(format!("pair {i}: arcs are not separated (distance {d:.3e})"));
        }
        // matched endpoint values: low with low, high with high
        let (plo, phi) = side_values(g, curve.total_len(), &p.plus);
        let (mlo, mhi) = side_values(g, curve.total_len(), &p.minus);
        if (plo - mlo).abs() > tol_g.max(1e-9) || (phi - mhi).abs() > tol_g.max(1e-9) {
            return Err(format!(
                "pair {i}: endpoint values unmatched ({plo:.6} vs {mlo:.6}, {phi:.6} vs {mhi:.6})"
            ));
        }
    }
    let mut hulls: Vec<&ConvexPolygon> = chis.iter().map(|c| &c.hull).collect();
    hulls.extend(gammas.iter().map(|g| &g.hull));
    for i in 0..hulls.len() {
        for j in (i + 1)..hulls.len() {
            if hulls[i].distance_to(hulls[j]) <= margin {
                return Err(format!("hulls {i} and {j} are not separated"));
            }
        }
    }
    Ok(())
}

fn side_values(g: &crate::trace::TraceFunction, l: f64, side: &PairSide) -> (f64, f64) {
    let a = g.eval(side.arc.start);
    let b = g.eval(side.arc.end(l));
    (a.min(b), a.max(b))
}

fn arc_distance(curve: &BoundaryCurve, a: &BoundaryArc, b: &BoundaryArc) -> f64 {
    let pa = curve.sample_arc(a, 64);
    let pb = curve.sample_arc(b, 64);
    let mut best = f64::INFINITY;
    for p in &pa {
        for q in &pb {
            best = best.min(p.dist(*q));
        }
    }
    best
}

/// Check every structural clause of the pair decomposition.
pub fn verify_h1(
    d: &ArcDecomposition,
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
    tol_rel: f64,
) -> H1Report {
    let mut violations = Vec::new();
    let l = curve.total_len();
    let eps = curve.eps();
    let tol = tol_rel * f.total_tv().max(1e-300);

    for (i, c) in d.chis.iter().enumerate() {
        let tvp = f.tv_of_arc(&c.plus.arc);
        let tvm = f.tv_of_arc(&c.minus.arc);
        if (tvp - tvm).abs() > tol {
            violations.push(format!(
                "chi {i}: TV mismatch ({tvp:.12e} vs {tvm:.12e})"
            ));
        }
        if tvp <= tol {
            violations.push(format!("chi {i}: zero variation"));
        }
        // closures meet exactly at the corner
        let corner_pt = curve.point_at_wrapped(c.corner);
        let ends = |side: &PairSide| {
            let s0 = curve.point_at_wrapped(side.arc.start);
            let s1 = curve.point_at_wrapped(side.arc.end(l));
            if side.anchor_at_start {
                (s0, s1)
            } else {
                (s1, s0)
            }
        };
        let (p_anchor, p_far) = ends(&c.plus);
        let (m_anchor, m_far) = ends(&c.minus);
        if p_anchor.dist(corner_pt) > 10.0 * eps || m_anchor.dist(corner_pt) > 10.0 * eps {
            violations.push(format!("chi {i}: arcs do not meet at the corner"));
        }
        // far endpoints may only touch when the pair wraps the whole support
        let far_touch = p_far.dist(m_far) <= 10.0 * eps;
        let full_wrap = (c.plus.arc.len + c.minus.arc.len) >= l - 10.0 * eps
            || (f.total_tv() - 2.0 * c.tv).abs() <= tol;
        if far_touch && !full_wrap {
            violations.push(format!("chi {i}: arcs touch away from the corner"));
        }
    }

    for (i, p) in d.gammas.iter().enumerate() {
        let tvp = f.tv_of_arc(&p.plus.arc);
        let tvm = f.tv_of_arc(&p.minus.arc);
        if (tvp - tvm).abs() > tol {
            violations.push(format!(
                "gamma {i}: TV mismatch ({tvp:.12e} vs {tvm:.12e})"
            ));
        }
        let dist = arc_distance(curve, &p.plus.arc, &p.minus.arc);
        if dist <= eps {
            violations.push(format!("gamma {i}: arcs not separated (distance {dist:.3e})"));
        }
        let (plo, phi) = side_values(f.trace(), l, &p.plus);
        let (mlo, mhi) = side_values(f.trace(), l, &p.minus);
        if (plo - mlo).abs() > tol.max(1e-9) || (phi - mhi).abs() > tol.max(1e-9) {
            violations.push(format!("gamma {i}: endpoint values unmatched"));
        }
    }

    let hulls = d.hulls();
    let margin = 8.0 * eps;
    for i in 0..hulls.len() {
        for j in (i + 1)..hulls.len() {
            if hulls[i].distance_to(hulls[j]) <= margin {
                violations.push(format!("hulls {i} and {j} intersect or touch"));
            }
        }
    }

    for (i, flat) in d.flats.iter().enumerate() {
        if f.tv_of_arc(flat) > tol {
            violations.push(format!("flat {i} carries variation"));
        }
    }

    // pair TV accounts for the full positive mass
    let covered = d.total_pair_tv();
    if (covered - f.total_pos()).abs() > tol.max(1e-9 * f.total_pos().max(1e-300)) {
        violations.push(format!(
            "pair TV {covered:.12e} does not cover positive mass {:.12e}",
            f.total_pos()
        ));
    }

    H1Report {
        pass: violations.is_empty(),
        violations,
    }
}
