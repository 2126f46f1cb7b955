//! The TV-matching transport map between the positive and negative parts
//! of the boundary measure, realized as monotone cumulative-TV tables per
//! pair. g piecewise linear makes the tables piecewise linear, so lookups
//! are a binary search plus one linear solve, with no iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::decomp::{ArcDecomposition, ExtensionPair, PairSide};
use crate::geometry::{BoundaryArc, BoundaryCurve, Point2};
use crate::trace::SignedBoundaryMeasure;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("arclength {0} is not in the domain of the map")]
    NotInDomain(f64),
    #[error("pair {0} has zero variation")]
    ZeroTvPair(usize),
    #[error("level mismatch at arclength {s}: {got} vs {want}")]
    LevelMismatch { s: f64, got: f64, want: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairClass {
    Chi { corner: f64 },
    Gamma,
    Extension,
}

/// One side of a pair: cumulative TV from the anchor as a piecewise-linear
/// function of distance from the anchor along the arc.
#[derive(Clone, Debug)]
pub struct SideTable {
    pub arc: BoundaryArc,
    pub anchor_at_start: bool,
    /// (distance from anchor, tv from anchor), both strictly increasing
    profile: Vec<(f64, f64)>,
}

impl SideTable {
    fn build(f: &SignedBoundaryMeasure, side: &PairSide, total_len: f64) -> Self {
        let arc = side.arc;
        let mut offs: Vec<f64> = vec![0.0, arc.len];
        for &(s, _) in f.trace().breakpoints() {
            let mut off = s - arc.start;
            if off < 0.0 {
                off += total_len;
            }
            if off > 0.0 && off < arc.len {
                offs.push(off);
            }
        }
        offs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        offs.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * total_len);
        let tv_total = f.tv_of_arc(&arc);
        let profile: Vec<(f64, f64)> = offs
            .iter()
            .map(|&off| {
                let tv_head = if off <= 0.0 {
                    0.0
                } else {
                    f.tv_of_arc(&BoundaryArc::new(arc.start, off))
                };
                if side.anchor_at_start {
                    (off, tv_head)
                } else {
                    (arc.len - off, tv_total - tv_head)
                }
            })
            .collect();
        let mut profile = profile;
        profile.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        SideTable {
            arc,
            anchor_at_start: side.anchor_at_start,
            profile,
        }
    }

    pub fn tv_total(&self) -> f64 {
        self.profile.last().map(|p| p.1).unwrap_or(0.0)
    }

    /// Distance from the anchor for an arclength position on the arc.
    fn dist_from_anchor(&self, s: f64, total_len: f64) -> Option<f64> {
        let mut off = s - self.arc.start;
        if off < 0.0 {
            off += total_len;
        }
        if off > self.arc.len + 1e-9 * total_len {
            return None;
        }
        let off = off.clamp(0.0, self.arc.len);
        Some(if self.anchor_at_start {
            off
        } else {
            self.arc.len - off
        })
    }

    /// Arclength position at a given distance from the anchor.
    fn pos_at_dist(&self, d: f64, total_len: f64) -> f64 {
        let off = if self.anchor_at_start {
            d
        } else {
            self.arc.len - d
        };
        self.arc.at(off.clamp(0.0, self.arc.len), total_len)
    }

    fn tv_at_dist(&self, d: f64) -> f64 {
        interp(&self.profile, d)
    }

    fn dist_at_tv(&self, tv: f64) -> f64 {
        interp_inverse(&self.profile, tv)
    }
}

fn interp(table: &[(f64, f64)], x: f64) -> f64 {
    let n = table.len();
    if x <= table[0].0 {
        return table[0].1;
    }
    if x >= table[n - 1].0 {
        return table[n - 1].1;
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if table[mid].0 <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (x0, y0) = table[lo];
    let (x1, y1) = table[hi];
    if x1 - x0 <= 0.0 {
        return y0;
    }
    y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
}

fn interp_inverse(table: &[(f64, f64)], y: f64) -> f64 {
    let n = table.len();
    if y <= table[0].1 {
        return table[0].0;
    }
    if y >= table[n - 1].1 {
        return table[n - 1].0;
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if table[mid].1 <= y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (x0, y0) = table[lo];
    let (x1, y1) = table[hi];
    if y1 - y0 <= 0.0 {
        return x0;
    }
    x0 + (x1 - x0) * ((y - y0) / (y1 - y0))
}

#[derive(Clone, Debug)]
pub struct PairTable {
    pub class: PairClass,
    pub plus: SideTable,
    pub minus: SideTable,
    pub tv: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct TransportRay {
    pub source_s: f64,
    pub target_s: f64,
    pub source: Point2,
    pub target: Point2,
    pub level: f64,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct TransportMap {
    pairs: Vec<PairTable>,
    curve: BoundaryCurve,
    trace_tv: f64,
}

pub fn build(
    d: &ArcDecomposition,
    e_pairs: &[ExtensionPair],
    f: &SignedBoundaryMeasure,
    curve: &BoundaryCurve,
) -> Result<TransportMap, TransportError> {
    let l = curve.total_len();
    let mut pairs = Vec::new();
    for c in &d.chis {
        pairs.push(PairTable {
            class: PairClass::Chi { corner: c.corner },
            plus: SideTable::build(f, &c.plus, l),
            minus: SideTable::build(f, &c.minus, l),
            tv: c.tv,
        });
    }
    for g in &d.gammas {
        pairs.push(PairTable {
            class: PairClass::Gamma,
            plus: SideTable::build(f, &g.plus, l),
            minus: SideTable::build(f, &g.minus, l),
            tv: g.tv,
        });
    }
    for e in e_pairs {
        pairs.push(PairTable {
            class: PairClass::Extension,
            plus: SideTable::build(f, &e.plus, l),
            minus: SideTable::build(f, &e.minus, l),
            tv: e.tv,
        });
    }
    for (i, p) in pairs.iter().enumerate() {
        if p.tv <= 0.0 || p.plus.tv_total() <= 0.0 || p.minus.tv_total() <= 0.0 {
            return Err(TransportError::ZeroTvPair(i));
        }
    }
    Ok(TransportMap {
        pairs,
        curve: curve.clone(),
        trace_tv: f.total_tv(),
    })
}

impl TransportMap {
    pub fn pairs(&self) -> &[PairTable] {
        &self.pairs
    }
    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }
    pub fn trace_tv(&self) -> f64 {
        self.trace_tv
    }
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pair whose plus arc contains `s` (ties resolved toward the lowest
    /// pair index), with the distance from the pair anchor.
    fn locate_plus(&self, s: f64) -> Option<(usize, f64)> {
        let l = self.curve.total_len();
        let s = wrap(s, l);
        for (i, p) in self.pairs.iter().enumerate() {
            if p.plus.arc.contains(s, l, 1e-12 * l) {
                if let Some(d) = p.plus.dist_from_anchor(s, l) {
                    return Some((i, d));
                }
            }
        }
        None
    }

    fn locate_minus(&self, s: f64) -> Option<(usize, f64)> {
        let l = self.curve.total_len();
        let s = wrap(s, l);
        for (i, p) in self.pairs.iter().enumerate() {
            if p.minus.arc.contains(s, l, 1e-12 * l) {
                if let Some(d) = p.minus.dist_from_anchor(s, l) {
                    return Some((i, d));
                }
            }
        }
        None
    }

    /// Image of a plus-side point: the unique minus-side point at equal
    /// cumulative TV from the pair anchors.
    pub fn eval(&self, s_plus: f64) -> Result<f64, TransportError> {
        let (i, d) = self
            .locate_plus(s_plus)
            .ok_or(TransportError::NotInDomain(s_plus))?;
        let p = &self.pairs[i];
        let tv = p.plus.tv_at_dist(d);
        let dm = p.minus.dist_at_tv(tv);
        Ok(p.minus.pos_at_dist(dm, self.curve.total_len()))
    }

    pub fn eval_inverse(&self, s_minus: f64) -> Result<f64, TransportError> {
        let (i, d) = self
            .locate_minus(s_minus)
            .ok_or(TransportError::NotInDomain(s_minus))?;
        let p = &self.pairs[i];
        let tv = p.minus.tv_at_dist(d);
        let dp = p.plus.dist_at_tv(tv);
        Ok(p.plus.pos_at_dist(dp, self.curve.total_len()))
    }

    pub fn ray(&self, s_plus: f64) -> Result<TransportRay, TransportError> {
        let s_minus = self.eval(s_plus)?;
        let source = self.curve.point_at_wrapped(s_plus);
        let target = self.curve.point_at_wrapped(s_minus);
        Ok(TransportRay {
            source_s: wrap(s_plus, self.curve.total_len()),
            target_s: s_minus,
            source,
            target,
            level: f64::NAN,
            length: source.dist(target),
        })
    }

    /// Ray with its level value, asserted to match on both endpoints.
    pub fn ray_with_level(
        &self,
        s_plus: f64,
        f: &SignedBoundaryMeasure,
    ) -> Result<TransportRay, TransportError> {
        let mut ray = self.ray(s_plus)?;
        let level = f.trace().eval(ray.source_s);
        let level_t = f.trace().eval(ray.target_s);
        let tol = 1e-9 * self.trace_tv.max(1e-300);
        if (level - level_t).abs() > tol {
            return Err(TransportError::LevelMismatch {
                s: ray.source_s,
                got: level_t,
                want: level,
            });
        }
        ray.level = level;
        Ok(ray)
    }

    /// Ray of pair `i` at cumulative TV `tv` from the anchors.
    pub fn ray_at_tv(&self, i: usize, tv: f64) -> (f64, f64) {
        let p = &self.pairs[i];
        let l = self.curve.total_len();
        let dp = p.plus.dist_at_tv(tv);
        let dm = p.minus.dist_at_tv(tv);
        (p.plus.pos_at_dist(dp, l), p.minus.pos_at_dist(dm, l))
    }

    /// Largest discrepancy |f-(A) - f+(T^-1(A))| over k random minus-side
    /// arcs A; the two masses are recomputed from the trace, independently
    /// of the profile tables.
    pub fn pushforward_distance(
        &self,
        f: &SignedBoundaryMeasure,
        k: usize,
        seed: u64,
    ) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = self.curve.total_len();
        let mut worst = 0.0f64;
        for _ in 0..k {
            let i = rng.gen_range(0..self.pairs.len());
            let p = &self.pairs[i];
            let t1: f64 = rng.gen_range(0.0..p.tv);
            let t2: f64 = rng.gen_range(0.0..p.tv);
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            if hi - lo <= 0.0 {
                continue;
            }
            let (_, m_lo) = (0, p.minus.pos_at_dist(p.minus.dist_at_tv(lo), l));
            let m_hi = p.minus.pos_at_dist(p.minus.dist_at_tv(hi), l);
            let (p_lo, p_hi) = (
                p.plus.pos_at_dist(p.plus.dist_at_tv(lo), l),
                p.plus.pos_at_dist(p.plus.dist_at_tv(hi), l),
            );
            let neg = f.neg_of_arc(&arc_between(m_lo, m_hi, l));
            let pos = f.pos_of_arc(&arc_between(p_lo, p_hi, l));
            worst = worst.max((neg - pos).abs());
        }
        worst
    }
}

fn wrap(s: f64, l: f64) -> f64 {
    let mut s = s % l;
    if s < 0.0 {
        s += l;
    }
    s
}

/// Shorter arc from a to b in positive orientation, either direction of
/// the endpoints.
fn arc_between(a: f64, b: f64, l: f64) -> BoundaryArc {
    let fwd = wrap(b - a, l);
    if fwd <= l - fwd {
        BoundaryArc::new(wrap(a, l), fwd)
    } else {
        BoundaryArc::new(wrap(b, l), l - fwd)
    }
}
