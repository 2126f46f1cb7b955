//! Level-set reconstruction of the solution: the rays of the transport map
//! are its level lines, locally constant regions take the level of their
//! bounding rays and flat boundary arcs.
//!
//! The function is never obtained by integrating the flow; the ray
//! foliation is primary and the rotation identity is audited separately.

use thiserror::Error;

use crate::fields::FieldRaster;
use crate::geometry::{BoundaryCurve, ConvexPolygon, Point2, Region};
use crate::partition::{pair_region_hull, CellKind, ValidatedPartition};
use crate::trace::SignedBoundaryMeasure;
use crate::transport::TransportMap;

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("point ({0:.6}, {1:.6}) is outside the domain")]
    OutsideDomain(f64, f64),
    #[error("probes disagree on the level of a flat component at ({x:.6}, {y:.6}): {levels:?}")]
    DegenerateRegion {
        x: f64,
        y: f64,
        levels: Vec<f64>,
    },
    #[error("no probe direction reached a level boundary from ({0:.6}, {1:.6})")]
    ProbeFailure(f64, f64),
}

enum PairRegion {
    Hull(ConvexPolygon),
    Cell(BoundaryCurve),
}

impl PairRegion {
    fn contains(&self, p: Point2, tol: f64) -> bool {
        match self {
            PairRegion::Hull(h) => h.contains(p, tol),
            PairRegion::Cell(c) => c.classify_point(p, tol) != Region::Outside,
        }
    }
}

pub struct Reconstructor<'a> {
    map: &'a TransportMap,
    f: &'a SignedBoundaryMeasure,
    curve: &'a BoundaryCurve,
    regions: Vec<PairRegion>,
    constant_cells: Vec<(BoundaryCurve, f64)>,
}

impl<'a> Reconstructor<'a> {
    pub fn new(
        map: &'a TransportMap,
        f: &'a SignedBoundaryMeasure,
        curve: &'a BoundaryCurve,
        partition: Option<&ValidatedPartition>,
    ) -> Self {
        let mut e_seen = 0usize;
        let regions = map
            .pairs()
            .iter()
            .map(|p| match p.class {
                crate::transport::PairClass::Extension => {
                    let region = partition
                        .map(|vp| {
                            let owner =
                                vp.pair_owner[map.pairs().len() - vp.e_pairs.len() + e_seen];
                            vp.partition.cells[owner].region.clone()
                        })
                        .unwrap_or_else(|| curve.clone());
                    e_seen += 1;
                    PairRegion::Cell(region)
                }
                _ => PairRegion::Hull(pair_region_hull(curve, &p.plus.arc, &p.minus.arc)),
            })
            .collect();
        let mut constant_cells = Vec::new();
        if let Some(vp) = partition {
            for cell in &vp.partition.cells {
                if cell.kind == CellKind::Constant {
                    if let Some(arc) = cell.trace_arcs.first() {
                        let level = f.trace().eval(arc.start);
                        constant_cells.push((cell.region.clone(), level));
                    }
                }
            }
        }
        Reconstructor {
            map,
            f,
            curve,
            regions,
            constant_cells,
        }
    }

    /// Signed side of `z` relative to the pair ray at cumulative TV `tv`.
    fn ray_side(&self, pair: usize, tv: f64, z: Point2) -> f64 {
        let (sp, sm) = self.map.ray_at_tv(pair, tv);
        let a = self.curve.point_at_wrapped(sp);
        let b = self.curve.point_at_wrapped(sm);
        (b - a).cross(z - a)
    }

    fn pair_level_at(&self, pair: usize, z: Point2) -> Option<f64> {
        let tv_total = self.map.pairs()[pair].tv;
        let lo_tv = 1e-12 * tv_total;
        let hi_tv = tv_total * (1.0 - 1e-12);
        let s_lo = self.ray_side(pair, lo_tv, z);
        let s_hi = self.ray_side(pair, hi_tv, z);
        let (mut lo, mut hi) = (lo_tv, hi_tv);
        if s_lo == 0.0 || s_hi == 0.0 {
            let tv = if s_lo == 0.0 { lo_tv } else { hi_tv };
            let (sp, _) = self.map.ray_at_tv(pair, tv);
            return Some(self.f.trace().eval(sp));
        }
        if s_lo.signum() == s_hi.signum() {
            return None;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            let s = self.ray_side(pair, mid, z);
            if s == 0.0 {
                let (sp, _) = self.map.ray_at_tv(pair, mid);
                return Some(self.f.trace().eval(sp));
            }
            if s.signum() == s_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (sp, _) = self.map.ray_at_tv(pair, 0.5 * (lo + hi));
        Some(self.f.trace().eval(sp))
    }

    /// Level of the solution at an interior point.
    pub fn evaluate(&self, z: Point2) -> Result<f64, ReconstructError> {
        let eps = self.curve.eps();
        if self.curve.classify_point(z, eps) == Region::Outside {
            return Err(ReconstructError::OutsideDomain(z.x, z.y));
        }
        let tol = 10.0 * eps;
        for (i, region) in self.regions.iter().enumerate() {
            if region.contains(z, tol) {
                if let Some(level) = self.pair_level_at(i, z) {
                    return Ok(level);
                }
            }
        }
        for (region, level) in &self.constant_cells {
            if region.classify_point(z, tol) != Region::Outside {
                return Ok(*level);
            }
        }
        self.flat_level_by_probing(z)
    }

    /// Probe several directions for the nearest level boundary: either a
    /// pair region (level of the ray through the entry point) or the domain
    /// boundary (value of the trace there). All probes must agree.
    fn flat_level_by_probing(&self, z: Point2) -> Result<f64, ReconstructError> {
        let d = self.curve.diameter() * 2.0;
        let mut levels = Vec::new();
        for k in 0..8 {
            let ang = std::f64::consts::FRAC_PI_4 * k as f64 + 0.01;
            let dir = Point2::new(ang.cos(), ang.sin());
            let far = z + dir * d;
            // nearest entry into a pair region
            let mut best_t = f64::INFINITY;
            let mut best: Option<f64> = None;
            for (i, region) in self.regions.iter().enumerate() {
                if let Some(t) = region_entry(region, z, far) {
                    if t < best_t {
                        if let Some(level) = self.pair_level_at_entry(i, z + dir * (t * d)) {
                            best_t = t;
                            best = Some(level);
                        }
                    }
                }
            }
            // or the domain boundary first
            if let Some(t) = curve_entry(self.curve, z, far) {
                if t < best_t {
                    let hit = z + dir * (t * d);
                    let s = nearest_boundary_param(self.curve, hit);
                    best = Some(self.f.trace().eval(s));
                }
            }
            if let Some(l) = best {
                levels.push(l);
            }
        }
        if levels.is_empty() {
            return Err(ReconstructError::ProbeFailure(z.x, z.y));
        }
        let lo = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-6 * self.f.total_tv().max(1.0);
        if hi - lo > tol {
            return Err(ReconstructError::DegenerateRegion {
                x: z.x,
                y: z.y,
                levels,
            });
        }
        Ok(0.5 * (lo + hi))
    }

    fn pair_level_at_entry(&self, pair: usize, w: Point2) -> Option<f64> {
        if let Some(l) = self.pair_level_at(pair, w) {
            return Some(l);
        }
        // entry point on an extreme ray: take the nearer end level
        let tv_total = self.map.pairs()[pair].tv;
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for tv in [1e-12 * tv_total, tv_total * (1.0 - 1e-12)] {
            let (sp, sm) = self.map.ray_at_tv(pair, tv);
            let a = self.curve.point_at_wrapped(sp);
            let b = self.curve.point_at_wrapped(sm);
            let dd = dist_point_seg(w, a, b);
            if dd < best_d {
                best_d = dd;
                best = Some(self.f.trace().eval(sp));
            }
        }
        best
    }
}

fn dist_point_seg(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// First parameter (fraction of [z, far]) at which the probe crosses into
/// the region, excluding a start inside it.
fn region_entry(region: &PairRegion, z: Point2, far: Point2) -> Option<f64> {
    match region {
        PairRegion::Hull(h) => {
            let v = &h.vertices;
            if v.len() < 2 {
                return None;
            }
            let mut best: Option<f64> = None;
            for i in 0..v.len() {
                let a = v[i];
                let b = v[(i + 1) % v.len()];
                if let Some(t) = seg_intersect_param(z, far, a, b) {
                    if t > 1e-12 {
                        best = Some(best.map_or(t, |x: f64| x.min(t)));
                    }
                }
            }
            best
        }
        PairRegion::Cell(c) => curve_entry(c, z, far),
    }
}

fn curve_entry(curve: &BoundaryCurve, z: Point2, far: Point2) -> Option<f64> {
    let mut best: Option<f64> = None;
    for piece in curve.pieces() {
        let samples = match piece.kind {
            crate::geometry::PieceKind::Line => 1,
            crate::geometry::PieceKind::Arc { .. } => 64,
        };
        let pl = piece.len();
        for k in 0..samples {
            let a = piece.point_at(pl * k as f64 / samples as f64);
            let b = piece.point_at(pl * (k + 1) as f64 / samples as f64);
            if let Some(t) = seg_intersect_param(z, far, a, b) {
                if t > 1e-12 {
                    best = Some(best.map_or(t, |x: f64| x.min(t)));
                }
            }
        }
    }
    best
}

fn seg_intersect_param(p: Point2, q: Point2, a: Point2, b: Point2) -> Option<f64> {
    let d1 = q - p;
    let d2 = b - a;
    let denom = d1.cross(d2);
    if denom.abs() < 1e-300 {
        return None;
    }
    let t = (a - p).cross(d2) / denom;
    let u = (a - p).cross(d1) / denom;
    if (0.0..=1.0).contains(&t) && (-1e-9..=1.0 + 1e-9).contains(&u) {
        Some(t)
    } else {
        None
    }
}

fn nearest_boundary_param(curve: &BoundaryCurve, p: Point2) -> f64 {
    // coarse scan then local refinement
    let l = curve.total_len();
    let n = 512;
    let mut best_s = 0.0;
    let mut best_d = f64::INFINITY;
    for k in 0..n {
        let s = l * k as f64 / n as f64;
        let d = curve.point_at_wrapped(s).dist(p);
        if d < best_d {
            best_d = d;
            best_s = s;
        }
    }
    let mut lo = best_s - l / n as f64;
    let mut hi = best_s + l / n as f64;
    for _ in 0..40 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let d1 = curve.point_at_wrapped((m1 + l) % l).dist(p);
        let d2 = curve.point_at_wrapped((m2 + l) % l).dist(p);
        if d1 < d2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    (0.5 * (lo + hi) + l) % l
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CellMask {
    Exterior,
    Interior,
    BoundaryAdjacent,
    Invalid,
}

#[derive(Clone, Debug)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub origin: Point2,
    pub hx: f64,
    pub hy: f64,
    pub u: Vec<f64>,
    pub mask: Vec<CellMask>,
}

impl ScalarField {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + (i as f64 + 0.5) * self.hx,
            self.origin.y + (j as f64 + 0.5) * self.hy,
        )
    }
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }
    fn valid(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            return false;
        }
        matches!(
            self.mask[(j as usize) * self.nx + i as usize],
            CellMask::Interior | CellMask::BoundaryAdjacent
        )
    }

    /// Central-difference gradient where both neighbors are inside, one-sided
    /// at the rim; None when no usable stencil exists.
    pub fn gradient(&self, i: usize, j: usize) -> Option<Point2> {
        if !self.valid(i as isize, j as isize) {
            return None;
        }
        let u = |i: isize, j: isize| self.u[(j as usize) * self.nx + i as usize];
        let (i, j) = (i as isize, j as isize);
        let gx = if self.valid(i - 1, j) && self.valid(i + 1, j) {
            (u(i + 1, j) - u(i - 1, j)) / (2.0 * self.hx)
        } else if self.valid(i + 1, j) {
            (u(i + 1, j) - u(i, j)) / self.hx
        } else if self.valid(i - 1, j) {
            (u(i, j) - u(i - 1, j)) / self.hx
        } else {
            return None;
        };
        let gy = if self.valid(i, j - 1) && self.valid(i, j + 1) {
            (u(i, j + 1) - u(i, j - 1)) / (2.0 * self.hy)
        } else if self.valid(i, j + 1) {
            (u(i, j + 1) - u(i, j)) / self.hy
        } else if self.valid(i, j - 1) {
            (u(i, j) - u(i, j - 1)) / self.hy
        } else {
            return None;
        };
        Some(Point2::new(gx, gy))
    }
}

/// Evaluate the reconstruction at every interior cell center of an
/// nx-by-ny grid over the domain bounding box.
pub fn u_grid(
    rec: &Reconstructor,
    curve: &BoundaryCurve,
    nx: usize,
    ny: usize,
) -> ScalarField {
    let (lo, hi) = curve.bbox();
    let hx = (hi.x - lo.x) / nx as f64;
    let hy = (hi.y - lo.y) / ny as f64;
    let mut field = ScalarField {
        nx,
        ny,
        origin: lo,
        hx,
        hy,
        u: vec![f64::NAN; nx * ny],
        mask: vec![CellMask::Exterior; nx * ny],
    };
    let near = (hx * hx + hy * hy).sqrt();
    for j in 0..ny {
        for i in 0..nx {
            let c = field.cell_center(i, j);
            let k = field.idx(i, j);
            match curve.classify_point(c, curve.eps()) {
                Region::Outside => continue,
                Region::Boundary | Region::Inside => {
                    let d = curve.distance_to_boundary(c);
                    field.mask[k] = if d <= near {
                        CellMask::BoundaryAdjacent
                    } else {
                        CellMask::Interior
                    };
                    match rec.evaluate(c) {
                        Ok(v) => field.u[k] = v,
                        Err(_) => field.mask[k] = CellMask::Invalid,
                    }
                }
            }
        }
    }
    field
}

/// Discrete total variation: sum of |grad u| h^2 over usable cells.
pub fn total_variation(field: &ScalarField) -> f64 {
    let mut tv = 0.0;
    for j in 0..field.ny {
        for i in 0..field.nx {
            if let Some(g) = field.gradient(i, j) {
                tv += g.norm() * field.hx * field.hy;
            }
        }
    }
    tv
}

fn smooth(values: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    // separable 3-cell kernel
    let w = [0.25, 0.5, 0.25];
    let mut tmp = vec![0.0; values.len()];
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = 0.0;
            for (o, wk) in (-1i32..=1).zip(w) {
                let ii = (i as i32 + o).clamp(0, nx as i32 - 1) as usize;
                acc += wk * values[j * nx + ii];
            }
            tmp[j * nx + i] = acc;
        }
    }
    let mut out = vec![0.0; values.len()];
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = 0.0;
            for (o, wk) in (-1i32..=1).zip(w) {
                let jj = (j as i32 + o).clamp(0, ny as i32 - 1) as usize;
                acc += wk * tmp[jj * nx + i];
            }
            out[j * nx + i] = acc;
        }
    }
    out
}

/// Normalized L1 discrepancy between the quarter-turn of the discrete
/// gradient (as cell masses) and the flow raster, after mollifying both.
pub fn rotation_check(field: &ScalarField, raster: &FieldRaster) -> f64 {
    assert_eq!(field.nx, raster.nx);
    assert_eq!(field.ny, raster.ny);
    let n = field.nx * field.ny;
    let mut ax = vec![0.0; n];
    let mut ay = vec![0.0; n];
    let cell = field.hx * field.hy;
    for j in 0..field.ny {
        for i in 0..field.nx {
            if let Some(g) = field.gradient(i, j) {
                // quarter turn counterclockwise
                ax[field.idx(i, j)] = -g.y * cell;
                ay[field.idx(i, j)] = g.x * cell;
            }
        }
    }
    let ax = smooth(&ax, field.nx, field.ny);
    let ay = smooth(&ay, field.nx, field.ny);
    let bx = smooth(&raster.vx, raster.nx, raster.ny);
    let by = smooth(&raster.vy, raster.nx, raster.ny);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        num += (ax[k] - bx[k]).hypot(ay[k] - by[k]);
        den += bx[k].hypot(by[k]);
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::decomp::decompose;
    use crate::fields::{make_plan, rasterize};
    use crate::trace::tangential_derivative;
    use crate::transport;

    struct Setup {
        data: builtins::BuiltinData,
        f: SignedBoundaryMeasure,
        map: TransportMap,
    }

    fn setup(data: builtins::BuiltinData) -> Setup {
        let f = tangential_derivative(&data.trace);
        let d = decompose(&f, &data.curve).unwrap();
        let map = transport::build(&d, &[], &f, &data.curve).unwrap();
        Setup { data, f, map }
    }

    #[test]
    fn disk_levels_are_x() {
        let s = setup(builtins::disk_cosine().unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        let v = rec.evaluate(Point2::new(0.3, 0.4)).unwrap();
        assert!((v - 0.3).abs() < 1e-6, "{v}");
        let v = rec.evaluate(Point2::new(-0.5, 0.1)).unwrap();
        assert!((v + 0.5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn delta_square_corner_fan_and_flat() {
        let s = setup(builtins::delta_square(0.25).unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        let v = rec.evaluate(Point2::new(0.05, 0.05)).unwrap();
        assert!((v - 0.10).abs() < 1e-9, "{v}");
        // central flat component sits at the cap level
        let v = rec.evaluate(Point2::new(0.5, 0.5)).unwrap();
        assert!((v - 0.25).abs() < 1e-9, "{v}");
        assert!(rec.evaluate(Point2::new(1.5, 0.5)).is_err());
    }

    #[test]
    fn disk_grid_matches_coordinate() {
        let s = setup(builtins::disk_cosine().unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        let field = u_grid(&rec, &s.data.curve, 128, 128);
        let mut worst = 0.0f64;
        for j in 0..field.ny {
            for i in 0..field.nx {
                let k = field.idx(i, j);
                if field.mask[k] == CellMask::Interior {
                    let c = field.cell_center(i, j);
                    worst = worst.max((field.u[k] - c.x).abs());
                }
            }
        }
        assert!(worst <= 2.0 * field.h(), "max error {worst}");
    }

    #[test]
    fn constant_data_constant_field() {
        let curve = builtins::delta_square(0.25).unwrap().curve;
        let g = crate::trace::TraceFunction::constant(2.0, 4.0);
        let f = tangential_derivative(&g);
        let d = decompose(&f, &curve).unwrap();
        let map = transport::build(&d, &[], &f, &curve).unwrap();
        let rec = Reconstructor::new(&map, &f, &curve, None);
        let v = rec.evaluate(Point2::new(0.3, 0.7)).unwrap();
        assert_eq!(v, 2.0);
        let field = u_grid(&rec, &curve, 32, 32);
        assert!((total_variation(&field)).abs() < 1e-12);
    }

    #[test]
    fn disk_total_variation_near_pi() {
        let s = setup(builtins::disk_cosine().unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        let field = u_grid(&rec, &s.data.curve, 256, 256);
        let tv = total_variation(&field);
        assert!(
            (tv - std::f64::consts::PI).abs() < 3e-2,
            "tv {tv} vs pi"
        );
    }

    #[test]
    fn delta_square_tv_matches_plan_cost() {
        let s = setup(builtins::delta_square(0.25).unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        let field = u_grid(&rec, &s.data.curve, 256, 256);
        let tv = total_variation(&field);
        let plan = make_plan(&s.map, &s.f, 800).unwrap();
        assert!(
            ((tv - plan.cost) / plan.cost).abs() < 5e-2,
            "tv {tv} vs cost {}",
            plan.cost
        );
    }

    #[test]
    fn maximum_principle_and_trace_attainment() {
        let s = setup(builtins::delta_square(0.25).unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        let field = u_grid(&rec, &s.data.curve, 128, 128);
        let lip = s.data.trace.lipschitz_bound();
        for j in 0..field.ny {
            for i in 0..field.nx {
                let k = field.idx(i, j);
                match field.mask[k] {
                    CellMask::Interior | CellMask::BoundaryAdjacent => {
                        assert!(field.u[k] >= -1e-9 && field.u[k] <= 0.25 + 1e-9);
                        if field.mask[k] == CellMask::BoundaryAdjacent {
                            let c = field.cell_center(i, j);
                            let sb = nearest_boundary_param(&s.data.curve, c);
                            let gb = s.f.trace().eval(sb);
                            assert!(
                                (field.u[k] - gb).abs() <= 2.0 * field.h() * lip + 1e-9,
                                "u {} vs g {} at ({}, {})",
                                field.u[k],
                                gb,
                                c.x,
                                c.y
                            );
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn level_consistency_along_rays() {
        let s = setup(builtins::delta_square(0.3).unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let pair = rng.gen_range(0..s.map.pairs().len());
            let tvp = s.map.pairs()[pair].tv;
            let tv: f64 = rng.gen_range(0.05 * tvp..0.95 * tvp);
            let (sp, sm) = s.map.ray_at_tv(pair, tv);
            let a = s.data.curve.point_at_wrapped(sp);
            let b = s.data.curve.point_at_wrapped(sm);
            let t: f64 = rng.gen_range(0.2..0.8);
            let z = a + (b - a) * t;
            let level = s.f.trace().eval(sp);
            let v = rec.evaluate(z).unwrap();
            assert!((v - level).abs() <= 1e-9, "{v} vs {level}");
        }
    }

    #[test]
    fn disk_rotation_check() {
        let s = setup(builtins::disk_cosine().unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        let field = u_grid(&rec, &s.data.curve, 256, 256);
        let plan = make_plan(&s.map, &s.f, 1600).unwrap();
        let raster = rasterize(&plan, &s.data.curve, 256, 256).unwrap();
        let disc = rotation_check(&field, &raster);
        assert!(disc <= 0.1, "rotation discrepancy {disc}");
    }

    #[test]
    fn delta_square_rotation_check() {
        let s = setup(builtins::delta_square(0.25).unwrap());
        let rec = Reconstructor::new(&s.map, &s.f, &s.data.curve, None);
        let field = u_grid(&rec, &s.data.curve, 256, 256);
        let plan = make_plan(&s.map, &s.f, 1600).unwrap();
        let raster = rasterize(&plan, &s.data.curve, 256, 256).unwrap();
        let disc = rotation_check(&field, &raster);
        assert!(disc <= 0.15, "rotation discrepancy {disc}");
    }
}
