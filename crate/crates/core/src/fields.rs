//! Atomized transport plans and their continuum fields: the scalar
//! transport density, the flow raster, boundary mass, and weak-divergence
//! residuals against a fixed battery of test functions.

use thiserror::Error;

use crate::geometry::{BoundaryCurve, Point2};
use crate::trace::SignedBoundaryMeasure;
use crate::transport::{TransportError, TransportMap};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("raster resolution must be at least 8x8")]
    ResolutionTooSmall,
}

#[derive(Clone, Copy, Debug)]
pub struct PlanAtom {
    pub source_s: f64,
    pub target_s: f64,
    pub source: Point2,
    pub target: Point2,
    pub mass: f64,
    pub level: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TransportPlan {
    pub atoms: Vec<PlanAtom>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn from_pairs(pairs: impl IntoIterator<Item = PlanAtom>) -> TransportPlan {
        let atoms: Vec<PlanAtom> = pairs.into_iter().collect();
        let cost = atoms.iter().map(|a| a.mass * a.source.dist(a.target)).sum();
        TransportPlan { atoms, cost }
    }
}

/// Push n equal-mass quantile atoms of the positive part through the map.
pub fn make_plan(
    map: &TransportMap,
    f: &SignedBoundaryMeasure,
    n: usize,
) -> Result<TransportPlan, FieldError> {
    if f.total_pos() <= 0.0 || map.is_empty() {
        return Ok(TransportPlan::default());
    }
    let curve = map.curve();
    let eps = curve.eps();
    let mut atoms = Vec::with_capacity(n);
    let mut cost = 0.0;
    for (s, mass) in f.inverse_cdf_sample(true, n).expect("positive mass") {
        let t = map.eval(s)?;
        let source = curve.point_at_wrapped(s);
        let target = curve.point_at_wrapped(t);
        let len = source.dist(target);
        if len <= eps {
            continue; // zero-length limit rays carry no transport
        }
        cost += mass * len;
        atoms.push(PlanAtom {
            source_s: s,
            target_s: t,
            source,
            target,
            mass,
            level: f.trace().eval(s),
        });
    }
    Ok(TransportPlan { atoms, cost })
}

#[derive(Clone, Debug)]
pub struct FieldRaster {
    pub nx: usize,
    pub ny: usize,
    pub origin: Point2,
    pub hx: f64,
    pub hy: f64,
    pub sigma: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl FieldRaster {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + (i as f64 + 0.5) * self.hx,
            self.origin.y + (j as f64 + 0.5) * self.hy,
        )
    }
    pub fn cell_of(&self, p: Point2) -> (usize, usize) {
        let i = ((p.x - self.origin.x) / self.hx).floor() as isize;
        let j = ((p.y - self.origin.y) / self.hy).floor() as isize;
        (
            i.clamp(0, self.nx as isize - 1) as usize,
            j.clamp(0, self.ny as isize - 1) as usize,
        )
    }
    pub fn total_sigma(&self) -> f64 {
        self.sigma.iter().sum()
    }
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }
}

/// Distribute each atom's segment over the grid cells it crosses, by exact
/// parameter clipping, so the total density telescopes to the plan cost.
pub fn rasterize(
    plan: &TransportPlan,
    curve: &BoundaryCurve,
    nx: usize,
    ny: usize,
) -> Result<FieldRaster, FieldError> {
    if nx < 8 || ny < 8 {
        return Err(FieldError::ResolutionTooSmall);
    }
    let (lo, hi) = curve.bbox();
    let hx = (hi.x - lo.x) / nx as f64;
    let hy = (hi.y - lo.y) / ny as f64;
    let mut raster = FieldRaster {
        nx,
        ny,
        origin: lo,
        hx,
        hy,
        sigma: vec![0.0; nx * ny],
        vx: vec![0.0; nx * ny],
        vy: vec![0.0; nx * ny],
    };
    let mut ts: Vec<f64> = Vec::new();
    for atom in &plan.atoms {
        let d = atom.target - atom.source;
        let len = d.norm();
        if len <= 0.0 {
            continue;
        }
        let dir = Point2::new(d.x / len, d.y / len);
        ts.clear();
        ts.push(0.0);
        ts.push(1.0);
        if d.x.abs() > 0.0 {
            let i0 = ((atom.source.x.min(atom.target.x) - lo.x) / hx).ceil() as isize;
            let i1 = ((atom.source.x.max(atom.target.x) - lo.x) / hx).floor() as isize;
            for i in i0..=i1 {
                let t = (lo.x + i as f64 * hx - atom.source.x) / d.x;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        if d.y.abs() > 0.0 {
            let j0 = ((atom.source.y.min(atom.target.y) - lo.y) / hy).ceil() as isize;
            let j1 = ((atom.source.y.max(atom.target.y) - lo.y) / hy).floor() as isize;
            for j in j0..=j1 {
                let t = (lo.y + j as f64 * hy - atom.source.y) / d.y;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 - t0 <= 0.0 {
                continue;
            }
            let mid = atom.source + d * (0.5 * (t0 + t1));
            let (i, j) = raster.cell_of(mid);
            let seg = (t1 - t0) * len * atom.mass;
            let k = raster.idx(i, j);
            raster.sigma[k] += seg;
            raster.vx[k] += seg * dir.x;
            raster.vy[k] += seg * dir.y;
        }
    }
    Ok(raster)
}

/// Mass-weighted total length of plan segments lying inside the boundary.
pub fn boundary_mass(plan: &TransportPlan, curve: &BoundaryCurve) -> f64 {
    plan.atoms
        .iter()
        .map(|a| a.mass * curve_overlap(curve, a.source, a.target))
        .sum()
}

fn curve_overlap(curve: &BoundaryCurve, p: Point2, q: Point2) -> f64 {
    let mut total = 0.0;
    let seg_len = p.dist(q);
    if seg_len <= 0.0 {
        return 0.0;
    }
    for piece in curve.pieces() {
        if let crate::geometry::PieceKind::Line = piece.kind {
            // collinear overlap of [p,q] with the piece
            let a = piece.start;
            let b = piece.end;
            let d = q - p;
            let cross_a = ((a - p).cross(d) / seg_len).abs();
            let cross_b = ((b - p).cross(d) / seg_len).abs();
            if cross_a > curve.eps() || cross_b > curve.eps() {
                continue;
            }
            let ta = (a - p).dot(d) / (seg_len * seg_len);
            let tb = (b - p).dot(d) / (seg_len * seg_len);
            let lo = ta.min(tb).max(0.0);
            let hi = ta.max(tb).min(1.0);
            if hi > lo {
                total += (hi - lo) * seg_len;
            }
        }
    }
    total
}

/// Fixed battery of weak-divergence test functions, version 1: monomials
/// to degree three plus two Gaussians scaled to the bounding box.
pub const TEST_BATTERY_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug)]
pub enum TestFunction {
    Monomial { px: u32, py: u32 },
    Gaussian { center: Point2, width: f64 },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Monomial { px, py } => format!("x^{px} y^{py}"),
            TestFunction::Gaussian { center, .. } => {
                format!("gauss({:.2},{:.2})", center.x, center.y)
            }
        }
    }
    pub fn eval(&self, p: Point2) -> f64 {
        match *self {
            TestFunction::Monomial { px, py } => p.x.powi(px as i32) * p.y.powi(py as i32),
            TestFunction::Gaussian { center, width } => {
                let r2 = (p - center).dot(p - center);
                (-r2 / (width * width)).exp()
            }
        }
    }
    pub fn grad(&self, p: Point2) -> Point2 {
        match *self {
            TestFunction::Monomial { px, py } => {
                let gx = if px == 0 {
                    0.0
                } else {
                    px as f64 * p.x.powi(px as i32 - 1) * p.y.powi(py as i32)
                };
                let gy = if py == 0 {
                    0.0
                } else {
                    py as f64 * p.x.powi(px as i32) * p.y.powi(py as i32 - 1)
                };
                Point2::new(gx, gy)
            }
            TestFunction::Gaussian { center, width } => {
                let v = self.eval(p);
                (p - center) * (-2.0 / (width * width) * v)
            }
        }
    }
}

pub fn test_battery(curve: &BoundaryCurve) -> Vec<TestFunction> {
    let (lo, hi) = curve.bbox();
    let c = Point2::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
    let w = curve.diameter();
    let mut out = Vec::new();
    for total in 0..=3u32 {
        for px in 0..=total {
            out.push(TestFunction::Monomial {
                px,
                py: total - px,
            });
        }
    }
    out.push(TestFunction::Gaussian {
        center: c,
        width: 0.5 * w,
    });
    out.push(TestFunction::Gaussian {
        center: Point2::new(c.x + 0.2 * w, c.y - 0.1 * w),
        width: 0.3 * w,
    });
    out
}

const GL8_NODES: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.525532409916329,
    -0.18343464249564978,
    0.18343464249564978,
    0.525532409916329,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.10122853629037669,
    0.22238103445337434,
    0.31370664587788705,
    0.36268378337836177,
    0.36268378337836177,
    0.31370664587788705,
    0.22238103445337434,
    0.10122853629037669,
];

/// Boundary integral of phi against the trace measure, by Gauss-Legendre
/// quadrature on each breakpoint cell split at curve piece boundaries.
pub fn boundary_integral(
    curve: &BoundaryCurve,
    f: &SignedBoundaryMeasure,
    phi: &TestFunction,
) -> f64 {
    let g = f.trace();
    let l = curve.total_len();
    let n = g.breakpoints().len();
    // curve piece boundaries, for splitting
    let mut piece_starts: Vec<f64> = Vec::with_capacity(curve.pieces().len());
    let mut acc = 0.0;
    for p in curve.pieces() {
        piece_starts.push(acc);
        acc += p.len();
    }
    let mut total = 0.0;
    for i in 0..n {
        let (s0, v0) = g.breakpoints()[i];
        let (s1, v1) = if i + 1 < n {
            g.breakpoints()[i + 1]
        } else {
            let (fs, fv) = g.breakpoints()[0];
            (fs + l, fv)
        };
        let slope = (v1 - v0) / (s1 - s0);
        if slope == 0.0 {
            continue;
        }
        let mut splits = vec![s0, s1];
        for &ps in &piece_starts {
            for sh in [ps, ps + l] {
                if sh > s0 + 1e-12 && sh < s1 - 1e-12 {
                    splits.push(sh);
                }
            }
        }
        splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in splits.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 0.0 {
                continue;
            }
            let half = 0.5 * (b - a);
            let midp = 0.5 * (a + b);
            for (node, weight) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
                let s = midp + half * node;
                let p = curve.point_at_wrapped(s % l);
                total += weight * half * phi.eval(p) * slope;
            }
        }
    }
    total
}

/// Weak-divergence defect per test function:
/// |sum over cells of grad(phi) . v + boundary integral of phi d f|.
pub fn divergence_residual(
    raster: &FieldRaster,
    curve: &BoundaryCurve,
    f: &SignedBoundaryMeasure,
    tests: &[TestFunction],
) -> Vec<(String, f64)> {
    tests
        .iter()
        .map(|phi| {
            let mut acc = 0.0;
            for j in 0..raster.ny {
                for i in 0..raster.nx {
                    let k = raster.idx(i, j);
                    if raster.sigma[k] == 0.0 {
                        continue;
                    }
                    let gph = phi.grad(raster.cell_center(i, j));
                    acc += gph.x * raster.vx[k] + gph.y * raster.vy[k];
                }
            }
            let bnd = boundary_integral(curve, f, phi);
            (phi.name(), (acc + bnd).abs())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::decomp::decompose;
    use crate::trace::tangential_derivative;
    use crate::transport;

    fn pipeline(
        data: &builtins::BuiltinData,
    ) -> (TransportMap, SignedBoundaryMeasure) {
        let f = tangential_derivative(&data.trace);
        let d = decompose(&f, &data.curve).unwrap();
        let map = transport::build(&d, &[], &f, &data.curve).unwrap();
        (map, f)
    }

    #[test]
    fn delta_square_plan_cost() {
        // per corner pair the rays sweep cost = integral of sqrt(2) t dt,
        // so the total is 2 sqrt(2) delta^2; quantile midpoints integrate a
        // linear length exactly
        let data = builtins::delta_square(0.25).unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 400).unwrap();
        let want = 2.0 * 2.0f64.sqrt() * 0.0625;
        assert!((plan.cost - want).abs() < 1e-3, "{}", plan.cost);
        assert!((plan.cost - want).abs() < 1e-12, "{}", plan.cost);
        let mass: f64 = plan.atoms.iter().map(|a| a.mass).sum();
        assert!((mass - f.total_pos()).abs() < 1e-12);
    }

    #[test]
    fn disk_plan_cost_tends_to_pi() {
        let data = builtins::disk_cosine().unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 400).unwrap();
        assert!(
            (plan.cost - std::f64::consts::PI).abs() < 2e-2,
            "{}",
            plan.cost
        );
    }

    #[test]
    fn constant_trace_empty_plan() {
        let curve = builtins::delta_square(0.25).unwrap().curve;
        let g = crate::trace::TraceFunction::constant(1.0, 4.0);
        let f = tangential_derivative(&g);
        let d = decompose(&f, &curve).unwrap();
        let map = transport::build(&d, &[], &f, &curve).unwrap();
        let plan = make_plan(&map, &f, 100).unwrap();
        assert_eq!(plan.atoms.len(), 0);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn raster_single_atom() {
        let data = builtins::delta_square(0.25).unwrap();
        let plan = TransportPlan::from_pairs([PlanAtom {
            source_s: 0.0,
            target_s: 0.0,
            source: Point2::new(0.0, 0.5),
            target: Point2::new(1.0, 0.5),
            mass: 1.0,
            level: 0.0,
        }]);
        let r = rasterize(&plan, &data.curve, 8, 8).unwrap();
        assert!((r.total_sigma() - 1.0).abs() < 1e-12);
        let vx: f64 = r.vx.iter().sum();
        let vy: f64 = r.vy.iter().sum();
        assert!((vx - 1.0).abs() < 1e-12 && vy.abs() < 1e-12);
    }

    #[test]
    fn raster_mass_telescopes_to_cost() {
        let data = builtins::delta_square(0.25).unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 800).unwrap();
        let r = rasterize(&plan, &data.curve, 256, 256).unwrap();
        assert!(
            ((r.total_sigma() - plan.cost) / plan.cost).abs() < 1e-12,
            "{} vs {}",
            r.total_sigma(),
            plan.cost
        );
    }

    #[test]
    fn disk_flow_points_up_in_lower_half() {
        let data = builtins::disk_cosine().unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 400).unwrap();
        let r = rasterize(&plan, &data.curve, 64, 64).unwrap();
        let mut lower_vy = 0.0;
        for j in 0..r.ny {
            for i in 0..r.nx {
                let c = r.cell_center(i, j);
                if c.y < -0.05 {
                    lower_vy += r.vy[r.idx(i, j)];
                }
            }
        }
        assert!(lower_vy > 0.0);
        let vx_total: f64 = r.vx.iter().sum();
        assert!(vx_total.abs() < 1e-9);
    }

    #[test]
    fn boundary_mass_zero_for_interior_rays() {
        let data = builtins::delta_square(0.25).unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 200).unwrap();
        assert_eq!(boundary_mass(&plan, &data.curve), 0.0);
    }

    #[test]
    fn boundary_mass_full_for_edge_transport() {
        let data = builtins::edge_counterexample().unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 200).unwrap();
        let bm = boundary_mass(&plan, &data.curve);
        assert!(
            ((bm - plan.cost) / plan.cost).abs() < 1e-9,
            "{bm} vs {}",
            plan.cost
        );
        let empty = TransportPlan::default();
        assert_eq!(boundary_mass(&empty, &data.curve), 0.0);
    }

    #[test]
    fn divergence_constant_test_function_is_exact() {
        let data = builtins::delta_square(0.25).unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 200).unwrap();
        let r = rasterize(&plan, &data.curve, 64, 64).unwrap();
        let phi = TestFunction::Monomial { px: 0, py: 0 };
        let res = divergence_residual(&r, &data.curve, &f, &[phi]);
        assert!(res[0].1 < 1e-12, "{}", res[0].1);
    }

    #[test]
    fn divergence_residual_within_budget() {
        let data = builtins::delta_square(0.25).unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 800).unwrap();
        let r = rasterize(&plan, &data.curve, 256, 256).unwrap();
        let battery = test_battery(&data.curve);
        for (name, res) in divergence_residual(&r, &data.curve, &f, &battery) {
            assert!(res <= 5e-3, "{name}: {res}");
        }
    }

    #[test]
    fn boundary_integral_matches_riemann_sum() {
        // independent check of the quadrature against a fine midpoint sum
        let data = builtins::disk_cosine().unwrap();
        let f = tangential_derivative(&data.trace);
        let phi = TestFunction::Monomial { px: 0, py: 1 };
        let got = boundary_integral(&data.curve, &f, &phi);
        let n = 400_000;
        let l = data.curve.total_len();
        let mut want = 0.0;
        for k in 0..n {
            let s0 = l * k as f64 / n as f64;
            let s1 = l * (k + 1) as f64 / n as f64;
            let p = data.curve.point_at_wrapped(0.5 * (s0 + s1));
            let dg = f.trace().eval(s1) - f.trace().eval(s0);
            want += phi.eval(p) * dg;
        }
        // integral of y dg = -integral sin^2 over the circle = -pi
        assert!((want + std::f64::consts::PI).abs() < 1e-3, "{want}");
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
    }

    #[test]
    fn disk_divergence_residuals() {
        let data = builtins::disk_cosine().unwrap();
        let (map, f) = pipeline(&data);
        let plan = make_plan(&map, &f, 800).unwrap();
        let r = rasterize(&plan, &data.curve, 256, 256).unwrap();
        let battery = test_battery(&data.curve);
        for (name, res) in divergence_residual(&r, &data.curve, &f, &battery) {
            assert!(res <= 5e-3, "{name}: {res}");
        }
    }
}
