//! Point location cross-checked against an independent even-odd crossing
//! test on a fine polygonal approximation, for every built-in boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lgot_core::builtins;
use lgot_core::geometry::{BoundaryCurve, Point2, Region};

/// Even-odd ray casting on a dense polygonal approximation of the curve.
struct PolyOracle {
    pts: Vec<Point2>,
}

impl PolyOracle {
    fn new(curve: &BoundaryCurve, n: usize) -> Self {
        let l = curve.total_len();
        let pts = (0..n)
            .map(|k| curve.point_at_wrapped(l * k as f64 / n as f64))
            .collect();
        PolyOracle { pts }
    }

    fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        let n = self.pts.len();
        for i in 0..n {
            let a = self.pts[i];
            let b = self.pts[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn dist(&self, p: Point2) -> f64 {
        let n = self.pts.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.pts[i];
            let b = self.pts[(i + 1) % n];
            let d = b - a;
            let l2 = d.dot(d);
            let t = if l2 > 0.0 {
                ((p - a).dot(d) / l2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            best = best.min(p.dist(a + d * t));
        }
        best
    }
}

#[test]
fn classification_matches_monte_carlo_oracle() {
    let curves: Vec<(&str, BoundaryCurve)> = vec![
        ("delta_square", builtins::delta_square(0.25).unwrap().curve),
        ("disk_cosine", builtins::disk_cosine().unwrap().curve),
        ("rect_cshape", builtins::rect_cshape(0.25, 0.5).unwrap().curve),
        ("circ_cshape", builtins::circ_cshape(2.0, 1.0).unwrap().curve),
        (
            "nonuniq_squares",
            builtins::nonuniq_squares(1.0, 2.0).unwrap().curve,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (name, curve) in curves {
        let oracle = PolyOracle::new(&curve, 8192);
        let (lo, hi) = curve.bbox();
        let margin = 0.1 * curve.diameter();
        let mut checked = 0;
        while checked < 10_000 {
            let p = Point2::new(
                rng.gen_range(lo.x - margin..hi.x + margin),
                rng.gen_range(lo.y - margin..hi.y + margin),
            );
            // stay clear of the approximation's resolution band
            if oracle.dist(p) < 1e-3 * curve.diameter() {
                continue;
            }
            checked += 1;
            let got = curve.classify_point(p, curve.eps());
            let want = oracle.contains(p);
            assert_eq!(
                got == Region::Inside,
                want,
                "{name} at ({}, {})",
                p.x,
                p.y
            );
        }
    }
}

#[test]
fn rejected_chords_of_convex_curves_touch_the_boundary() {
    // on a convex domain a chord can only fail interior containment by
    // meeting the boundary away from its endpoints
    let curves = vec![
        builtins::delta_square(0.25).unwrap().curve,
        builtins::disk_cosine().unwrap().curve,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for curve in curves {
        let l = curve.total_len();
        for _ in 0..300 {
            let p = curve.point_at_wrapped(rng.gen_range(0.0..l));
            let q = curve.point_at_wrapped(rng.gen_range(0.0..l));
            if p.dist(q) <= 10.0 * curve.eps() {
                continue;
            }
            if curve.open_segment_in_domain(p, q).unwrap() {
                continue;
            }
            let mut touches = false;
            for k in 1..=1024 {
                let t = k as f64 / 1025.0;
                let z = p + (q - p) * t;
                if curve.distance_to_boundary(z) <= 1e-3 * curve.diameter() {
                    touches = true;
                    break;
                }
            }
            assert!(touches, "rejected chord never meets the boundary");
        }
    }
}
