//! Independent discrete assignment oracle: equal-mass atoms matched by a
//! shortest-augmenting-path solver that carries dual potentials, plus
//! optimality certificates (duality gap, cycle margins), cross-cell mass
//! audits, and a ray-support audit distinguishing equal-cost plans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{BoundaryCurve, Point2};
use crate::partition::ValidatedPartition;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("source and target atom counts differ ({0} vs {1})")]
    UnequalCounts(usize, usize),
    #[error("atom masses are not all equal")]
    UnequalMasses,
    #[error("empty atom set")]
    Empty,
    #[error("atom at arclength {0} belongs to no cell trace")]
    Attribution(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct OracleAtom {
    /// Arclength of the atom on the domain boundary.
    pub s: f64,
    pub point: Point2,
    pub mass: f64,
}

#[derive(Clone, Debug)]
pub struct DiscretePlan {
    pub sources: Vec<OracleAtom>,
    pub targets: Vec<OracleAtom>,
    /// Matched target index per source.
    pub assignment: Vec<usize>,
    /// Mass-weighted transport cost.
    pub cost: f64,
    /// Dual potentials on sources and targets (unweighted distances):
    /// u[i] + v[j] <= |x_i - y_j| with equality on matched pairs.
    pub dual_u: Vec<f64>,
    pub dual_v: Vec<f64>,
}

impl DiscretePlan {
    pub fn matched_pairs(&self) -> impl Iterator<Item = (Point2, Point2, f64)> + '_ {
        self.sources.iter().enumerate().map(|(i, s)| {
            let t = &self.targets[self.assignment[i]];
            (s.point, t.point, s.mass)
        })
    }

    pub fn dual_objective(&self) -> f64 {
        let mass = self.sources[0].mass;
        (self.dual_u.iter().sum::<f64>() + self.dual_v.iter().sum::<f64>()) * mass
    }
}

/// Optimal assignment between equal-count, equal-mass atom sets under
/// Euclidean cost, by shortest augmenting paths with potentials.
/// Deterministic for a fixed input order.
pub fn solve_assignment(
    sources: Vec<OracleAtom>,
    targets: Vec<OracleAtom>,
) -> Result<DiscretePlan, OracleError> {
    let n = sources.len();
    if n == 0 {
        return Err(OracleError::Empty);
    }
    if n != targets.len() {
        return Err(OracleError::UnequalCounts(n, targets.len()));
    }
    let mass = sources[0].mass;
    for a in sources.iter().chain(&targets) {
        if (a.mass - mass).abs() > 1e-9 * mass.abs().max(1e-300) {
            return Err(OracleError::UnequalMasses);
        }
    }

    let cost = |i: usize, j: usize| sources[i].point.dist(targets[j].point);

    // shortest augmenting path with potentials, 1-based helper arrays
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // column -> row (1-based, 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total: f64 = (0..n).map(|i| cost(i, assignment[i])).sum();
    let dual_u: Vec<f64> = (1..=n).map(|i| u[i]).collect();
    let dual_v: Vec<f64> = (1..=n).map(|j| v[j]).collect();
    Ok(DiscretePlan {
        cost: total * mass,
        sources,
        targets,
        assignment,
        dual_u,
        dual_v,
    })
}

/// |primal - dual| of a solved plan.
pub fn duality_gap(plan: &DiscretePlan) -> f64 {
    (plan.cost - plan.dual_objective()).abs()
}

/// Smallest cycle slack (shifted sum minus matched sum) over cycles of
/// matched pairs; nonnegative certifies discrete cyclical monotonicity.
/// Exhaustive up to `m_max` for small plans, seeded random cycles beyond.
pub fn cyclical_violation(plan: &DiscretePlan, m_max: usize, seed: u64) -> f64 {
    let n = plan.sources.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let pairs: Vec<(Point2, Point2)> = plan
        .matched_pairs()
        .map(|(a, b, _)| (a, b))
        .collect();
    let mut margin = f64::INFINITY;
    let mut eval = |cycle: &[usize]| {
        let m = cycle.len();
        let mut matched = 0.0;
        let mut shifted = 0.0;
        for k in 0..m {
            let (a, b) = pairs[cycle[k]];
            matched += a.dist(b);
            shifted += a.dist(pairs[cycle[(k + 1) % m]].1);
        }
        margin = margin.min(shifted - matched);
    };
    if n <= 40 {
        let mut idx = Vec::new();
        for m in 2..=m_max.min(n) {
            enumerate_cycles(n, m, &mut idx, &mut eval);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool: Vec<usize> = (0..n).collect();
        for _ in 0..100_000 {
            let m = rng.gen_range(2..=m_max.min(n));
            for i in 0..m {
                let j = rng.gen_range(i..n);
                pool.swap(i, j);
            }
            eval(&pool[..m]);
        }
    }
    margin
}

fn enumerate_cycles(n: usize, m: usize, idx: &mut Vec<usize>, eval: &mut impl FnMut(&[usize])) {
    // ordered subsets with the smallest element first: each cycle once up
    // to rotation (reflections evaluated separately, as the shifted sum is
    // direction-dependent)
    fn rec(
        n: usize,
        m: usize,
        first: usize,
        idx: &mut Vec<usize>,
        used: &mut Vec<bool>,
        eval: &mut impl FnMut(&[usize]),
    ) {
        if idx.len() == m {
            eval(idx);
            return;
        }
        for j in (first + 1)..n {
            if used[j] {
                continue;
            }
            used[j] = true;
            idx.push(j);
            rec(n, m, first, idx, used, eval);
            idx.pop();
            used[j] = false;
        }
    }
    let mut used = vec![false; n];
    for first in 0..n {
        idx.clear();
        idx.push(first);
        used[first] = true;
        rec(n, m, first, idx, &mut used, eval);
        used[first] = false;
    }
}

/// Mass moved between cells: entry (i, j) sums matched mass with the source
/// on cell i's trace and the target on cell j's.
pub fn cross_cell_mass(
    plan: &DiscretePlan,
    vp: &ValidatedPartition,
    curve: &BoundaryCurve,
) -> Result<Vec<Vec<f64>>, OracleError> {
    let k = vp.partition.cells.len();
    let l = curve.total_len();
    let tol = 1e-9 * l;
    let mut m = vec![vec![0.0; k]; k];
    for (i, src) in plan.sources.iter().enumerate() {
        let tgt = &plan.targets[plan.assignment[i]];
        let ci = vp
            .cell_of_boundary_point(src.s, l, tol)
            .ok_or(OracleError::Attribution(src.s))?;
        let cj = vp
            .cell_of_boundary_point(tgt.s, l, tol)
            .ok_or(OracleError::Attribution(tgt.s))?;
        m[ci][cj] += src.mass;
    }
    Ok(m)
}

pub fn off_diagonal_mass(m: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i != j {
                total += v;
            }
        }
    }
    total
}

#[derive(Clone, Debug)]
pub struct SupportAudit {
    /// Fraction of plan mass whose open segments stay inside the domain.
    pub interior_fraction: f64,
    /// Indices of pairs whose segments touch or leave the boundary.
    pub boundary_touching: Vec<usize>,
}

/// Check each matched segment's interior against the open domain.
pub fn audit_pairs(
    pairs: &[(Point2, Point2, f64)],
    curve: &BoundaryCurve,
) -> SupportAudit {
    let mut interior = 0.0;
    let mut total = 0.0;
    let mut touching = Vec::new();
    for (k, (a, b, mass)) in pairs.iter().enumerate() {
        total += mass;
        if a.dist(*b) <= curve.eps() {
            interior += mass;
            continue;
        }
        match curve.open_segment_in_domain(*a, *b) {
            Ok(true) => interior += mass,
            _ => touching.push(k),
        }
    }
    SupportAudit {
        interior_fraction: if total > 0.0 { interior / total } else { 1.0 },
        boundary_touching: touching,
    }
}

pub fn ray_support_audit(plan: &DiscretePlan, curve: &BoundaryCurve) -> SupportAudit {
    let pairs: Vec<(Point2, Point2, f64)> = plan.matched_pairs().collect();
    audit_pairs(&pairs, curve)
}

/// Quantile atoms of one sign of the boundary measure, as oracle input.
pub fn atoms_from_measure(
    f: &crate::trace::SignedBoundaryMeasure,
    curve: &BoundaryCurve,
    positive: bool,
    n: usize,
) -> Result<Vec<OracleAtom>, crate::trace::TraceError> {
    Ok(f.inverse_cdf_sample(positive, n)?
        .into_iter()
        .map(|(s, mass)| OracleAtom {
            s,
            point: curve.point_at_wrapped(s),
            mass,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::decomp::decompose;
    use crate::fields::make_plan;
    use crate::partition::{refine_all, validate};
    use crate::trace::tangential_derivative;
    use crate::transport;

    fn atom(x: f64, y: f64, mass: f64) -> OracleAtom {
        OracleAtom {
            s: 0.0,
            point: Point2::new(x, y),
            mass,
        }
    }

    #[test]
    fn two_by_two_identity() {
        let plan = solve_assignment(
            vec![atom(0.0, 0.0, 0.5), atom(1.0, 0.0, 0.5)],
            vec![atom(0.0, 1.0, 0.5), atom(1.0, 1.0, 0.5)],
        )
        .unwrap();
        assert_eq!(plan.assignment, vec![0, 1]);
        assert!((plan.cost - 1.0).abs() < 1e-12); // 2 segments x mass 0.5
        assert!(duality_gap(&plan) <= 1e-9);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        assert!(matches!(
            solve_assignment(vec![atom(0.0, 0.0, 1.0)], vec![]),
            Err(OracleError::UnequalCounts(1, 0))
        ));
        assert!(matches!(
            solve_assignment(
                vec![atom(0.0, 0.0, 1.0)],
                vec![atom(1.0, 0.0, 0.5)]
            ),
            Err(OracleError::UnequalMasses)
        ));
    }

    fn delta_square_oracle(delta: f64, n: usize) -> (DiscretePlan, f64) {
        let data = builtins::delta_square(delta).unwrap();
        let f = tangential_derivative(&data.trace);
        let d = decompose(&f, &data.curve).unwrap();
        let map = transport::build(&d, &[], &f, &data.curve).unwrap();
        let map_plan = make_plan(&map, &f, n).unwrap();
        let sources = atoms_from_measure(&f, &data.curve, true, n).unwrap();
        let targets = atoms_from_measure(&f, &data.curve, false, n).unwrap();
        let lp = solve_assignment(sources, targets).unwrap();
        (lp, map_plan.cost)
    }

    #[test]
    fn delta_square_oracle_agrees_when_admissible() {
        let (lp, map_cost) = delta_square_oracle(0.25, 200);
        assert!(
            ((map_cost - lp.cost) / lp.cost).abs() <= 1e-3,
            "map {map_cost} lp {}",
            lp.cost
        );
        assert!(duality_gap(&lp) <= 1e-9);
    }

    #[test]
    fn delta_square_oracle_beats_map_when_inadmissible() {
        let (lp, map_cost) = delta_square_oracle(0.40, 200);
        assert!(lp.cost < map_cost);
        assert!(
            (map_cost - lp.cost) / lp.cost > 1e-2,
            "gap {}",
            (map_cost - lp.cost) / lp.cost
        );
    }

    #[test]
    fn dual_potentials_are_c_transforms() {
        let (lp, _) = delta_square_oracle(0.25, 60);
        for i in 0..lp.sources.len() {
            let min_c: f64 = (0..lp.targets.len())
                .map(|j| lp.sources[i].point.dist(lp.targets[j].point) - lp.dual_v[j])
                .fold(f64::INFINITY, f64::min);
            assert!((lp.dual_u[i] - min_c).abs() <= 1e-9, "row {i}");
        }
    }

    #[test]
    fn optimal_plan_is_cyclically_monotone() {
        let (lp, _) = delta_square_oracle(0.25, 32);
        let margin = cyclical_violation(&lp, 4, 7);
        assert!(margin >= -1e-9, "margin {margin}");
    }

    #[test]
    fn inadmissible_map_matching_detected_by_cycles() {
        // use the TV-matched pairing as the assignment at a parameter where
        // it is not optimal: a negative cycle must appear
        let data = builtins::delta_square(0.40).unwrap();
        let f = tangential_derivative(&data.trace);
        let d = decompose(&f, &data.curve).unwrap();
        let map = transport::build(&d, &[], &f, &data.curve).unwrap();
        let n = 16;
        let sources = atoms_from_measure(&f, &data.curve, true, n).unwrap();
        let targets: Vec<OracleAtom> = sources
            .iter()
            .map(|a| {
                let t = map.eval(a.s).unwrap();
                OracleAtom {
                    s: t,
                    point: data.curve.point_at_wrapped(t),
                    mass: a.mass,
                }
            })
            .collect();
        let plan = DiscretePlan {
            assignment: (0..n).collect(),
            cost: sources
                .iter()
                .zip(&targets)
                .map(|(s, t)| s.mass * s.point.dist(t.point))
                .sum(),
            dual_u: vec![0.0; n],
            dual_v: vec![0.0; n],
            sources,
            targets,
        };
        let margin = cyclical_violation(&plan, 4, 7);
        assert!(margin < 0.0, "margin {margin}");
    }

    #[test]
    fn single_atom_has_no_cycles() {
        let plan = solve_assignment(
            vec![atom(0.0, 0.0, 1.0)],
            vec![atom(1.0, 0.0, 1.0)],
        )
        .unwrap();
        assert_eq!(cyclical_violation(&plan, 4, 1), f64::INFINITY);
    }

    #[test]
    fn cross_cell_mass_diagonal_when_separated() {
        let data = builtins::rect_cshape(0.25, 0.5).unwrap();
        let f = tangential_derivative(&data.trace);
        let p = refine_all(data.partition.as_ref().unwrap(), 4, &f, &data.curve).unwrap();
        let vp = validate(&p, &f, &data.curve).unwrap();
        let n = 400;
        let sources = atoms_from_measure(&f, &data.curve, true, n).unwrap();
        let targets = atoms_from_measure(&f, &data.curve, false, n).unwrap();
        let lp = solve_assignment(sources, targets).unwrap();
        let m = cross_cell_mass(&lp, &vp, &data.curve).unwrap();
        assert!(off_diagonal_mass(&m) <= 1e-9, "{}", off_diagonal_mass(&m));
    }

    #[test]
    fn cross_cell_mass_appears_when_notch_is_narrow() {
        let data = builtins::rect_cshape(0.04, 0.5).unwrap();
        let f = tangential_derivative(&data.trace);
        let p = refine_all(data.partition.as_ref().unwrap(), 4, &f, &data.curve).unwrap();
        let vp = validate(&p, &f, &data.curve).unwrap();
        let n = 400;
        let sources = atoms_from_measure(&f, &data.curve, true, n).unwrap();
        let targets = atoms_from_measure(&f, &data.curve, false, n).unwrap();
        let lp = solve_assignment(sources, targets).unwrap();
        let m = cross_cell_mass(&lp, &vp, &data.curve).unwrap();
        assert!(off_diagonal_mass(&m) > 1e-3, "{}", off_diagonal_mass(&m));
    }

    #[test]
    fn audit_separates_interior_from_boundary_transport() {
        let data = builtins::delta_square(0.25).unwrap();
        let f = tangential_derivative(&data.trace);
        let d = decompose(&f, &data.curve).unwrap();
        let map = transport::build(&d, &[], &f, &data.curve).unwrap();
        let plan = make_plan(&map, &f, 100).unwrap();
        let pairs: Vec<(Point2, Point2, f64)> = plan
            .atoms
            .iter()
            .map(|a| (a.source, a.target, a.mass))
            .collect();
        let audit = audit_pairs(&pairs, &data.curve);
        assert_eq!(audit.interior_fraction, 1.0);

        let data = builtins::edge_counterexample().unwrap();
        let f = tangential_derivative(&data.trace);
        let d = decompose(&f, &data.curve).unwrap();
        let map = transport::build(&d, &[], &f, &data.curve).unwrap();
        let plan = make_plan(&map, &f, 100).unwrap();
        let pairs: Vec<(Point2, Point2, f64)> = plan
            .atoms
            .iter()
            .map(|a| (a.source, a.target, a.mass))
            .collect();
        let audit = audit_pairs(&pairs, &data.curve);
        assert_eq!(audit.interior_fraction, 0.0);
        assert_eq!(audit.boundary_touching.len(), pairs.len());
    }

    #[test]
    fn deterministic_assignments() {
        let (a, _) = delta_square_oracle(0.3, 50);
        let (b, _) = delta_square_oracle(0.3, 50);
        assert_eq!(a.assignment, b.assignment);
    }
}
