//! End-to-end pipeline: decompose, build the map, check admissibility,
//! assemble the plan and fields, reconstruct the solution, and optionally
//! cross-examine everything against the discrete assignment oracle.

use thiserror::Error;

use crate::admissibility::{
    self, AdmissibilityReport, ConditionId, CycleVariant, Verdict, DEFAULT_CYCLE_BUDGET,
};
use crate::decomp::{self, ArcDecomposition, DecomposeError, ExtensionPair};
use crate::fields::{self, FieldRaster, TransportPlan};
use crate::geometry::GeometryError;
use crate::oracle::{self, DiscretePlan, OracleError};
use crate::partition::{self, PartitionError, ValidatedPartition};
use crate::reconstruct::{self, Reconstructor, ScalarField};
use crate::scenario::Scenario;
use crate::trace::{tangential_derivative, SignedBoundaryMeasure, TraceError};
use crate::transport::{self, TransportError, TransportMap};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input/geometry error: {0}")]
    Input(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl From<GeometryError> for PipelineError {
    fn from(e: GeometryError) -> Self {
        PipelineError::Input(e.to_string())
    }
}
impl From<TraceError> for PipelineError {
    fn from(e: TraceError) -> Self {
        PipelineError::Input(e.to_string())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub check_only: bool,
    pub with_oracle: bool,
    /// Split pair arcs at singular boundary points before mapping.
    pub repartition: bool,
    pub atoms: usize,
    pub grid: usize,
    pub seed: u64,
    pub samples: usize,
    pub rays_per_pair: usize,
    pub refine_max: usize,
}

impl RunOptions {
    pub fn from_scenario(sc: &Scenario) -> Self {
        RunOptions {
            check_only: false,
            with_oracle: false,
            repartition: false,
            atoms: sc.params.atoms,
            grid: sc.params.grid,
            seed: sc.params.seed,
            samples: sc.params.samples,
            rays_per_pair: sc.params.rays_per_pair,
            refine_max: sc.params.refine_max,
        }
    }
}

/// Everything a run produces; the report fields are plain data, the heavy
/// objects stay available for emission and further analysis.
pub struct RunOutcome {
    pub scenario_name: String,
    pub conditions: Vec<AdmissibilityReport>,
    pub violated: bool,
    pub first_failure: Option<String>,
    pub refine_n: Option<usize>,

    pub f: SignedBoundaryMeasure,
    pub decomposition: ArcDecomposition,
    pub e_pairs: Vec<ExtensionPair>,
    pub validated: Option<ValidatedPartition>,
    pub map: TransportMap,
    pub plan: Option<TransportPlan>,
    pub raster: Option<FieldRaster>,
    pub field: Option<ScalarField>,
    pub oracle_plan: Option<DiscretePlan>,

    pub map_cost: Option<f64>,
    pub boundary_mass: Option<f64>,
    pub pushforward: Option<f64>,
    pub divergence: Vec<(String, f64)>,
    pub u_tv: Option<f64>,
    pub rotation: Option<f64>,
    pub oracle_cost: Option<f64>,
    pub duality_gap: Option<f64>,
    pub cyclical_margin: Option<f64>,
    pub cross_cell_offdiag: Option<f64>,
    pub cross_cell: Option<Vec<Vec<f64>>>,
    pub interior_fraction: Option<f64>,
    pub notes: Vec<String>,
}

impl RunOutcome {
    pub fn condition(&self, id: ConditionId) -> Option<&AdmissibilityReport> {
        self.conditions.iter().find(|c| c.condition == id)
    }
}

pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<RunOutcome, PipelineError> {
    let curve = &sc.curve;
    let f = tangential_derivative(&sc.trace);
    let mut conditions: Vec<AdmissibilityReport> = Vec::new();
    let mut notes = Vec::new();
    let mut refine_n = None;
    let mut validated: Option<ValidatedPartition> = None;

    // structural decomposition, from the partition when one is supplied
    let (decomposition, e_pairs) = match &sc.partition {
        Some(p) => {
            let variant = cycle_variant(sc);
            let budget = DEFAULT_CYCLE_BUDGET;
            let samples = opts.samples;
            let seed = opts.seed;
            let refined = partition::auto_refine_until(
                p,
                opts.refine_max,
                &f,
                curve,
                &mut |q| match partition::validate(q, &f, curve) {
                    Ok(vp) => {
                        let mut fails = Vec::new();
                        let a2 = admissibility::check_a2(&vp, &f, curve, samples.max(4));
                        if a2.verdict == Verdict::Violated {
                            fails.push("A2".to_string());
                        }
                        let cyc = admissibility::check_cell_cycles(
                            &vp, &f, curve, variant, true, samples, budget, seed,
                        );
                        if cyc.verdict == Verdict::Violated {
                            fails.push(cyc.condition.label().to_string());
                        }
                        Ok(fails)
                    }
                    Err(e) => Err(e),
                },
            );
            match refined {
                Ok((q, n)) => {
                    refine_n = Some(n);
                    let vp = partition::validate(&q, &f, curve).map_err(partition_input)?;
                    structural_report(&mut conditions, &vp, true);
                    let out = (vp.merged.clone(), vp.e_pairs.clone());
                    validated = Some(vp);
                    out
                }
                Err(PartitionError::RefinementExhausted { n, detail }) => {
                    // keep the coarsest refinement that validates, and let the
                    // condition checks below carry the violation verdicts
                    notes.push(format!(
                        "refinement exhausted at n={n}: {detail}; reporting at the base partition"
                    ));
                    refine_n = Some(n);
                    let vp = partition::validate(p, &f, curve).map_err(partition_input)?;
                    structural_report(&mut conditions, &vp, true);
                    let out = (vp.merged.clone(), vp.e_pairs.clone());
                    validated = Some(vp);
                    out
                }
                Err(e) => return Err(partition_condition(e, &mut conditions)),
            }
        }
        None => match decomp::decompose(&f, curve) {
            Ok(mut d) => {
                let rep = decomp::verify_h1(&d, &f, curve, 1e-9);
                conditions.push(AdmissibilityReport {
                    condition: ConditionId::H1,
                    verdict: if rep.pass {
                        Verdict::Satisfied
                    } else {
                        Verdict::Violated
                    },
                    margin: f64::NAN,
                    witnesses: Vec::new(),
                    notes: rep.violations,
                });
                if opts.repartition {
                    d = decomp::repartition_at_singular(&d, &f, curve);
                    notes.push(format!(
                        "repartitioned at singular boundary points: {} corner and {} separated pairs (sub-pairs cut by one ray share a hull edge)",
                        d.chis.len(),
                        d.gammas.len()
                    ));
                }
                (d, Vec::new())
            }
            Err(DecomposeError::Unsatisfiable { detail, .. }) => {
                conditions.push(AdmissibilityReport {
                    condition: ConditionId::H1,
                    verdict: Verdict::Violated,
                    margin: f64::NAN,
                    witnesses: Vec::new(),
                    notes: vec![detail],
                });
                // no structure to continue with
                return finish_early(sc, f, conditions, notes);
            }
        },
    };

    let map = transport::build(&decomposition, &e_pairs, &f, curve)?;

    // admissibility battery
    conditions.push(admissibility::check_h2(&map, opts.rays_per_pair));
    conditions.push(check_h3_stage(&map, validated.as_ref(), opts));
    let support: Vec<crate::geometry::BoundaryArc> = decomposition
        .chis
        .iter()
        .flat_map(|c| [c.plus.arc, c.minus.arc])
        .chain(
            decomposition
                .gammas
                .iter()
                .flat_map(|g| [g.plus.arc, g.minus.arc]),
        )
        .chain(e_pairs.iter().flat_map(|e| [e.plus.arc, e.minus.arc]))
        .collect();
    conditions.push(admissibility::check_s(curve, &f, &support));
    if let Some(vp) = &validated {
        conditions.push(admissibility::check_a2(vp, &f, curve, opts.samples.max(4)));
        let variant = cycle_variant(sc);
        let mut rep = admissibility::check_cell_cycles(
            vp,
            &f,
            curve,
            variant,
            true,
            opts.samples,
            DEFAULT_CYCLE_BUDGET,
            opts.seed,
        );
        // arbitrary representatives approach equality along misaligned
        // slice chains, so their worst margin is informational
        let arb = admissibility::check_cell_cycles(
            vp,
            &f,
            curve,
            variant,
            false,
            opts.samples,
            DEFAULT_CYCLE_BUDGET,
            opts.seed,
        );
        rep.notes.push(format!(
            "arbitrary-representative sampling ({}): worst margin {:.3e}; matched representatives decide the verdict",
            if arb.verdict == Verdict::Violated {
                "found near-equality cycles"
            } else {
                "clean"
            },
            arb.margin,
        ));
        conditions.push(rep);
    }

    let violated = conditions.iter().any(|c| c.verdict == Verdict::Violated);
    let first_failure = conditions
        .iter()
        .find(|c| c.verdict == Verdict::Violated)
        .map(|c| format!("condition {} violated", c.condition.label()));
    if violated {
        notes.push(
            "no trace-sense solution certified: transport structure violates a condition".into(),
        );
    }

    let mut outcome = RunOutcome {
        scenario_name: sc.name.clone(),
        conditions,
        violated,
        first_failure,
        refine_n,
        f,
        decomposition,
        e_pairs,
        validated,
        map,
        plan: None,
        raster: None,
        field: None,
        oracle_plan: None,
        map_cost: None,
        boundary_mass: None,
        pushforward: None,
        divergence: Vec::new(),
        u_tv: None,
        rotation: None,
        oracle_cost: None,
        duality_gap: None,
        cyclical_margin: None,
        cross_cell_offdiag: None,
        cross_cell: None,
        interior_fraction: None,
        notes,
    };
    if opts.check_only {
        return Ok(outcome);
    }

    // plan and fields (also on violation, as diagnostics)
    let plan = fields::make_plan(&outcome.map, &outcome.f, opts.atoms)
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    outcome.map_cost = Some(plan.cost);
    outcome.boundary_mass = Some(fields::boundary_mass(&plan, curve));
    outcome.pushforward = Some(outcome.map.pushforward_distance(&outcome.f, 100, opts.seed));
    let raster = fields::rasterize(&plan, curve, opts.grid, opts.grid)
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    let battery = fields::test_battery(curve);
    outcome.divergence = fields::divergence_residual(&raster, curve, &outcome.f, &battery);

    if !outcome.violated {
        let rec = Reconstructor::new(
            &outcome.map,
            &outcome.f,
            curve,
            outcome.validated.as_ref(),
        );
        let field = reconstruct::u_grid(&rec, curve, opts.grid, opts.grid);
        outcome.u_tv = Some(reconstruct::total_variation(&field));
        outcome.rotation = Some(reconstruct::rotation_check(&field, &raster));
        outcome.field = Some(field);
    } else {
        outcome
            .notes
            .push("reconstruction skipped: rays are not certified interior".into());
    }
    outcome.plan = Some(plan);
    outcome.raster = Some(raster);

    if opts.with_oracle {
        let n = opts.atoms.min(800);
        let sources = oracle::atoms_from_measure(&outcome.f, curve, true, n)
            .map_err(|e| PipelineError::Input(e.to_string()))?;
        let targets = oracle::atoms_from_measure(&outcome.f, curve, false, n)
            .map_err(|e| PipelineError::Input(e.to_string()))?;
        let lp = oracle::solve_assignment(sources, targets)?;
        outcome.oracle_cost = Some(lp.cost);
        outcome.duality_gap = Some(oracle::duality_gap(&lp));
        outcome.cyclical_margin = Some(oracle::cyclical_violation(&lp, 4, opts.seed));
        outcome.interior_fraction = Some(oracle::ray_support_audit(&lp, curve).interior_fraction);
        if let Some(vp) = &outcome.validated {
            let m = oracle::cross_cell_mass(&lp, vp, curve)?;
            outcome.cross_cell_offdiag = Some(oracle::off_diagonal_mass(&m));
            outcome.cross_cell = Some(m);
        }
        outcome.oracle_plan = Some(lp);
    }

    Ok(outcome)
}

pub struct ScanOutcome {
    pub frontier: f64,
    /// (parameter, satisfied, margin) per evaluation, in evaluation order.
    pub rows: Vec<(f64, bool, f64)>,
}

/// Bisect a built-in family for the satisfied/violated frontier of one
/// condition. Partition conditions are evaluated through auto-refinement:
/// a parameter passes when some slicing up to `refine_max` clears the check.
pub fn scan_builtin(
    family: &str,
    param: &str,
    lo: f64,
    hi: f64,
    condition: ConditionId,
    base: &std::collections::BTreeMap<String, f64>,
    refine_max: usize,
    seed: u64,
) -> Result<ScanOutcome, PipelineError> {
    let mut rows: Vec<(f64, bool, f64)> = Vec::new();
    let mut eval = |x: f64| -> Result<bool, String> {
        let mut over = base.clone();
        over.insert(param.to_string(), x);
        let sc = Scenario::builtin(family, &over).map_err(|e| e.to_string())?;
        let f = tangential_derivative(&sc.trace);
        let (sat, margin) = match condition {
            ConditionId::H2 | ConditionId::H3 => {
                let d = match decomp::decompose(&f, &sc.curve) {
                    Ok(d) => d,
                    Err(e) => return Err(e.to_string()),
                };
                let map =
                    transport::build(&d, &[], &f, &sc.curve).map_err(|e| e.to_string())?;
                let rep = if condition == ConditionId::H2 {
                    admissibility::check_h2(&map, 8)
                } else {
                    admissibility::check_h3(&map, None, 6, DEFAULT_CYCLE_BUDGET, seed)
                };
                (rep.verdict != Verdict::Violated, rep.margin)
            }
            ConditionId::L2 | ConditionId::A3 | ConditionId::A3Weak | ConditionId::A2 => {
                let p = sc
                    .partition
                    .as_ref()
                    .ok_or_else(|| "scenario has no partition".to_string())?;
                let variant = match condition {
                    ConditionId::L2 => CycleVariant::L2,
                    ConditionId::A3Weak => CycleVariant::A3Weak,
                    _ => CycleVariant::A3,
                };
                let mut margin = f64::NAN;
                let refined = partition::auto_refine_until(
                    p,
                    refine_max,
                    &f,
                    &sc.curve,
                    &mut |q| match partition::validate(q, &f, &sc.curve) {
                        Ok(vp) => {
                            let rep = if condition == ConditionId::A2 {
                                admissibility::check_a2(&vp, &f, &sc.curve, 6)
                            } else {
                                admissibility::check_cell_cycles(
                                    &vp, &f, &sc.curve, variant, true, 2, 2_000_000, seed,
                                )
                            };
                            margin = rep.margin;
                            if rep.verdict == Verdict::Violated {
                                Ok(vec![rep.condition.label().to_string()])
                            } else {
                                Ok(vec![])
                            }
                        }
                        Err(e) => Err(e),
                    },
                );
                (refined.is_ok(), margin)
            }
            other => {
                return Err(format!(
                    "condition {} has no parametric scan",
                    other.label()
                ))
            }
        };
        rows.push((x, sat, margin));
        Ok(sat)
    };
    let frontier = admissibility::threshold_scan(lo, hi, 1e-6, &mut eval)
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(ScanOutcome { frontier, rows })
}

fn cycle_variant(sc: &Scenario) -> CycleVariant {
    let has_e = sc
        .partition
        .as_ref()
        .map(|p| {
            p.cells
                .iter()
                .any(|c| c.kind == partition::CellKind::NonConvexPair)
        })
        .unwrap_or(false);
    if !sc.strict_cycles {
        CycleVariant::A3Weak
    } else if has_e {
        CycleVariant::A3
    } else {
        CycleVariant::L2
    }
}

fn structural_report(
    conditions: &mut Vec<AdmissibilityReport>,
    vp: &ValidatedPartition,
    pass: bool,
) {
    let has_e = !vp.e_pairs.is_empty();
    let id = if has_e {
        ConditionId::A1
    } else {
        ConditionId::L1
    };
    conditions.push(AdmissibilityReport {
        condition: id,
        verdict: if pass {
            Verdict::Satisfied
        } else {
            Verdict::Violated
        },
        margin: f64::NAN,
        witnesses: Vec::new(),
        notes: vp.notes.clone(),
    });
}

fn check_h3_stage(
    map: &TransportMap,
    vp: Option<&ValidatedPartition>,
    opts: &RunOptions,
) -> AdmissibilityReport {
    match vp {
        None => admissibility::check_h3(map, None, opts.samples, DEFAULT_CYCLE_BUDGET, opts.seed),
        Some(vp) => {
            // per-cell cycles only; cross-cell structure is the L/A business
            let cells = vp.partition.cells.len();
            let mut merged: Option<AdmissibilityReport> = None;
            for cell in 0..cells {
                let subset: Vec<usize> = vp
                    .pair_owner
                    .iter()
                    .enumerate()
                    .filter(|(_, &o)| o == cell)
                    .map(|(i, _)| i)
                    .collect();
                if subset.len() < 2 {
                    continue;
                }
                let rep = admissibility::check_h3(
                    map,
                    Some(&subset),
                    opts.samples,
                    DEFAULT_CYCLE_BUDGET,
                    opts.seed,
                );
                merged = Some(match merged.take() {
                    None => rep,
                    Some(mut acc) => {
                        if rep.verdict == Verdict::Violated {
                            acc.verdict = Verdict::Violated;
                        } else if rep.verdict == Verdict::Undecided
                            && acc.verdict == Verdict::Satisfied
                        {
                            acc.verdict = Verdict::Undecided;
                        }
                        if rep.margin < acc.margin {
                            acc.margin = rep.margin;
                        }
                        acc.witnesses.extend(rep.witnesses);
                        acc
                    }
                });
            }
            merged.unwrap_or_else(|| AdmissibilityReport {
                condition: ConditionId::H3,
                verdict: Verdict::Satisfied,
                margin: f64::INFINITY,
                witnesses: Vec::new(),
                notes: vec!["no cell owns more than one pair: vacuous".into()],
            })
        }
    }
}

fn finish_early(
    sc: &Scenario,
    f: SignedBoundaryMeasure,
    conditions: Vec<AdmissibilityReport>,
    mut notes: Vec<String>,
) -> Result<RunOutcome, PipelineError> {
    notes.push("pipeline stopped: no admissible decomposition".into());
    let empty = ArcDecomposition {
        chis: Vec::new(),
        gammas: Vec::new(),
        flats: Vec::new(),
        residual: Vec::new(),
    };
    let map = transport::build(&empty, &[], &f, &sc.curve)?;
    Ok(RunOutcome {
        scenario_name: sc.name.clone(),
        conditions,
        violated: true,
        first_failure: Some("condition H1 violated".into()),
        refine_n: None,
        f,
        decomposition: empty,
        e_pairs: Vec::new(),
        validated: None,
        map,
        plan: None,
        raster: None,
        field: None,
        oracle_plan: None,
        map_cost: None,
        boundary_mass: None,
        pushforward: None,
        divergence: Vec::new(),
        u_tv: None,
        rotation: None,
        oracle_cost: None,
        duality_gap: None,
        cyclical_margin: None,
        cross_cell_offdiag: None,
        cross_cell: None,
        interior_fraction: None,
        notes,
    })
}

fn partition_input(e: PartitionError) -> PipelineError {
    PipelineError::Input(e.to_string())
}

/// Structural partition failures become condition verdicts; geometric ones
/// are input errors.
fn partition_condition(
    e: PartitionError,
    conditions: &mut Vec<AdmissibilityReport>,
) -> PipelineError {
    match e {
        PartitionError::CellStructure { cell, violations } => {
            conditions.push(AdmissibilityReport {
                condition: ConditionId::L1,
                verdict: Verdict::Violated,
                margin: f64::NAN,
                witnesses: Vec::new(),
                notes: violations
                    .into_iter()
                    .map(|v| format!("cell {cell}: {v}"))
                    .collect(),
            });
            PipelineError::Input(format!("cell {cell} fails its structural conditions"))
        }
        other => PipelineError::Input(other.to_string()),
    }
}
