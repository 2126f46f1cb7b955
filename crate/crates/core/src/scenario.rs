//! Scenario ingestion: structured text files describing the boundary, the
//! trace, an optional partition, and solver parameters; plus the built-in
//! scenario family with parameter overrides.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builtins::{self, BuiltinError};
use crate::decomp::PairSide;
use crate::geometry::{BoundaryArc, BoundaryCurve, BoundaryPiece, GeometryError, Point2};
use crate::partition::{
    Cell, CellKind, CellPairArcs, LoopElement, Partition, PartitionError, Provenance,
};
use crate::trace::{TraceError, TraceFunction};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario field {0}: {1}")]
    Invalid(&'static str, String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub boundary: BoundarySpec,
    pub trace: TraceSpec,
    #[serde(default)]
    pub partition: Option<PartitionSpec>,
    #[serde(default)]
    pub params: ParamSpec,
    /// Whether cross-cell cycle inequalities are required strictly.
    #[serde(default)]
    pub strict_cycles: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub pieces: Vec<PieceSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PieceSpec {
    Line {
        from: [f64; 2],
        to: [f64; 2],
    },
    Arc {
        from: [f64; 2],
        to: [f64; 2],
        center: [f64; 2],
        sweep: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceSpec {
    /// Explicit (arclength, value) breakpoints.
    Breakpoints { breakpoints: Vec<[f64; 2]> },
    /// One closed form per boundary piece, in order.
    PerPiece { per_piece: Vec<PieceTraceSpec> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum PieceTraceSpec {
    Linear { from: f64, to: f64 },
    Constant { value: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub cells: Vec<CellSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    /// "C", "E" or "X".
    pub kind: String,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(rename = "loop")]
    pub loop_elements: Vec<LoopElementSpec>,
    #[serde(default)]
    pub plus: Option<SideSpec>,
    #[serde(default)]
    pub minus: Option<SideSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopElementSpec {
    /// Follow the domain boundary: [start arclength, length].
    #[serde(default)]
    pub boundary: Option<[f64; 2]>,
    /// Straight interior edge: [[x0,y0],[x1,y1]].
    #[serde(default)]
    pub line: Option<[[f64; 2]; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideSpec {
    pub arc: [f64; 2],
    pub anchor_at_start: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSpec {
    pub atoms: usize,
    pub grid: usize,
    pub seed: u64,
    pub samples: usize,
    pub rays_per_pair: usize,
    pub refine_max: usize,
}

impl Default for ParamSpec {
    fn default() -> Self {
        ParamSpec {
            atoms: 800,
            grid: 256,
            seed: 42,
            samples: 6,
            rays_per_pair: 8,
            refine_max: 256,
        }
    }
}

/// A fully resolved scenario, ready for the pipeline.
pub struct Scenario {
    pub name: String,
    pub curve: BoundaryCurve,
    pub trace: TraceFunction,
    pub partition: Option<Partition>,
    pub strict_cycles: bool,
    pub params: ParamSpec,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Scenario::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
        let pieces: Vec<BoundaryPiece> = file
            .boundary
            .pieces
            .iter()
            .map(|p| match *p {
                PieceSpec::Line { from, to } => {
                    BoundaryPiece::line(Point2::new(from[0], from[1]), Point2::new(to[0], to[1]))
                }
                PieceSpec::Arc {
                    from,
                    to,
                    center,
                    sweep,
                } => BoundaryPiece::arc(
                    Point2::new(from[0], from[1]),
                    Point2::new(to[0], to[1]),
                    Point2::new(center[0], center[1]),
                    sweep,
                ),
            })
            .collect();
        let curve = BoundaryCurve::new(pieces)?;
        let trace = match &file.trace {
            TraceSpec::Breakpoints { breakpoints } => TraceFunction::from_breakpoints(
                breakpoints.iter().map(|b| (b[0], b[1])).collect(),
                curve.total_len(),
            )?,
            TraceSpec::PerPiece { per_piece } => {
                if per_piece.len() != curve.pieces().len() {
                    return Err(ScenarioError::Invalid(
                        "trace.per_piece",
                        format!(
                            "{} entries for {} boundary pieces",
                            per_piece.len(),
                            curve.pieces().len()
                        ),
                    ));
                }
                let mut bk = Vec::new();
                let mut s = 0.0;
                let n = per_piece.len();
                for (i, (spec, piece)) in per_piece.iter().zip(curve.pieces()).enumerate() {
                    let (start_v, end_v) = match *spec {
                        PieceTraceSpec::Linear { from, to } => (from, to),
                        PieceTraceSpec::Constant { value } => (value, value),
                    };
                    let next_start = match per_piece[(i + 1) % n] {
                        PieceTraceSpec::Linear { from, .. } => from,
                        PieceTraceSpec::Constant { value } => value,
                    };
                    if (end_v - next_start).abs() > 1e-9 {
                        return Err(ScenarioError::Invalid(
                            "trace.per_piece",
                            format!(
                                "piece {i} ends at {end_v} but piece {} starts at {next_start}",
                                (i + 1) % n
                            ),
                        ));
                    }
                    bk.push((s, start_v));
                    s += piece.len();
                }
                TraceFunction::from_breakpoints(bk, curve.total_len())?
            }
        };
        let partition = match &file.partition {
            None => None,
            Some(spec) => Some(build_partition(spec, &curve, &trace)?),
        };
        Ok(Scenario {
            name: file.name,
            curve,
            trace,
            partition,
            strict_cycles: file.strict_cycles.unwrap_or(true),
            params: file.params,
        })
    }

    /// Built-in scenarios by name, with numeric parameter overrides.
    pub fn builtin(
        name: &str,
        over: &BTreeMap<String, f64>,
    ) -> Result<Scenario, ScenarioError> {
        let get = |key: &str, default: f64| over.get(key).copied().unwrap_or(default);
        let data = match name {
            "delta_square" => builtins::delta_square(get("delta", 0.25))?,
            "disk_cosine" => builtins::disk_cosine()?,
            "rect_cshape" => builtins::rect_cshape(get("a", 0.25), get("b", 0.5))?,
            "circ_cshape" => builtins::circ_cshape(get("R", 2.0), get("alpha", 1.0))?,
            "nonuniq_squares" => builtins::nonuniq_squares(get("a", 1.0), get("b", 2.0))?,
            "edge_counterexample" => builtins::edge_counterexample()?,
            "cantor_square" => builtins::cantor_square()?,
            other => return Err(BuiltinError::Unknown(other.into()).into()),
        };
        let mut params = ParamSpec::default();
        if let Some(&n) = over.get("atoms") {
            params.atoms = n as usize;
        }
        if let Some(&n) = over.get("grid") {
            params.grid = n as usize;
        }
        if let Some(&n) = over.get("seed") {
            params.seed = n as u64;
        }
        Ok(Scenario {
            name: name.into(),
            curve: data.curve,
            trace: data.trace,
            partition: data.partition,
            strict_cycles: data.strict_cycles,
            params,
        })
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &[
            "delta_square",
            "disk_cosine",
            "rect_cshape",
            "circ_cshape",
            "nonuniq_squares",
            "edge_counterexample",
            "cantor_square",
        ]
    }
}

fn build_partition(
    spec: &PartitionSpec,
    curve: &BoundaryCurve,
    trace: &TraceFunction,
) -> Result<Partition, ScenarioError> {
    let f = crate::trace::tangential_derivative(trace);
    let mut cells = Vec::new();
    for (i, cs) in spec.cells.iter().enumerate() {
        let kind = CellKind::from_tag(&cs.kind).ok_or_else(|| {
            ScenarioError::Invalid("partition.cells.kind", format!("cell {i}: {}", cs.kind))
        })?;
        let mut elements = Vec::new();
        for el in &cs.loop_elements {
            match (el.boundary, el.line) {
                (Some([s0, len]), None) => {
                    elements.push(LoopElement::Boundary(BoundaryArc::new(s0, len)))
                }
                (None, Some([a, b])) => elements.push(LoopElement::Line(
                    Point2::new(a[0], a[1]),
                    Point2::new(b[0], b[1]),
                )),
                _ => {
                    return Err(ScenarioError::Invalid(
                        "partition.cells.loop",
                        format!("cell {i}: element must be exactly one of boundary/line"),
                    ))
                }
            }
        }
        let pair = match (&cs.plus, &cs.minus) {
            (Some(p), Some(m)) => {
                let plus_arc = BoundaryArc::new(p.arc[0], p.arc[1]);
                Some(CellPairArcs {
                    plus: PairSide::new(plus_arc, p.anchor_at_start),
                    minus: PairSide::new(BoundaryArc::new(m.arc[0], m.arc[1]), m.anchor_at_start),
                    tv: f.tv_of_arc(&plus_arc),
                })
            }
            (None, None) => None,
            _ => {
                return Err(ScenarioError::Invalid(
                    "partition.cells",
                    format!("cell {i}: plus and minus sides come together"),
                ))
            }
        };
        cells.push(Cell::new(kind, &elements, curve, cs.family.clone(), pair)?);
    }
    Ok(Partition {
        cells,
        provenance: Provenance::Supplied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_square_scenario() {
        let text = r#"
name = "square"

[boundary]
pieces = [
  { kind = "line", from = [0.0, 0.0], to = [1.0, 0.0] },
  { kind = "line", from = [1.0, 0.0], to = [1.0, 1.0] },
  { kind = "line", from = [1.0, 1.0], to = [0.0, 1.0] },
  { kind = "line", from = [0.0, 1.0], to = [0.0, 0.0] },
]

[trace]
breakpoints = [[0.0, 0.0], [0.25, 0.25], [0.75, 0.25], [1.0, 0.0], [1.25, 0.25], [1.75, 0.25], [2.0, 0.0], [2.25, 0.25], [2.75, 0.25], [3.0, 0.0], [3.25, 0.25], [3.75, 0.25]]

[params]
atoms = 100
"#;
        let sc = Scenario::from_toml_str(text).unwrap();
        assert_eq!(sc.name, "square");
        assert_eq!(sc.params.atoms, 100);
        assert_eq!(sc.params.grid, 256);
        assert!((sc.trace.eval(0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn parse_per_piece_trace() {
        let text = r#"
name = "tent"
[boundary]
pieces = [
  { kind = "line", from = [0.0, 0.0], to = [1.0, 0.0] },
  { kind = "line", from = [1.0, 0.0], to = [1.0, 1.0] },
  { kind = "line", from = [1.0, 1.0], to = [0.0, 1.0] },
  { kind = "line", from = [0.0, 1.0], to = [0.0, 0.0] },
]
[trace]
per_piece = [
  { form = "linear", from = 0.0, to = 1.0 },
  { form = "linear", from = 1.0, to = 0.0 },
  { form = "constant", value = 0.0 },
  { form = "constant", value = 0.0 },
]
"#;
        let sc = Scenario::from_toml_str(text).unwrap();
        assert!((sc.trace.eval(0.5) - 0.5).abs() < 1e-12);
        assert!((sc.trace.eval(1.5) - 0.5).abs() < 1e-12);
        assert_eq!(sc.trace.eval(2.5), 0.0);
    }

    #[test]
    fn builtin_dispatch() {
        let mut over = BTreeMap::new();
        over.insert("delta".to_string(), 0.3);
        let sc = Scenario::builtin("delta_square", &over).unwrap();
        assert!((sc.trace.eval(0.3) - 0.3).abs() < 1e-12);
        assert!(Scenario::builtin("cantor_square", &BTreeMap::new()).is_err());
        assert!(Scenario::builtin("nope", &BTreeMap::new()).is_err());
    }

    #[test]
    fn bad_scenario_rejected() {
        assert!(Scenario::from_toml_str("name = 3").is_err());
    }
}
