//! Planar least gradient solver via the minimal-flow / optimal transport
//! reformulation: boundary-measure machinery, the TV-matching transport map,
//! admissibility checks, transport plans and field rasters, level-set
//! reconstruction of the solution, and an independent discrete assignment
//! oracle.

pub mod admissibility;
pub mod builtins;
pub mod decomp;
pub mod emit;
pub mod fields;
pub mod geometry;
pub mod oracle;
pub mod partition;
pub mod pipeline;
pub mod reconstruct;
pub mod scenario;
pub mod trace;
pub mod transport;

pub use geometry::{BoundaryArc, BoundaryCurve, BoundaryPiece, PieceKind, Point2};
pub use trace::{SignedBoundaryMeasure, TraceFunction};
