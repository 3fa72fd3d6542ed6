//! Measurement toolkit for the search spaces of iterated agents.
//!
//! An agent is modelled as a fuzzy relation kernel over an interned node
//! universe, optionally constrained by a crisp safety envelope.  Kernels are
//! built from transition logs, recorded transcripts, or synthetic grid
//! policies; on the induced directed graph the crate computes coverage
//! generating functions, critical parameters and coverage indices,
//! shortest-path geometry, strongly connected condensations with
//! closed-walk statistics, and epoch expansions, with brute-force oracles
//! for verification.
//!
//! The numeric core is generic over the scalar type via [`Scalar`]; the
//! `*64` aliases below fix `f64`, which is also the precision of the JSON
//! file schema.

pub mod coverage;
pub mod error;
pub mod export;
pub mod geometry;
pub mod grid;
pub mod ingest;
pub mod io;
pub mod oracle;
pub mod relation;
pub mod scalar;

pub use error::{Error, Result};
pub use relation::{CrispEnvelope, FuzzyKernel, NodeId, NodeTable};
pub use scalar::Scalar;

/// Double-precision kernel, the default concrete instantiation.
pub type FuzzyKernel64 = relation::FuzzyKernel<f64>;
/// Double-precision series evaluation.
pub type SeriesEval64 = coverage::SeriesEval<f64>;
/// Double-precision coverage report.
pub type CoverageReport64 = coverage::CoverageReport<f64>;
/// Double-precision waypoint ranking.
pub type WaypointRanking64 = coverage::WaypointRanking<f64>;
/// Double-precision spectral bracket.
pub type SpectralBounds64 = geometry::SpectralBounds<f64>;
