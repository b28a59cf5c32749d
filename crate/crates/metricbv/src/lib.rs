//! Analysis toolkit for finite metric graphs: length measures, ball traces,
//! total variation of piecewise-linear functions, perimeter estimates and
//! related diagnostics.
//!
//! A space is a finite connected graph whose edges carry positive lengths and
//! are parametrized by arc length.  Functions on the space are piecewise
//! linear along edges, with optional isolated point overrides, so jumps and
//! their one-sided limits are represented exactly.  Arithmetic stays in exact
//! rationals whenever every input is rational and falls back to `f64`
//! otherwise; see [`num::Num`].

pub mod bv;
pub mod diagnostics;
pub mod error;
pub mod gallery;
pub mod graph;
pub mod io;
pub mod measure;
pub mod num;
pub mod pl;
pub mod subset;
pub mod variation;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeId, Metric, MetricGraph, PointRef, Vertex, VertexId};
pub use num::Num;
pub use pl::PiecewiseLinear;
pub use subset::EdgeSubset;
pub use variation::{ArcSystem, Mode, SolveOpts};
