//! Recovery of smooth vector-valued signals on graphs from partial linear
//! measurements.
//!
//! Every node `t` of an undirected graph carries an unknown vector
//! `x_t ∈ ℝⁿ` and contributes measurements `y_t = C_t x_t + η_t`. The
//! estimator solves
//!
//! ```text
//! (μ (L ⊗ Iₙ) + CᵀC) x̂ = Cᵀy
//! ```
//!
//! matrix-free by conjugate gradient, where `L` is the graph Laplacian. When
//! every `C_t` is the incidence matrix of a measurement graph on `n` items
//! (multi-layer translation synchronization) the signal is only identified up
//! to a per-node shift and the centered variant is used instead.
//!
//! Besides the solvers the crate provides closed-form spectral lower bounds
//! on the smallest eigenvalue of the system matrix, the resulting error
//! bounds and penalty selection rules, and a deterministic Monte-Carlo harness.

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use graph::{Graph, GraphKind, LaplacianSpectrum, StackedSignal};
pub use measurement::{GramSummary, MeasurementSet};
pub use rng::SeededStream;
