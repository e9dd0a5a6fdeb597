//! # semgraph
//!
//! Feature selection by sparse graph learning. The crate fits an undirected
//! weighted graph over all variables of a dataset (inputs and outputs
//! jointly) with an l1-regularized symmetric autoregressive model, traces
//! the regularization path, and picks the sparsity level with an area-based
//! elbow detector that returns an uncertainty interval, not just a point.
//!
//! The pieces compose but also stand alone — the elbow detector works on
//! any sampled non-increasing error curve, whatever produced it.
//!
//! ## Modules
//!
//! * [`matrix`] — observation matrix, symmetric hollow adjacency, spectral
//!   norm, seeded Gaussian sampling.
//! * [`sem`] — the graph fitting solver, its optimality certificate, and
//!   `lambda_max`.
//! * [`lasso`] — plain l1-regularized regression (used by the synthetic
//!   benchmark).
//! * [`elbow`] — error-curve construction and the interval elbow detector.
//! * [`sweep`] — lambda grids, regularization-path sweeps, error curves.
//! * [`synthetic`] — the lasso containment benchmark with known ground
//!   truth.
//! * [`ranking`] — ordered output-connection reports from a fitted graph.
//! * [`io`] — CSV ingestion, JSON/DOT graph export, report writers.
//! * [`cli`] — the `semgraph` binary surface.
//!
//! ## Runnable examples
//!
//! One example per capability, under `examples/`:
//!
//! * `detect_elbow` — interval detection on a hand-built curve.
//! * `learn_graph` — fit a graph on synthetic data with known structure.
//! * `sweep_and_select` — full path sweep plus elbow selection.
//! * `lasso_interval` — one synthetic run: detected vs ground-truth
//!   interval.
//! * `rank_outputs` — output-connection ranking on a learned graph.
//! * `export_graph` — JSON and DOT serialization.

pub mod cli;
pub mod elbow;
mod error;
pub mod io;
pub mod lasso;
pub mod matrix;
pub mod ranking;
pub mod sem;
pub mod sweep;
pub mod synthetic;

pub use error::{Error, Result};
