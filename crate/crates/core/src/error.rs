//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong when building graphs, decomposing Laplacians
/// or integrating the consensus dynamics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cluster graph:\n{report}")]
    InvalidGraph { report: String },

    #[error("edge endpoint {node} out of range for {n_nodes} nodes")]
    EndpointOutOfRange { node: usize, n_nodes: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_delta:e})")]
    NotSymmetric { max_delta: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not a Laplacian: {reason}")]
    NotLaplacian { reason: String },

    #[error("cluster {cluster} is not internally connected")]
    DisconnectedCluster { cluster: usize },

    #[error("cluster {cluster}: no connected sample after {attempts} attempts (edge probability too small?)")]
    GeneratorRetriesExhausted { cluster: usize, attempts: usize },

    #[error("invalid topology spec: {0}")]
    InvalidTopology(String),

    #[error("time step {dt} exceeds the stability bound 1/||L|| = {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("invalid time step or horizon: dt = {dt}, t_end = {t_end}")]
    InvalidTimeGrid { dt: f64, t_end: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("initial {which} norm is zero; half-life undefined")]
    ZeroInitialNorm { which: &'static str },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
