//! Clustered consensus networks.
//!
//! This crate builds clustered undirected graphs, assembles their
//! internal/external Laplacian split, simulates the averaging dynamics
//! dx/dt = -(L_internal + L_external) x, decomposes trajectories into slow,
//! fast and inter-area variables, and certifies an exponential decay rate for
//! the aggregate Lyapunov value from a handful of spectral quantities.
//!
//! Modules:
//! - [`graph`]: cluster graphs, incidence matrices, Laplacians, topology
//!   generation, graph text files.
//! - [`spectral`]: symmetric eigensolver, algebraic connectivity, the rate
//!   certificate ([`spectral::analyze`]).
//! - [`dynamics`]: transforms, fixed-step integration, Lyapunov traces,
//!   envelope verification, trajectory CSV.
//!
//! All types are immutable after construction and safe to share across
//! threads; generation, integration and initial conditions are fully
//! deterministic for fixed seeds.

pub mod dynamics;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod spectral;
pub mod tol;

pub use dynamics::{
    decomposition, fast_variable, integrate, integrate_parts, inter_area_variable,
    parse_trajectory_csv, random_initial_state, rhs_fast, rhs_full, rhs_inter_area, rhs_slow,
    slow_variable, timescale_metrics, verify_envelope, write_trajectory_csv, CsvTrajectory,
    Decomposition, EnvelopeVerdict, TimescaleMetrics, Trajectory,
};
pub use error::Error;
pub use graph::{
    generate, incidence_matrix, is_connected, laplacian, laplacian_direct, parse_graph_string,
    read_graph_file, weighted_laplacian, write_graph_file, write_graph_string, ClusterGraph,
    ExternalPattern, InternalModel, LaplacianParts, OrientedEdge, TopologySpec,
};
pub use matrix::DenseMatrix;
pub use spectral::{
    algebraic_connectivity, analyze, analyze_parts, eigenvalues_symmetric, rate_quantities,
    spectral_norm, RateReport, Sigma2Mode, Spectrum,
};
