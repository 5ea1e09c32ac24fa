//! Numerical tolerances used across the crate.
//!
//! Kept in one place so every threshold has a stated origin instead of being
//! an ad-hoc magic number at the call site.

/// Entrywise symmetry requirement for the eigensolver input. Matrices built
/// by the symmetric constructors in this crate are exactly symmetric; this
/// absolute slack only matters for externally supplied data.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Jacobi sweep termination: off-diagonal Frobenius norm relative to the
/// Frobenius norm of the input.
pub const JACOBI_OFF_REL_TOL: f64 = 1e-12;

/// Eigensolver sweep cap per matrix dimension squared. Cyclic Jacobi on a
/// symmetric matrix converges in a handful of sweeps; hitting this cap means
/// the input was not symmetric or not finite.
pub const JACOBI_SWEEPS_PER_DIM_SQ: usize = 100;

/// Threshold below which a Laplacian eigenvalue counts as zero.
pub const ZERO_EIG_TOL: f64 = 1e-9;

/// Zero-row-sum check for Laplacian inputs.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Idempotence slack for the centering projectors (W^2 = W, W_r^2 = W_r).
pub const PROJECTOR_TOL: f64 = 1e-12;

/// Slack for the state reconstruction identity x = U y + e_x.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Multiplicative slack on the exponential decay envelope, absorbing
/// integration error without masking real violations.
pub const ENVELOPE_SLACK: f64 = 1e-6;

/// Relative slack for the pointwise non-increase check on V.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Additive slack for the differential Lyapunov inequalities.
pub const LYAPUNOV_INEQ_SLACK: f64 = 1e-8;

/// Allowed drift of the state mean along a trajectory.
pub const MEAN_DRIFT_TOL: f64 = 1e-9;

/// Retry bound when resampling random internal cluster graphs for
/// connectivity. Deterministic failure instead of unbounded looping.
pub const GENERATOR_RETRY_BOUND: usize = 1000;
