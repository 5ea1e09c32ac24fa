//! Symmetric eigenanalysis and the convergence-rate certificate.
//!
//! The eigensolver is a cyclic two-sided Jacobi rotation scheme: simple,
//! deterministic and robust at the few-hundred-node scale this crate targets.
//! On top of it sit the algebraic connectivity, the spectral norm, and
//! [`analyze`], which evaluates the cluster-structure condition, the singular
//! perturbation parameter and the theoretical decay rate of a cluster graph.

use serde::Serialize;

use crate::error::Error;
use crate::graph::{is_connected, laplacian, ClusterGraph, LaplacianParts};
use crate::matrix::DenseMatrix;
use crate::tol::{
    JACOBI_OFF_REL_TOL, JACOBI_SWEEPS_PER_DIM_SQ, ROW_SUM_TOL, SYMMETRY_TOL, ZERO_EIG_TOL,
};

/// Eigenvalues of a symmetric matrix, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub matrix_dim: usize,
}

impl Spectrum {
    /// Second-smallest eigenvalue; requires dim >= 2.
    pub fn second(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn largest(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Smallest eigenvalue above the zero threshold, or 0.0 if none.
    pub fn smallest_nonzero(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .find(|&v| v > ZERO_EIG_TOL)
            .unwrap_or(0.0)
    }
}

fn off_diagonal_frobenius(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = a.get(i, j);
                acc += v * v;
            }
        }
    }
    acc.sqrt()
}

/// All eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
///
/// Input must be symmetric within `SYMMETRY_TOL` entrywise. Output is
/// ascending and deterministic for a given input.
pub fn eigenvalues_symmetric(m: &DenseMatrix) -> Result<Spectrum, Error> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: format!("eigenvalues_symmetric: {}x{} input", m.rows(), m.cols()),
        });
    }
    let max_delta = m.max_asymmetry();
    if max_delta > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { max_delta });
    }
    let n = m.rows();
    if n == 1 {
        return Ok(Spectrum {
            eigenvalues: vec![m.get(0, 0)],
            matrix_dim: 1,
        });
    }

    let mut a = m.clone();
    let tol = JACOBI_OFF_REL_TOL * m.frobenius_norm();
    let max_sweeps = JACOBI_SWEEPS_PER_DIM_SQ * n * n;

    let mut converged = false;
    for _ in 0..max_sweeps {
        if off_diagonal_frobenius(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k != p && k != q {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        let new_kp = c * akp - s * akq;
                        let new_kq = s * akp + c * akq;
                        a.set(k, p, new_kp);
                        a.set(p, k, new_kp);
                        a.set(k, q, new_kq);
                        a.set(q, k, new_kq);
                    }
                }
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
            }
        }
    }
    if !converged && off_diagonal_frobenius(&a) > tol {
        return Err(Error::NoConvergence { sweeps: max_sweeps });
    }

    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(Spectrum {
        eigenvalues,
        matrix_dim: n,
    })
}

fn ensure_laplacian(l: &DenseMatrix) -> Result<(), Error> {
    if !l.is_square() {
        return Err(Error::NotLaplacian {
            reason: format!("{}x{} is not square", l.rows(), l.cols()),
        });
    }
    let scale = l.max_abs().max(1.0);
    if l.max_asymmetry() > SYMMETRY_TOL * scale {
        return Err(Error::NotLaplacian {
            reason: "not symmetric".into(),
        });
    }
    for i in 0..l.rows() {
        if l.row_sum(i).abs() > ROW_SUM_TOL * scale {
            return Err(Error::NotLaplacian {
                reason: format!("row {i} sums to {}", l.row_sum(i)),
            });
        }
    }
    Ok(())
}

/// Algebraic connectivity: the second-smallest Laplacian eigenvalue. Zero
/// exactly when the graph is disconnected.
pub fn algebraic_connectivity(l: &DenseMatrix) -> Result<f64, Error> {
    ensure_laplacian(l)?;
    if l.rows() < 2 {
        return Err(Error::NotLaplacian {
            reason: "algebraic connectivity needs at least two nodes".into(),
        });
    }
    let spectrum = eigenvalues_symmetric(l)?;
    if spectrum.eigenvalues[0] < -ZERO_EIG_TOL * l.max_abs().max(1.0) {
        return Err(Error::NotLaplacian {
            reason: format!("negative eigenvalue {}", spectrum.eigenvalues[0]),
        });
    }
    Ok(spectrum.second())
}

/// Spectral norm of a symmetric positive semidefinite matrix (its largest
/// eigenvalue).
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64, Error> {
    let spectrum = eigenvalues_symmetric(m)?;
    Ok(spectrum.largest())
}

/// Which reading of sigma_2(L_external) feeds the rate formulas.
///
/// The full-spectrum value is zero whenever some node carries no external
/// edge, the smallest-nonzero value ignores disconnected externals, and the
/// aggregate value is sigma_2 of the r x r matrix U^T L_external U. All three
/// are always computed and reported side by side; `Explicit` injects an
/// externally chosen value for sensitivity and reproduction runs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Sigma2Mode {
    #[default]
    Full,
    SmallestNonzero,
    Aggregate,
    Explicit(f64),
}

impl Sigma2Mode {
    pub fn label(&self) -> String {
        match self {
            Sigma2Mode::Full => "full".to_string(),
            Sigma2Mode::SmallestNonzero => "nonzero".to_string(),
            Sigma2Mode::Aggregate => "aggregate".to_string(),
            Sigma2Mode::Explicit(v) => format!("explicit({v})"),
        }
    }
}

/// Rate certificate for a cluster graph.
///
/// `sigma2_external`, `assumption2_rhs`, `epsilon` and `rate` are evaluated
/// under the selected sigma_2 reading; the three conventional readings are
/// always present for comparison. When the selected sigma_2 vanishes the rate
/// is undefined: `rate_defined` is false, epsilon and rate are reported as 0,
/// the structure-condition right-hand side as infinity (JSON null), and
/// `warning` explains why.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub n_min: usize,
    pub n_max: usize,
    pub sigma2_mode: String,
    pub sigma2_external: f64,
    pub norm_external: f64,
    pub min_sigma2_internal: f64,
    pub sigma2_full: f64,
    pub sigma2_nonzero: f64,
    pub sigma2_aggregate: f64,
    pub assumption2_rhs: f64,
    pub assumption2_holds: bool,
    pub epsilon: f64,
    pub rate: f64,
    pub rate_defined: bool,
    pub warning: Option<String>,
}

impl RateReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Structure-condition right-hand side, epsilon and rate from the scalar
/// spectral quantities. Returns (rhs, epsilon, rate).
pub fn rate_quantities(
    sigma2: f64,
    norm_external: f64,
    n_min: usize,
    n_max: usize,
) -> (f64, f64, f64) {
    let nmin = n_min as f64;
    let nmax = n_max as f64;
    if sigma2 <= ZERO_EIG_TOL || norm_external <= ZERO_EIG_TOL {
        return (f64::INFINITY, 0.0, 0.0);
    }
    let rhs = 2.0 * norm_external * norm_external * nmax * nmax / (sigma2 * nmin * nmin);
    let epsilon = nmin * sigma2 / (2.0 * nmax * nmax * norm_external);
    let rate = nmin * sigma2 / (2.0 * nmax);
    (rhs, epsilon, rate)
}

/// The r x r aggregate external matrix U^T L_external U: entry (a, b) sums
/// the external Laplacian block between clusters a and b.
pub fn aggregate_external(graph: &ClusterGraph, external: &DenseMatrix) -> DenseMatrix {
    let r = graph.n_clusters();
    let offsets = graph.cluster_offsets();
    let mut agg = DenseMatrix::zeros(r, r);
    for a in 0..r {
        for b in 0..r {
            let mut acc = 0.0;
            for i in offsets[a]..offsets[a] + graph.cluster_sizes[a] {
                for j in offsets[b]..offsets[b] + graph.cluster_sizes[b] {
                    acc += external.get(i, j);
                }
            }
            agg.set(a, b, acc);
        }
    }
    agg
}

fn per_cluster_laplacian(size: usize, edges: &[(usize, usize)]) -> Result<DenseMatrix, Error> {
    let mut l = DenseMatrix::zeros(size.max(1), size.max(1));
    for &(i, j) in edges {
        l.set(i, i, l.get(i, i) + 1.0);
        l.set(j, j, l.get(j, j) + 1.0);
        l.set(i, j, -1.0);
        l.set(j, i, -1.0);
    }
    Ok(l)
}

/// Evaluate the rate certificate of a cluster graph under the given sigma_2
/// reading. Requires every cluster to be internally connected.
pub fn analyze(graph: &ClusterGraph, mode: Sigma2Mode) -> Result<RateReport, Error> {
    graph.ensure_valid()?;
    for (a, edges) in graph.internal_edges.iter().enumerate() {
        if !is_connected(graph.cluster_sizes[a], edges) {
            return Err(Error::DisconnectedCluster { cluster: a });
        }
    }
    let parts = laplacian(graph)?;
    analyze_parts(graph, &parts, mode)
}

/// Same as [`analyze`] but reusing precomputed Laplacian parts.
pub fn analyze_parts(
    graph: &ClusterGraph,
    parts: &LaplacianParts,
    mode: Sigma2Mode,
) -> Result<RateReport, Error> {
    let n_min = *graph.cluster_sizes.iter().min().unwrap();
    let n_max = *graph.cluster_sizes.iter().max().unwrap();

    let external_spectrum = eigenvalues_symmetric(&parts.external)?;
    let sigma2_full = if external_spectrum.matrix_dim >= 2 {
        external_spectrum.second().max(0.0)
    } else {
        0.0
    };
    let sigma2_nonzero = external_spectrum.smallest_nonzero();
    let norm_external = external_spectrum.largest().max(0.0);

    let agg = aggregate_external(graph, &parts.external);
    let sigma2_aggregate = if graph.n_clusters() >= 2 {
        eigenvalues_symmetric(&agg)?.second().max(0.0)
    } else {
        0.0
    };

    // Singleton clusters have no internal dynamics and impose no structure
    // constraint; the minimum runs over clusters with at least two nodes.
    let mut min_sigma2_internal = f64::INFINITY;
    for (a, edges) in graph.internal_edges.iter().enumerate() {
        let size = graph.cluster_sizes[a];
        if size < 2 {
            continue;
        }
        let l_a = per_cluster_laplacian(size, edges)?;
        let sigma2_a = eigenvalues_symmetric(&l_a)?.second();
        min_sigma2_internal = min_sigma2_internal.min(sigma2_a);
    }

    let sigma2_external = match mode {
        Sigma2Mode::Full => sigma2_full,
        Sigma2Mode::SmallestNonzero => sigma2_nonzero,
        Sigma2Mode::Aggregate => sigma2_aggregate,
        Sigma2Mode::Explicit(v) => {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidTopology(format!(
                    "explicit sigma2 {v} must be finite and nonnegative"
                )));
            }
            v
        }
    };

    let (assumption2_rhs, epsilon, rate) =
        rate_quantities(sigma2_external, norm_external, n_min, n_max);
    let rate_defined = sigma2_external > ZERO_EIG_TOL && norm_external > ZERO_EIG_TOL;

    let mut notes: Vec<String> = Vec::new();
    if !rate_defined {
        notes.push(format!(
            "rate undefined: sigma2(L_external) = {sigma2_external} under the {} reading with \
             ||L_external|| = {norm_external}; certification skipped",
            mode.label()
        ));
    } else {
        let r = graph.n_clusters();
        let aggregate_pairs: Vec<(usize, usize)> = {
            let mut pairs = Vec::new();
            for a in 0..r {
                for b in (a + 1)..r {
                    if agg.get(a, b) != 0.0 {
                        pairs.push((a, b));
                    }
                }
            }
            pairs
        };
        if r >= 2 && !is_connected(r, &aggregate_pairs) {
            notes.push("external graph is disconnected at the cluster level".to_string());
        }
    }
    if min_sigma2_internal.is_infinite() {
        notes.push(
            "every cluster is a singleton: the centering projector is zero, there are no fast \
             dynamics, and the rate comes from the external graph alone"
                .to_string(),
        );
    }
    let warning = if notes.is_empty() {
        None
    } else {
        Some(notes.join("; "))
    };

    let assumption2_holds = rate_defined && min_sigma2_internal >= assumption2_rhs;

    Ok(RateReport {
        n_min,
        n_max,
        sigma2_mode: mode.label(),
        sigma2_external,
        norm_external,
        min_sigma2_internal,
        sigma2_full,
        sigma2_nonzero,
        sigma2_aggregate,
        assumption2_rhs,
        assumption2_holds,
        epsilon,
        rate,
        rate_defined,
        warning,
    })
}
