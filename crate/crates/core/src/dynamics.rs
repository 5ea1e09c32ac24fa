//! Consensus dynamics: aggregation/centering transforms, fixed-step
//! integration, slow/fast/inter-area traces, Lyapunov values and the decay
//! envelope check.
//!
//! State vectors live on the full node set. Per cluster, the slow variable is
//! the cluster mean; the fast variable is the deviation of each node from its
//! cluster mean; the inter-area variable is the deviation of the cluster
//! means from the global mean. The aggregate Lyapunov value couples the fast
//! energy into the inter-area energy through the singular perturbation
//! parameter epsilon.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::graph::{laplacian, ClusterGraph, LaplacianParts};
use crate::matrix::{dot, mean, norm, DenseMatrix};
use crate::spectral::eigenvalues_symmetric;
use crate::tol::{ENVELOPE_SLACK, MONOTONE_SLACK, ZERO_EIG_TOL};

/// Aggregation and centering transforms for a cluster partition.
///
/// `membership` is the N x r 0/1 cluster indicator, `size_diag` the r x r
/// diagonal of cluster sizes (equal to membership^T membership), and the two
/// centering matrices are the projectors that remove per-cluster means from
/// node states and the global mean from cluster means.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub membership: DenseMatrix,
    pub size_diag: DenseMatrix,
    pub node_centering: DenseMatrix,
    pub mean_centering: DenseMatrix,
    cluster_sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl Decomposition {
    pub fn n_nodes(&self) -> usize {
        self.membership.rows()
    }

    pub fn n_clusters(&self) -> usize {
        self.membership.cols()
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    /// Per-cluster means of a node vector (P^-1 U^T x).
    pub fn cluster_means(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cluster_sizes.len());
        for (a, &size) in self.cluster_sizes.iter().enumerate() {
            let start = self.offsets[a];
            let sum: f64 = x[start..start + size].iter().sum();
            out.push(sum / size as f64);
        }
        out
    }

    /// Broadcast a cluster vector back to nodes (U y).
    pub fn broadcast(&self, y: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_nodes());
        for (&value, &size) in y.iter().zip(self.cluster_sizes.iter()) {
            out.extend(std::iter::repeat_n(value, size));
        }
        out
    }
}

/// Build the transforms for a cluster graph.
pub fn decomposition(graph: &ClusterGraph) -> Result<Decomposition, Error> {
    graph.ensure_valid()?;
    let n = graph.n_nodes();
    let r = graph.n_clusters();
    let offsets = graph.cluster_offsets();

    let mut membership = DenseMatrix::zeros(n, r);
    let mut size_diag = DenseMatrix::zeros(r, r);
    let mut node_centering = DenseMatrix::zeros(n, n);
    for (a, &size) in graph.cluster_sizes.iter().enumerate() {
        size_diag.set(a, a, size as f64);
        let start = offsets[a];
        let inv = 1.0 / size as f64;
        for i in start..start + size {
            membership.set(i, a, 1.0);
            for j in start..start + size {
                let v = if i == j { 1.0 - inv } else { -inv };
                node_centering.set(i, j, v);
            }
        }
    }

    let mut mean_centering = DenseMatrix::zeros(r, r);
    let inv_r = 1.0 / r as f64;
    for a in 0..r {
        for b in 0..r {
            let v = if a == b { 1.0 - inv_r } else { -inv_r };
            mean_centering.set(a, b, v);
        }
    }

    Ok(Decomposition {
        membership,
        size_diag,
        node_centering,
        mean_centering,
        cluster_sizes: graph.cluster_sizes.clone(),
        offsets,
    })
}

fn check_node_dim(d: &Decomposition, x: &[f64], what: &str) -> Result<(), Error> {
    if x.len() != d.n_nodes() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "{what}: vector length {} for {} nodes",
                x.len(),
                d.n_nodes()
            ),
        });
    }
    Ok(())
}

fn check_cluster_dim(d: &Decomposition, y: &[f64], what: &str) -> Result<(), Error> {
    if y.len() != d.n_clusters() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "{what}: vector length {} for {} clusters",
                y.len(),
                d.n_clusters()
            ),
        });
    }
    Ok(())
}

/// Slow variable: the vector of per-cluster means of x.
pub fn slow_variable(x: &[f64], d: &Decomposition) -> Result<Vec<f64>, Error> {
    check_node_dim(d, x, "slow_variable")?;
    Ok(d.cluster_means(x))
}

/// Fast variable: deviation of each node from its cluster mean (W x).
/// Cluster-wise zero mean by construction.
pub fn fast_variable(x: &[f64], d: &Decomposition) -> Result<Vec<f64>, Error> {
    check_node_dim(d, x, "fast_variable")?;
    let y = d.cluster_means(x);
    let uy = d.broadcast(&y);
    Ok(x.iter().zip(uy.iter()).map(|(a, b)| a - b).collect())
}

/// Inter-area variable: deviation of the cluster means from their average.
pub fn inter_area_variable(y: &[f64]) -> Vec<f64> {
    let m = mean(y);
    y.iter().map(|v| v - m).collect()
}

/// Right-hand side of the full consensus dynamics: -(L_internal + L_external) x.
pub fn rhs_full(
    x: &[f64],
    internal: &DenseMatrix,
    external: &DenseMatrix,
) -> Result<Vec<f64>, Error> {
    let li_x = internal.matvec(x)?;
    let le_x = external.matvec(x)?;
    Ok(li_x
        .iter()
        .zip(le_x.iter())
        .map(|(a, b)| -(a + b))
        .collect())
}

/// Fast-variable dynamics:
/// de_x/dt = -W L_internal e_x - W L_external e_x - W L_external U y.
pub fn rhs_fast(
    e_x: &[f64],
    y: &[f64],
    d: &Decomposition,
    internal: &DenseMatrix,
    external: &DenseMatrix,
) -> Result<Vec<f64>, Error> {
    check_node_dim(d, e_x, "rhs_fast")?;
    check_cluster_dim(d, y, "rhs_fast")?;
    let li_ex = internal.matvec(e_x)?;
    let le_ex = external.matvec(e_x)?;
    let le_uy = external.matvec(&d.broadcast(y))?;
    let combined: Vec<f64> = (0..e_x.len())
        .map(|i| li_ex[i] + le_ex[i] + le_uy[i])
        .collect();
    let centered = d.node_centering.matvec(&combined)?;
    Ok(centered.into_iter().map(|v| -v).collect())
}

/// Slow-variable dynamics:
/// dy/dt = -P^-1 U^T L_external U y - P^-1 U^T L_external e_x.
pub fn rhs_slow(
    e_x: &[f64],
    y: &[f64],
    d: &Decomposition,
    external: &DenseMatrix,
) -> Result<Vec<f64>, Error> {
    check_node_dim(d, e_x, "rhs_slow")?;
    check_cluster_dim(d, y, "rhs_slow")?;
    let le_uy = external.matvec(&d.broadcast(y))?;
    let le_ex = external.matvec(e_x)?;
    let combined: Vec<f64> = (0..e_x.len()).map(|i| le_uy[i] + le_ex[i]).collect();
    // P^-1 U^T v is exactly the vector of per-cluster means of v.
    Ok(d.cluster_means(&combined).into_iter().map(|v| -v).collect())
}

/// Inter-area dynamics:
/// de_y/dt = -W_r P^-1 U^T L_external U e_y - W_r P^-1 U^T L_external e_x.
pub fn rhs_inter_area(
    e_y: &[f64],
    e_x: &[f64],
    d: &Decomposition,
    external: &DenseMatrix,
) -> Result<Vec<f64>, Error> {
    check_cluster_dim(d, e_y, "rhs_inter_area")?;
    check_node_dim(d, e_x, "rhs_inter_area")?;
    let le_uey = external.matvec(&d.broadcast(e_y))?;
    let le_ex = external.matvec(e_x)?;
    let combined: Vec<f64> = (0..e_x.len()).map(|i| le_uey[i] + le_ex[i]).collect();
    let means = d.cluster_means(&combined);
    let centered = d.mean_centering.matvec(&means)?;
    Ok(centered.into_iter().map(|v| -v).collect())
}

/// Uniformly sampled trajectory of the full state with derived traces.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Cluster means y at each sample.
    pub cluster_means: Vec<Vec<f64>>,
    /// Fast deviations e_x at each sample.
    pub fast: Vec<Vec<f64>>,
    /// Inter-area deviations e_y at each sample.
    pub inter_area: Vec<Vec<f64>>,
    pub v_inter: Vec<f64>,
    pub v_fast: Vec<f64>,
    pub v: Vec<f64>,
    pub epsilon: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn rk4_step(x: &[f64], dt: f64, l_full: &DenseMatrix) -> Result<Vec<f64>, Error> {
    let f = |v: &[f64]| -> Result<Vec<f64>, Error> {
        Ok(l_full.matvec(v)?.into_iter().map(|w| -w).collect())
    };
    let n = x.len();
    let k1 = f(x)?;
    let mut stage = vec![0.0; n];
    for i in 0..n {
        stage[i] = x[i] + 0.5 * dt * k1[i];
    }
    let k2 = f(&stage)?;
    for i in 0..n {
        stage[i] = x[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(&stage)?;
    for i in 0..n {
        stage[i] = x[i] + dt * k3[i];
    }
    let k4 = f(&stage)?;
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrate dx/dt = -L x with classical fixed-step fourth-order stepping.
///
/// The step must satisfy dt <= 1/||L||, which keeps every Laplacian mode well
/// inside the real-axis stability interval of the scheme. Derived traces and
/// Lyapunov values are computed at every sample with the given epsilon.
pub fn integrate(
    graph: &ClusterGraph,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    epsilon: f64,
) -> Result<Trajectory, Error> {
    let parts = laplacian(graph)?;
    let d = decomposition(graph)?;
    integrate_parts(&parts, &d, x0, t_end, dt, epsilon)
}

/// Same as [`integrate`] with precomputed Laplacian parts and transforms.
pub fn integrate_parts(
    parts: &LaplacianParts,
    d: &Decomposition,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    epsilon: f64,
) -> Result<Trajectory, Error> {
    check_node_dim(d, x0, "integrate")?;
    if !dt.is_finite() || !t_end.is_finite() || dt <= 0.0 || t_end < dt {
        return Err(Error::InvalidTimeGrid { dt, t_end });
    }
    let l_norm = eigenvalues_symmetric(&parts.full)?.largest().max(0.0);
    if l_norm > 0.0 {
        let bound = 1.0 / l_norm;
        if dt > bound {
            return Err(Error::StepTooLarge { dt, bound });
        }
    }

    let n_steps = (t_end / dt + 1e-9).floor() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        cluster_means: Vec::with_capacity(n_steps + 1),
        fast: Vec::with_capacity(n_steps + 1),
        inter_area: Vec::with_capacity(n_steps + 1),
        v_inter: Vec::with_capacity(n_steps + 1),
        v_fast: Vec::with_capacity(n_steps + 1),
        v: Vec::with_capacity(n_steps + 1),
        epsilon,
    };

    let mut x = x0.to_vec();
    for k in 0..=n_steps {
        let t = k as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }
        let y = d.cluster_means(&x);
        let uy = d.broadcast(&y);
        let e_x: Vec<f64> = x.iter().zip(uy.iter()).map(|(a, b)| a - b).collect();
        let e_y = inter_area_variable(&y);
        let v_ey = 0.5 * dot(&e_y, &e_y);
        let v_ex = 0.5 * dot(&e_x, &e_x);
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.cluster_means.push(y);
        traj.fast.push(e_x);
        traj.inter_area.push(e_y);
        traj.v_inter.push(v_ey);
        traj.v_fast.push(v_ex);
        traj.v.push(v_ey + epsilon * v_ex);

        if k < n_steps {
            x = rk4_step(&x, dt, &parts.full)?;
        }
    }
    Ok(traj)
}

/// Seeded uniform initial condition in [0, 10) per node.
pub fn random_initial_state(n_nodes: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_nodes).map(|_| rng.gen_range(0.0..10.0)).collect()
}

/// Outcome of checking V(t) <= exp(-rate t) V(0) along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeVerdict {
    pub holds: bool,
    /// max over samples of V(t) / (exp(-rate t) V(0)); 0 for an identically
    /// zero trace, infinite if V(0) = 0 but V later is not.
    pub worst_ratio: f64,
    pub first_violation_time: Option<f64>,
    /// Whether V never increases from one sample to the next (within a
    /// relative slack absorbing integration noise).
    pub non_increasing: bool,
}

/// Check the exponential decay envelope and pointwise monotonicity of V.
pub fn verify_envelope(traj: &Trajectory, rate: f64) -> EnvelopeVerdict {
    let v0 = traj.v[0];
    let mut worst_ratio: f64 = 0.0;
    let mut first_violation_time = None;
    for (k, (&t, &v)) in traj.times.iter().zip(traj.v.iter()).enumerate() {
        let bound = (-rate * t).exp() * v0;
        let ratio = if v == 0.0 {
            0.0
        } else if bound > 0.0 {
            v / bound
        } else {
            f64::INFINITY
        };
        worst_ratio = worst_ratio.max(ratio);
        if ratio > 1.0 + ENVELOPE_SLACK && first_violation_time.is_none() {
            first_violation_time = Some(traj.times[k]);
        }
    }
    let mut non_increasing = true;
    for k in 1..traj.v.len() {
        if traj.v[k] > traj.v[k - 1] * (1.0 + MONOTONE_SLACK) {
            non_increasing = false;
            break;
        }
    }
    EnvelopeVerdict {
        holds: worst_ratio <= 1.0 + ENVELOPE_SLACK,
        worst_ratio,
        first_violation_time,
        non_increasing,
    }
}

/// First times at which the fast and inter-area norms fall to half their
/// initial values; `None` when the trace never halves within the horizon.
#[derive(Debug, Clone, Serialize)]
pub struct TimescaleMetrics {
    pub t_half_fast: Option<f64>,
    pub t_half_slow: Option<f64>,
}

/// Grid-resolution half-life of the fast and inter-area norms. The fast norm
/// halving strictly before the inter-area norm is the empirical signature of
/// two-time-scale behaviour.
pub fn timescale_metrics(traj: &Trajectory) -> Result<TimescaleMetrics, Error> {
    let fast0 = norm(&traj.fast[0]);
    let slow0 = norm(&traj.inter_area[0]);
    if fast0 <= ZERO_EIG_TOL {
        return Err(Error::ZeroInitialNorm { which: "fast" });
    }
    if slow0 <= ZERO_EIG_TOL {
        return Err(Error::ZeroInitialNorm {
            which: "inter-area",
        });
    }
    let half_crossing = |series: &[Vec<f64>], initial: f64| -> Option<f64> {
        for (k, v) in series.iter().enumerate() {
            if norm(v) <= 0.5 * initial {
                return Some(traj.times[k]);
            }
        }
        None
    };
    Ok(TimescaleMetrics {
        t_half_fast: half_crossing(&traj.fast, fast0),
        t_half_slow: half_crossing(&traj.inter_area, slow0),
    })
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a trajectory as CSV with 17 significant digits per value. The
/// `envelope` column is exp(-rate t) V(0).
pub fn write_trajectory_csv(traj: &Trajectory, rate: f64) -> String {
    let n = traj.states[0].len();
    let r = traj.cluster_means[0].len();
    let mut header: Vec<String> = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend((0..r).map(|a| format!("y_{a}")));
    header.extend(
        ["ex_norm", "ey_norm", "V", "envelope"]
            .iter()
            .map(|s| s.to_string()),
    );

    let v0 = traj.v[0];
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..traj.len() {
        let mut row: Vec<String> = Vec::with_capacity(n + r + 5);
        row.push(fmt17(traj.times[k]));
        row.extend(traj.states[k].iter().map(|&v| fmt17(v)));
        row.extend(traj.cluster_means[k].iter().map(|&v| fmt17(v)));
        row.push(fmt17(norm(&traj.fast[k])));
        row.push(fmt17(norm(&traj.inter_area[k])));
        row.push(fmt17(traj.v[k]));
        row.push(fmt17((-rate * traj.times[k]).exp() * v0));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parsed trajectory CSV (the raw columns, no recomputation).
#[derive(Debug, Clone)]
pub struct CsvTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub cluster_means: Vec<Vec<f64>>,
    pub ex_norm: Vec<f64>,
    pub ey_norm: Vec<f64>,
    pub v: Vec<f64>,
    pub envelope: Vec<f64>,
}

/// Parse CSV in the layout produced by [`write_trajectory_csv`].
pub fn parse_trajectory_csv(text: &str) -> Result<CsvTrajectory, Error> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty CSV".into(),
    })?;
    let columns: Vec<&str> = header.split(',').collect();
    let n = columns.iter().filter(|c| c.starts_with("x_")).count();
    let r = columns.iter().filter(|c| c.starts_with("y_")).count();
    let expected_cols = 1 + n + r + 4;
    if n == 0 || r == 0 || columns.len() != expected_cols {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header layout: {header}"),
        });
    }

    let mut out = CsvTrajectory {
        times: Vec::new(),
        states: Vec::new(),
        cluster_means: Vec::new(),
        ex_norm: Vec::new(),
        ey_norm: Vec::new(),
        v: Vec::new(),
        envelope: Vec::new(),
    };
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected_cols {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expected_cols} cells, found {}", cells.len()),
            });
        }
        let parse = |cell: &str| -> Result<f64, Error> {
            cell.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad float {cell:?}"),
            })
        };
        let mut it = cells.iter();
        out.times.push(parse(it.next().unwrap())?);
        let mut state = Vec::with_capacity(n);
        for _ in 0..n {
            state.push(parse(it.next().unwrap())?);
        }
        out.states.push(state);
        let mut means = Vec::with_capacity(r);
        for _ in 0..r {
            means.push(parse(it.next().unwrap())?);
        }
        out.cluster_means.push(means);
        out.ex_norm.push(parse(it.next().unwrap())?);
        out.ey_norm.push(parse(it.next().unwrap())?);
        out.v.push(parse(it.next().unwrap())?);
        out.envelope.push(parse(it.next().unwrap())?);
    }
    if out.times.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "CSV has no data rows".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::three_triangle_graph;

    fn two_node_graph() -> ClusterGraph {
        ClusterGraph {
            cluster_sizes: vec![1, 1],
            internal_edges: vec![vec![], vec![]],
            external_edges: vec![(0, 1)],
        }
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_close(*x, *y, tol);
        }
    }

    #[test]
    fn decomposition_of_two_one_partition() {
        let g = ClusterGraph {
            cluster_sizes: vec![2, 1],
            internal_edges: vec![vec![(0, 1)], vec![]],
            external_edges: vec![(0, 2)],
        };
        let d = decomposition(&g).unwrap();
        assert_eq!(d.membership.row(0), &[1.0, 0.0]);
        assert_eq!(d.membership.row(1), &[1.0, 0.0]);
        assert_eq!(d.membership.row(2), &[0.0, 1.0]);
        assert_eq!(d.size_diag.get(0, 0), 2.0);
        assert_eq!(d.size_diag.get(1, 1), 1.0);
        assert_eq!(d.node_centering.row(0), &[0.5, -0.5, 0.0]);
        assert_eq!(d.node_centering.row(2), &[0.0, 0.0, 0.0]);
        // P = U^T U exactly.
        let utu = d.membership.transpose().matmul(&d.membership).unwrap();
        assert_eq!(utu, d.size_diag);
    }

    #[test]
    fn decomposition_of_singletons_has_zero_centering() {
        let g = ClusterGraph {
            cluster_sizes: vec![1, 1, 1],
            internal_edges: vec![vec![], vec![], vec![]],
            external_edges: vec![(0, 1), (1, 2), (0, 2)],
        };
        let d = decomposition(&g).unwrap();
        assert_eq!(d.membership, DenseMatrix::identity(3));
        assert_eq!(d.size_diag, DenseMatrix::identity(3));
        assert_eq!(d.node_centering, DenseMatrix::zeros(3, 3));
    }

    #[test]
    fn decomposition_projector_identities() {
        let g = three_triangle_graph();
        let d = decomposition(&g).unwrap();
        assert_eq!(d.size_diag.get(0, 0), 3.0);
        let w2 = d.node_centering.matmul(&d.node_centering).unwrap();
        assert!(w2.sub(&d.node_centering).unwrap().max_abs() <= 1e-12);
        let wr2 = d.mean_centering.matmul(&d.mean_centering).unwrap();
        assert!(wr2.sub(&d.mean_centering).unwrap().max_abs() <= 1e-12);
        let wu = d.node_centering.matmul(&d.membership).unwrap();
        assert!(wu.max_abs() <= 1e-12);
    }

    #[test]
    fn slow_fast_and_inter_area_values() {
        let g = ClusterGraph {
            cluster_sizes: vec![2, 2],
            internal_edges: vec![vec![(0, 1)], vec![(0, 1)]],
            external_edges: vec![(0, 2)],
        };
        let d = decomposition(&g).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = slow_variable(&x, &d).unwrap();
        assert_eq!(y, vec![1.5, 3.5]);
        let e_x = fast_variable(&x, &d).unwrap();
        assert_eq!(e_x, vec![-0.5, 0.5, -0.5, 0.5]);
        assert_eq!(inter_area_variable(&y), vec![-1.0, 1.0]);
        assert_eq!(inter_area_variable(&[0.0, 1.0, 2.0]), vec![-1.0, 0.0, 1.0]);

        // Constant states are fixed points of every transform.
        let c = [4.0; 4];
        assert_eq!(slow_variable(&c, &d).unwrap(), vec![4.0, 4.0]);
        assert_eq!(fast_variable(&c, &d).unwrap(), vec![0.0; 4]);
        assert_eq!(inter_area_variable(&[4.0, 4.0]), vec![0.0, 0.0]);

        assert!(slow_variable(&[1.0], &d).is_err());
    }

    #[test]
    fn transforms_on_singleton_clusters() {
        let g = two_node_graph();
        let d = decomposition(&g).unwrap();
        // Singleton clusters: the slow variable is the state itself and the
        // fast variable vanishes.
        assert_eq!(slow_variable(&[0.0, 2.0], &d).unwrap(), vec![0.0, 2.0]);
        assert_eq!(fast_variable(&[0.0, 2.0], &d).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn fast_variable_of_broadcast_is_zero() {
        let g = three_triangle_graph();
        let d = decomposition(&g).unwrap();
        let uy = d.broadcast(&[1.0, -2.0, 5.0]);
        let e = fast_variable(&uy, &d).unwrap();
        assert!(e.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn rhs_full_two_nodes() {
        let g = two_node_graph();
        let parts = laplacian(&g).unwrap();
        let out = rhs_full(&[0.0, 2.0], &parts.internal, &parts.external).unwrap();
        assert_eq!(out, vec![2.0, -2.0]);
        let zero = rhs_full(&[3.0, 3.0], &parts.internal, &parts.external).unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);
    }

    #[test]
    fn rhs_full_matches_nodewise_sum() {
        let g = three_triangle_graph();
        let parts = laplacian(&g).unwrap();
        let x: Vec<f64> = (0..9).map(|i| (i as f64) * 0.7 - 2.0).collect();
        let out = rhs_full(&x, &parts.internal, &parts.external).unwrap();
        let edges = g.all_edges_global();
        for i in 0..9 {
            let mut acc = 0.0;
            for &(u, v) in &edges {
                if u == i {
                    acc -= x[i] - x[v];
                } else if v == i {
                    acc -= x[i] - x[u];
                }
            }
            assert_close(out[i], acc, 1e-12);
        }
    }

    #[test]
    fn decomposed_rhs_matches_projected_full_rhs() {
        let g = three_triangle_graph();
        let parts = laplacian(&g).unwrap();
        let d = decomposition(&g).unwrap();
        let x: Vec<f64> = (0..9).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let y = slow_variable(&x, &d).unwrap();
        let e_x = fast_variable(&x, &d).unwrap();

        // W rhs_full(x) equals the fast dynamics evaluated at (e_x, y).
        let full = rhs_full(&x, &parts.internal, &parts.external).unwrap();
        let w_full = d.node_centering.matvec(&full).unwrap();
        let fast = rhs_fast(&e_x, &y, &d, &parts.internal, &parts.external).unwrap();
        assert_vec_close(&w_full, &fast, 1e-10);

        // Per-cluster means of rhs_full equal the slow dynamics.
        let mean_full = d.cluster_means(&full);
        let slow = rhs_slow(&e_x, &y, &d, &parts.external).unwrap();
        assert_vec_close(&mean_full, &slow, 1e-10);

        // Centered slow dynamics equal the inter-area dynamics.
        let e_y = inter_area_variable(&y);
        let w_slow = d.mean_centering.matvec(&slow).unwrap();
        let inter = rhs_inter_area(&e_y, &e_x, &d, &parts.external).unwrap();
        assert_vec_close(&w_slow, &inter, 1e-10);
    }

    #[test]
    fn rhs_fast_and_slow_vanish_at_consensus() {
        let g = three_triangle_graph();
        let parts = laplacian(&g).unwrap();
        let d = decomposition(&g).unwrap();
        let e_x = vec![0.0; 9];
        let y = vec![2.0; 3];
        let fast = rhs_fast(&e_x, &y, &d, &parts.internal, &parts.external).unwrap();
        assert!(fast.iter().all(|v| v.abs() <= 1e-12));
        let slow = rhs_slow(&e_x, &y, &d, &parts.external).unwrap();
        assert!(slow.iter().all(|v| v.abs() <= 1e-12));
        let inter = rhs_inter_area(&[0.0; 3], &e_x, &d, &parts.external).unwrap();
        assert!(inter.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn inter_area_rhs_on_singletons_reduces_to_external_dynamics() {
        let g = ClusterGraph {
            cluster_sizes: vec![1, 1, 1],
            internal_edges: vec![vec![], vec![], vec![]],
            external_edges: vec![(0, 1), (1, 2), (0, 2)],
        };
        let parts = laplacian(&g).unwrap();
        let d = decomposition(&g).unwrap();
        let e_y = [1.0, 0.0, -1.0];
        let out = rhs_inter_area(&e_y, &[0.0; 3], &d, &parts.external).unwrap();
        // With U = P = I this is -W_r L_external e_y; L_external e_y is
        // already mean-free so the centering is a no-op.
        let le = parts.external.matvec(&e_y).unwrap();
        let expected: Vec<f64> = le.iter().map(|v| -v).collect();
        assert_vec_close(&out, &expected, 1e-12);
    }

    #[test]
    fn integrate_two_node_closed_form() {
        let g = two_node_graph();
        let dt = 1e-3;
        let traj = integrate(&g, &[0.0, 2.0], 1.0, dt, 1.0).unwrap();
        let k = traj.len() - 1;
        assert_close(traj.times[k], 1.0, 1e-12);
        assert_close(traj.states[k][0], 1.0 - (-2.0f64).exp(), 1e-6);
        assert_close(traj.states[k][1], 1.0 + (-2.0f64).exp(), 1e-6);
        assert_close(traj.states[k][0], 0.86466, 1e-5);
        assert_close(traj.states[k][1], 1.13534, 1e-5);
    }

    #[test]
    fn integrate_keeps_consensus_fixed() {
        let g = three_triangle_graph();
        let x0 = vec![std::f64::consts::PI; 9];
        let traj = integrate(&g, &x0, 2.0, 0.05, 0.5).unwrap();
        for state in &traj.states {
            assert_eq!(state, &x0);
        }
        assert!(traj.v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integrate_two_singleton_lyapunov_decay() {
        let g = two_node_graph();
        let traj = integrate(&g, &[0.0, 2.0], 3.0, 0.01, 0.123).unwrap();
        assert_close(traj.v[0], 1.0, 1e-12);
        for (k, &t) in traj.times.iter().enumerate() {
            assert_close(traj.v[k], (-4.0 * t).exp(), 1e-8);
        }
        let verdict = verify_envelope(&traj, 1.0);
        assert!(verdict.holds);
        assert!(verdict.non_increasing);
    }

    #[test]
    fn integrate_rejects_unstable_step() {
        let g = two_node_graph();
        // ||L|| = 2, so dt must not exceed 0.5.
        let err = integrate(&g, &[0.0, 2.0], 1.0, 0.6, 0.0).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn integrate_rejects_bad_grid() {
        let g = two_node_graph();
        assert!(matches!(
            integrate(&g, &[0.0, 2.0], 0.0, 0.01, 0.0),
            Err(Error::InvalidTimeGrid { .. })
        ));
        assert!(matches!(
            integrate(&g, &[0.0, 2.0], 1.0, -0.1, 0.0),
            Err(Error::InvalidTimeGrid { .. })
        ));
    }

    #[test]
    fn trajectory_reconstruction_identity() {
        let g = three_triangle_graph();
        let x0 = random_initial_state(9, 5);
        let traj = integrate(&g, &x0, 1.0, 0.02, 0.1).unwrap();
        let d = decomposition(&g).unwrap();
        for k in 0..traj.len() {
            let uy = d.broadcast(&traj.cluster_means[k]);
            for ((fast, base), state) in traj.fast[k]
                .iter()
                .zip(uy.iter())
                .zip(traj.states[k].iter())
            {
                assert_close(fast + base, *state, 1e-10);
            }
            assert_close(
                traj.v[k],
                traj.v_inter[k] + traj.epsilon * traj.v_fast[k],
                1e-14,
            );
        }
    }

    #[test]
    fn envelope_verdict_cases() {
        let g = two_node_graph();
        // Consensus start: V identically zero.
        let flat = integrate(&g, &[1.0, 1.0], 1.0, 0.01, 1.0).unwrap();
        let verdict = verify_envelope(&flat, 1.0);
        assert!(verdict.holds);
        assert_eq!(verdict.worst_ratio, 0.0);
        assert_eq!(verdict.first_violation_time, None);

        // Decay rate 4 is checked against rate 1: passes with margin.
        let traj = integrate(&g, &[0.0, 2.0], 2.0, 0.01, 1.0).unwrap();
        assert!(verify_envelope(&traj, 1.0).holds);
        // Rate 0 degenerates to boundedness by V(0).
        assert!(verify_envelope(&traj, 0.0).holds);
        // A rate above the true decay is violated.
        let verdict = verify_envelope(&traj, 10.0);
        assert!(!verdict.holds);
        assert!(verdict.first_violation_time.is_some());
        assert!(verdict.worst_ratio > 1.0 + ENVELOPE_SLACK);
    }

    #[test]
    fn timescale_metrics_error_and_not_reached_paths() {
        // Singleton clusters: e_x identically zero, error path.
        let g = two_node_graph();
        let traj = integrate(&g, &[0.0, 2.0], 1.0, 0.01, 1.0).unwrap();
        assert!(matches!(
            timescale_metrics(&traj),
            Err(Error::ZeroInitialNorm { which: "fast" })
        ));

        // No external edges: cluster means never move, slow half-life is
        // never reached.
        let g = ClusterGraph {
            cluster_sizes: vec![2, 2],
            internal_edges: vec![vec![(0, 1)], vec![(0, 1)]],
            external_edges: vec![],
        };
        let traj = integrate(&g, &[0.0, 2.0, 5.0, 9.0], 4.0, 0.05, 0.0).unwrap();
        let metrics = timescale_metrics(&traj).unwrap();
        assert!(metrics.t_half_fast.is_some());
        assert_eq!(metrics.t_half_slow, None);
    }

    #[test]
    fn csv_roundtrip_preserves_values() {
        let g = three_triangle_graph();
        let x0 = random_initial_state(9, 11);
        let traj = integrate(&g, &x0, 0.5, 0.05, 0.25).unwrap();
        let csv = write_trajectory_csv(&traj, 0.75);
        let parsed = parse_trajectory_csv(&csv).unwrap();
        assert_eq!(parsed.times.len(), traj.len());
        for k in 0..traj.len() {
            assert_eq!(parsed.times[k], traj.times[k]);
            assert_eq!(parsed.states[k], traj.states[k]);
            assert_eq!(parsed.cluster_means[k], traj.cluster_means[k]);
            assert_eq!(parsed.v[k], traj.v[k]);
            assert_eq!(parsed.ex_norm[k], norm(&traj.fast[k]));
            assert_eq!(
                parsed.envelope[k],
                (-0.75 * traj.times[k]).exp() * traj.v[0]
            );
        }
    }

    #[test]
    fn csv_parse_rejects_ragged_rows() {
        let g = two_node_graph();
        let traj = integrate(&g, &[0.0, 2.0], 0.1, 0.05, 0.0).unwrap();
        let csv = write_trajectory_csv(&traj, 0.0);
        let mut lines: Vec<&str> = csv.lines().collect();
        let truncated = lines[1].rsplit_once(',').unwrap().0.to_string();
        lines[1] = &truncated;
        let bad = lines.join("\n");
        assert!(matches!(
            parse_trajectory_csv(&bad),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn mean_is_conserved_along_trajectories() {
        let g = three_triangle_graph();
        let x0 = random_initial_state(9, 2);
        let m0 = mean(&x0);
        let traj = integrate(&g, &x0, 5.0, 0.05, 0.1).unwrap();
        for state in &traj.states {
            assert_close(mean(state), m0, 1e-9);
        }
    }
}
