//! Clustered undirected graphs, oriented incidence matrices and the
//! internal/external Laplacian split.
//!
//! Clusters occupy contiguous global index ranges in declaration order, so
//! the internal Laplacian is literally block-diagonal. All edges carry unit
//! weight; [`weighted_laplacian`] is available for weighted experiments but
//! nothing in the rate certification consumes it.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::matrix::DenseMatrix;
use crate::tol::GENERATOR_RETRY_BOUND;

/// Undirected edge with a chosen positive end.
///
/// The convention everywhere in this crate: the endpoint with the smaller
/// global index is the positive end. Any orientation yields the same
/// Laplacian; fixing one keeps incidence matrices deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientedEdge {
    pub positive_end: usize,
    pub negative_end: usize,
}

impl OrientedEdge {
    /// Orient an undirected pair, smaller index positive.
    pub fn from_pair(u: usize, v: usize) -> Self {
        assert_ne!(u, v, "self-loop");
        Self {
            positive_end: u.min(v),
            negative_end: u.max(v),
        }
    }
}

/// A partitioned vertex set with per-cluster internal edge lists and a
/// global external edge list.
///
/// `internal_edges[a]` uses cluster-local indices `0..cluster_sizes[a]`;
/// `external_edges` uses global indices. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterGraph {
    pub cluster_sizes: Vec<usize>,
    pub internal_edges: Vec<Vec<(usize, usize)>>,
    pub external_edges: Vec<(usize, usize)>,
}

impl ClusterGraph {
    pub fn n_clusters(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.cluster_sizes.iter().sum()
    }

    /// Global index of the first node of each cluster.
    pub fn cluster_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.cluster_sizes.len());
        let mut acc = 0;
        for &s in &self.cluster_sizes {
            offsets.push(acc);
            acc += s;
        }
        offsets
    }

    /// Cluster owning a global node index.
    pub fn cluster_of(&self, node: usize) -> usize {
        let mut acc = 0;
        for (a, &s) in self.cluster_sizes.iter().enumerate() {
            acc += s;
            if node < acc {
                return a;
            }
        }
        panic!("node {node} out of range");
    }

    pub fn m_internal(&self) -> usize {
        self.internal_edges.iter().map(|e| e.len()).sum()
    }

    pub fn m_external(&self) -> usize {
        self.external_edges.len()
    }

    pub fn m_total(&self) -> usize {
        self.m_internal() + self.m_external()
    }

    /// Internal edges lifted to global indices, cluster-major, stored order.
    pub fn internal_edges_global(&self) -> Vec<(usize, usize)> {
        let offsets = self.cluster_offsets();
        let mut out = Vec::with_capacity(self.m_internal());
        for (a, edges) in self.internal_edges.iter().enumerate() {
            for &(i, j) in edges {
                out.push((offsets[a] + i, offsets[a] + j));
            }
        }
        out
    }

    /// All edges in global indices: internal cluster-major, then external.
    pub fn all_edges_global(&self) -> Vec<(usize, usize)> {
        let mut out = self.internal_edges_global();
        out.extend_from_slice(&self.external_edges);
        out
    }

    /// Check every structural invariant; the report lists all violations.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut violations = Vec::new();
        let r = self.cluster_sizes.len();
        if r == 0 {
            violations.push("graph has no clusters".to_string());
        }
        for (a, &s) in self.cluster_sizes.iter().enumerate() {
            if s == 0 {
                violations.push(format!("cluster {a} has zero nodes"));
            }
        }
        if self.internal_edges.len() != r {
            violations.push(format!(
                "expected {r} internal edge lists, found {}",
                self.internal_edges.len()
            ));
            if !violations.is_empty() {
                return Err(violations);
            }
        }

        for (a, edges) in self.internal_edges.iter().enumerate() {
            let size = self.cluster_sizes.get(a).copied().unwrap_or(0);
            let mut seen = HashSet::new();
            for (k, &(i, j)) in edges.iter().enumerate() {
                if i == j {
                    violations.push(format!("cluster {a} edge {k}: self-loop at node {i}"));
                    continue;
                }
                if i >= size || j >= size {
                    violations.push(format!(
                        "cluster {a} edge {k}: endpoint out of range (({i},{j}) with {size} nodes)"
                    ));
                    continue;
                }
                if !seen.insert((i.min(j), i.max(j))) {
                    violations.push(format!("cluster {a} edge {k}: duplicate edge ({i},{j})"));
                }
            }
        }

        let n = self.n_nodes();
        let mut seen_ext = HashSet::new();
        for (k, &(u, v)) in self.external_edges.iter().enumerate() {
            if u == v {
                violations.push(format!("external edge {k}: self-loop at node {u}"));
                continue;
            }
            if u >= n || v >= n {
                violations.push(format!(
                    "external edge {k}: endpoint out of range (({u},{v}) with {n} nodes)"
                ));
                continue;
            }
            if self.cluster_of(u) == self.cluster_of(v) {
                violations.push(format!(
                    "external edge {k}: ({u},{v}) is internal to cluster {}",
                    self.cluster_of(u)
                ));
            }
            if !seen_ext.insert((u.min(v), u.max(v))) {
                violations.push(format!("external edge {k}: duplicate edge ({u},{v})"));
            }
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// `validate` mapped into the crate error type.
    pub fn ensure_valid(&self) -> Result<(), Error> {
        self.validate().map_err(|violations| Error::InvalidGraph {
            report: violations.join("\n"),
        })
    }
}

/// Node-by-edge incidence matrix: column k holds +1 at the positive end and
/// -1 at the negative end of edge k, columns in input order.
pub fn incidence_matrix(edges: &[OrientedEdge], n_nodes: usize) -> Result<DenseMatrix, Error> {
    if n_nodes == 0 {
        return Err(Error::DimensionMismatch {
            context: "incidence_matrix: zero nodes".into(),
        });
    }
    if edges.is_empty() {
        // One-column convention would be wrong; an edgeless incidence matrix
        // is represented as n x 1 of zeros so that D D^T is still n x n zero.
        return Ok(DenseMatrix::zeros(n_nodes, 1));
    }
    let mut d = DenseMatrix::zeros(n_nodes, edges.len());
    for (k, e) in edges.iter().enumerate() {
        for node in [e.positive_end, e.negative_end] {
            if node >= n_nodes {
                return Err(Error::EndpointOutOfRange { node, n_nodes });
            }
        }
        if e.positive_end == e.negative_end {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "incidence_matrix: edge {k} is a self-loop at node {}",
                    e.positive_end
                ),
            });
        }
        d.set(e.positive_end, k, 1.0);
        d.set(e.negative_end, k, -1.0);
    }
    Ok(d)
}

/// The full, internal and external Laplacians of a cluster graph.
#[derive(Debug, Clone)]
pub struct LaplacianParts {
    pub full: DenseMatrix,
    pub internal: DenseMatrix,
    pub external: DenseMatrix,
}

fn oriented(edges: &[(usize, usize)]) -> Vec<OrientedEdge> {
    edges
        .iter()
        .map(|&(u, v)| OrientedEdge::from_pair(u, v))
        .collect()
}

/// Assemble L, L_internal and L_external as literal incidence products
/// D D^T, so that `laplacian_direct` remains an independent construction to
/// cross-check against. All entries are exact integers.
pub fn laplacian(graph: &ClusterGraph) -> Result<LaplacianParts, Error> {
    graph.ensure_valid()?;
    let n = graph.n_nodes();
    let d_internal = incidence_matrix(&oriented(&graph.internal_edges_global()), n)?;
    let d_external = incidence_matrix(&oriented(&graph.external_edges), n)?;
    let internal = d_internal.matmul(&d_internal.transpose())?;
    let external = d_external.matmul(&d_external.transpose())?;
    let full = internal.add(&external)?;
    Ok(LaplacianParts {
        full,
        internal,
        external,
    })
}

/// Entrywise Laplacian: degree on the diagonal, -1 on edges. Must equal
/// `laplacian(graph).full` exactly; the two constructions cross-check each
/// other.
pub fn laplacian_direct(graph: &ClusterGraph) -> Result<DenseMatrix, Error> {
    graph.ensure_valid()?;
    let n = graph.n_nodes();
    let mut l = DenseMatrix::zeros(n, n);
    for (u, v) in graph.all_edges_global() {
        l.set(u, u, l.get(u, u) + 1.0);
        l.set(v, v, l.get(v, v) + 1.0);
        l.set(u, v, -1.0);
        l.set(v, u, -1.0);
    }
    Ok(l)
}

/// Laplacian of an arbitrary positively weighted edge list. Provided as a
/// hook for weighted experiments; the rate certification path only consumes
/// unit-weight Laplacians.
pub fn weighted_laplacian(
    n_nodes: usize,
    edges: &[(usize, usize, f64)],
) -> Result<DenseMatrix, Error> {
    if n_nodes == 0 {
        return Err(Error::DimensionMismatch {
            context: "weighted_laplacian: zero nodes".into(),
        });
    }
    let mut l = DenseMatrix::zeros(n_nodes, n_nodes);
    for &(u, v, w) in edges {
        for node in [u, v] {
            if node >= n_nodes {
                return Err(Error::EndpointOutOfRange { node, n_nodes });
            }
        }
        if u == v || !w.is_finite() || w <= 0.0 {
            return Err(Error::DimensionMismatch {
                context: format!("weighted_laplacian: bad edge ({u},{v},{w})"),
            });
        }
        l.set(u, u, l.get(u, u) + w);
        l.set(v, v, l.get(v, v) + w);
        l.set(u, v, l.get(u, v) - w);
        l.set(v, u, l.get(v, u) - w);
    }
    Ok(l)
}

/// Connectivity of the undirected graph on the full vertex set `0..n_nodes`.
pub fn is_connected(n_nodes: usize, edges: &[(usize, usize)]) -> bool {
    if n_nodes == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n_nodes];
    for &(u, v) in edges {
        if u >= n_nodes || v >= n_nodes || u == v {
            continue;
        }
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut visited = vec![false; n_nodes];
    let mut stack = vec![0usize];
    visited[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !visited[v] {
                visited[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n_nodes
}

/// How the inside of each cluster is wired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum InternalModel {
    /// Complete graph on the cluster.
    Complete,
    /// Independent edges with probability `p`, resampled until connected.
    Random { p: f64 },
}

/// How clusters are wired to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExternalPattern {
    /// Consecutive clusters in declaration order, wrapping around.
    Ring,
    /// Every unordered cluster pair.
    Complete,
}

/// Parameters for [`generate`].
///
/// The first `gateways` nodes of each cluster carry the external edges: for
/// each cluster pair selected by the pattern, gateway slot g of one cluster
/// is joined to gateway slot g of the other, g = 0..gateways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub cluster_sizes: Vec<usize>,
    pub internal: InternalModel,
    pub external: ExternalPattern,
    pub gateways: usize,
}

fn cluster_pairs(r: usize, pattern: ExternalPattern) -> Vec<(usize, usize)> {
    match pattern {
        ExternalPattern::Ring => {
            if r < 2 {
                Vec::new()
            } else if r == 2 {
                vec![(0, 1)]
            } else {
                (0..r).map(|a| (a, (a + 1) % r)).collect()
            }
        }
        ExternalPattern::Complete => {
            let mut pairs = Vec::new();
            for a in 0..r {
                for b in (a + 1)..r {
                    pairs.push((a, b));
                }
            }
            pairs
        }
    }
}

fn random_connected_cluster(
    size: usize,
    p: f64,
    cluster: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, Error> {
    for _ in 0..GENERATOR_RETRY_BOUND {
        let mut edges = Vec::new();
        for i in 0..size {
            for j in (i + 1)..size {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        if is_connected(size, &edges) {
            return Ok(edges);
        }
    }
    Err(Error::GeneratorRetriesExhausted {
        cluster,
        attempts: GENERATOR_RETRY_BOUND,
    })
}

/// Deterministically generate a cluster graph from a topology spec and seed.
/// Every cluster is internally connected on return.
pub fn generate(spec: &TopologySpec, seed: u64) -> Result<ClusterGraph, Error> {
    let r = spec.cluster_sizes.len();
    if r == 0 {
        return Err(Error::InvalidTopology("no clusters".into()));
    }
    if spec.cluster_sizes.contains(&0) {
        return Err(Error::InvalidTopology(
            "cluster sizes must be positive".into(),
        ));
    }
    if let InternalModel::Random { p } = spec.internal {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::InvalidTopology(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
    }
    let min_size = *spec.cluster_sizes.iter().min().unwrap();
    if r >= 2 {
        if spec.gateways == 0 {
            return Err(Error::InvalidTopology(
                "at least one gateway per cluster required".into(),
            ));
        }
        if spec.gateways > min_size {
            return Err(Error::InvalidTopology(format!(
                "{} gateways requested but smallest cluster has {} nodes",
                spec.gateways, min_size
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut internal_edges = Vec::with_capacity(r);
    for (a, &size) in spec.cluster_sizes.iter().enumerate() {
        let edges = match spec.internal {
            InternalModel::Complete => {
                let mut edges = Vec::with_capacity(size * (size.saturating_sub(1)) / 2);
                for i in 0..size {
                    for j in (i + 1)..size {
                        edges.push((i, j));
                    }
                }
                edges
            }
            InternalModel::Random { p } => random_connected_cluster(size, p, a, &mut rng)?,
        };
        internal_edges.push(edges);
    }

    let graph = ClusterGraph {
        cluster_sizes: spec.cluster_sizes.clone(),
        internal_edges,
        external_edges: Vec::new(),
    };
    let offsets = graph.cluster_offsets();
    let mut external_edges = Vec::new();
    for (a, b) in cluster_pairs(r, spec.external) {
        for g in 0..spec.gateways {
            external_edges.push((offsets[a] + g, offsets[b] + g));
        }
    }

    let graph = ClusterGraph {
        external_edges,
        ..graph
    };
    graph.ensure_valid()?;
    Ok(graph)
}

/// Render a graph in the line-oriented text format (see crate docs):
/// `clusters r`, `sizes ...`, then `internal a i j` and `external u v` lines.
pub fn write_graph_string(graph: &ClusterGraph) -> String {
    let mut out = String::new();
    writeln!(out, "clusters {}", graph.n_clusters()).unwrap();
    let sizes: Vec<String> = graph.cluster_sizes.iter().map(|s| s.to_string()).collect();
    writeln!(out, "sizes {}", sizes.join(" ")).unwrap();
    for (a, edges) in graph.internal_edges.iter().enumerate() {
        for &(i, j) in edges {
            writeln!(out, "internal {a} {i} {j}").unwrap();
        }
    }
    for &(u, v) in &graph.external_edges {
        writeln!(out, "external {u} {v}").unwrap();
    }
    out
}

/// Parse the text format produced by [`write_graph_string`]. The parsed
/// graph is validated before being returned; round-trips are lossless.
pub fn parse_graph_string(text: &str) -> Result<ClusterGraph, Error> {
    let mut clusters: Option<usize> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut internal: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut external: Vec<(usize, usize)> = Vec::new();

    let parse_usize = |tok: &str, line: usize| -> Result<usize, Error> {
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("expected an integer, found {tok:?}"),
        })
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        match keyword {
            "clusters" => {
                if rest.len() != 1 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "clusters line takes one count".into(),
                    });
                }
                let r = parse_usize(rest[0], line_no)?;
                clusters = Some(r);
                internal = vec![Vec::new(); r];
            }
            "sizes" => {
                let r = clusters.ok_or(Error::Parse {
                    line: line_no,
                    message: "sizes line before clusters line".into(),
                })?;
                if rest.len() != r {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {r} sizes, found {}", rest.len()),
                    });
                }
                let mut parsed = Vec::with_capacity(r);
                for tok in rest {
                    parsed.push(parse_usize(tok, line_no)?);
                }
                sizes = Some(parsed);
            }
            "internal" => {
                if rest.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "internal line takes cluster and two local indices".into(),
                    });
                }
                let a = parse_usize(rest[0], line_no)?;
                let i = parse_usize(rest[1], line_no)?;
                let j = parse_usize(rest[2], line_no)?;
                if a >= internal.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("cluster index {a} out of range"),
                    });
                }
                internal[a].push((i, j));
            }
            "external" => {
                if rest.len() != 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "external line takes two global indices".into(),
                    });
                }
                external.push((
                    parse_usize(rest[0], line_no)?,
                    parse_usize(rest[1], line_no)?,
                ));
            }
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown keyword {other:?}"),
                });
            }
        }
    }

    let sizes = sizes.ok_or(Error::Parse {
        line: 0,
        message: "missing sizes line".into(),
    })?;
    let graph = ClusterGraph {
        cluster_sizes: sizes,
        internal_edges: internal,
        external_edges: external,
    };
    graph.ensure_valid()?;
    Ok(graph)
}

pub fn write_graph_file(path: &Path, graph: &ClusterGraph) -> Result<(), Error> {
    std::fs::write(path, write_graph_string(graph))?;
    Ok(())
}

pub fn read_graph_file(path: &Path) -> Result<ClusterGraph, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_graph_string(&text)
}

/// The nine-node, three-cluster example used throughout the tests: three
/// internal triangles plus a triangle over the first node of each cluster.
#[doc(hidden)]
pub fn three_triangle_graph() -> ClusterGraph {
    ClusterGraph {
        cluster_sizes: vec![3, 3, 3],
        internal_edges: vec![
            vec![(0, 1), (1, 2), (0, 2)],
            vec![(0, 1), (1, 2), (0, 2)],
            vec![(0, 1), (1, 2), (0, 2)],
        ],
        external_edges: vec![(0, 3), (0, 6), (3, 6)],
    }
}
