//! The four experiment verbs: generate, analyze, simulate, validate.
//!
//! Every command is a pure function of (config, flags): identical inputs
//! produce byte-identical files, so repeated runs can be diffed directly.

use std::path::{Path, PathBuf};

use serde::Serialize;

use clusternet_core::matrix::{mean, norm};
use clusternet_core::{
    analyze, decomposition, generate, integrate_parts, laplacian, random_initial_state,
    read_graph_file, timescale_metrics, verify_envelope, write_graph_file, write_trajectory_csv,
    ClusterGraph, EnvelopeVerdict, Error as CoreError, RateReport, Sigma2Mode, TimescaleMetrics,
    Trajectory,
};

use crate::config::ExperimentConfig;
use crate::plot::{line_plot, Series};
use crate::CliError;

/// Settled inputs for one run: config plus resolved flag overrides.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub sigma2: Sigma2Mode,
    pub x0_seed: u64,
}

impl RunContext {
    pub fn new(
        config_path: &Path,
        out_override: Option<PathBuf>,
        seed_override: Option<u64>,
        sigma2_override: Option<Sigma2Mode>,
    ) -> Result<Self, CliError> {
        let config = ExperimentConfig::load(config_path)?;
        let out_dir = out_override
            .or_else(|| config.out_dir.clone())
            .ok_or_else(|| {
                CliError::Config(
                    "no output directory: set out_dir in the config or pass --out".into(),
                )
            })?;
        let sigma2 = match sigma2_override {
            Some(mode) => mode,
            None => match &config.sigma2 {
                Some(choice) => choice.to_mode()?,
                None => Sigma2Mode::Full,
            },
        };
        let x0_seed = seed_override.unwrap_or(config.x0_seed);
        Ok(Self {
            config,
            config_path: config_path.to_path_buf(),
            out_dir,
            sigma2,
            x0_seed,
        })
    }

    /// Build or load the network selected by the config.
    pub fn graph(&self) -> Result<ClusterGraph, CliError> {
        if let Some(topology) = &self.config.topology {
            return generate(&topology.spec, topology.seed).map_err(CliError::from);
        }
        let path = self
            .config
            .resolved_graph_file(&self.config_path)
            .expect("config checked: graph_file present");
        read_graph_file(&path).map_err(CliError::from)
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", self.out_dir.display())))
    }
}

/// `generate`: write the graph file and report the edge counts.
pub fn cmd_generate(ctx: &RunContext) -> Result<String, CliError> {
    if ctx.config.topology.is_none() {
        return Err(CliError::Config(
            "generate requires a topology section in the config".into(),
        ));
    }
    let graph = ctx.graph()?;
    ctx.ensure_out_dir()?;
    let path = ctx.out_dir.join("graph.txt");
    write_graph_file(&path, &graph)?;
    Ok(format!(
        "wrote {}\nnodes {}\nedges {}\ninternal_edges {}\nexternal_edges {}",
        path.display(),
        graph.n_nodes(),
        graph.m_total(),
        graph.m_internal(),
        graph.m_external()
    ))
}

/// `analyze`: rate certificate under the selected sigma2 reading, written to
/// report.json and echoed to stdout.
pub fn cmd_analyze(ctx: &RunContext) -> Result<(RateReport, String), CliError> {
    let graph = ctx.graph()?;
    let report = analyze(&graph, ctx.sigma2)?;
    ctx.ensure_out_dir()?;
    let json = report.to_json_string();
    std::fs::write(ctx.out_dir.join("report.json"), format!("{json}\n"))?;
    Ok((report, json))
}

/// Everything simulate writes besides the trajectory itself.
#[derive(Debug, Serialize)]
pub struct SimulationVerdict {
    pub epsilon: f64,
    pub rate: f64,
    pub envelope: EnvelopeVerdict,
    pub timescale: Option<TimescaleMetrics>,
    pub timescale_note: Option<String>,
    /// ||x(t_end) - mean(x0) 1||.
    pub consensus_error: f64,
    /// max_k |mean(x(t_k)) - mean(x0)|.
    pub mean_drift: f64,
}

pub struct SimulationOutput {
    pub report: RateReport,
    pub verdict: SimulationVerdict,
    pub trajectory: Trajectory,
}

fn downsample(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let max_points = 1200;
    if points.len() <= max_points {
        return points;
    }
    let stride = points.len().div_ceil(max_points);
    let last = *points.last().unwrap();
    let mut out: Vec<(f64, f64)> = points.into_iter().step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

fn state_plots(traj: &Trajectory) -> [(String, String); 3] {
    let n = traj.states[0].len();
    let r = traj.cluster_means[0].len();

    let states: Vec<Series> = (0..n)
        .map(|i| Series {
            label: format!("x_{i}"),
            points: downsample(
                traj.times
                    .iter()
                    .zip(traj.states.iter())
                    .map(|(&t, x)| (t, x[i]))
                    .collect(),
            ),
        })
        .collect();
    let fast_norm = vec![Series {
        label: "||e_x||".to_string(),
        points: downsample(
            traj.times
                .iter()
                .zip(traj.fast.iter())
                .map(|(&t, e)| (t, norm(e)))
                .collect(),
        ),
    }];
    let inter: Vec<Series> = (0..r)
        .map(|a| Series {
            label: format!("e_y_{a}"),
            points: downsample(
                traj.times
                    .iter()
                    .zip(traj.inter_area.iter())
                    .map(|(&t, e)| (t, e[a]))
                    .collect(),
            ),
        })
        .collect();

    [
        (
            "states.svg".to_string(),
            line_plot("node states", "t", "x_i(t)", &states),
        ),
        (
            "fast_norm.svg".to_string(),
            line_plot("fast deviation norm", "t", "||e_x(t)||", &fast_norm),
        ),
        (
            "inter_area.svg".to_string(),
            line_plot("inter-area deviations", "t", "e_y(t)", &inter),
        ),
    ]
}

/// `simulate`: analyze, integrate, then emit trajectory.csv, verdict.json and
/// the three SVG panels (states, fast norm, inter-area components).
pub fn cmd_simulate(ctx: &RunContext) -> Result<(SimulationOutput, String), CliError> {
    let graph = ctx.graph()?;
    let report = analyze(&graph, ctx.sigma2)?;
    ctx.ensure_out_dir()?;
    std::fs::write(
        ctx.out_dir.join("report.json"),
        format!("{}\n", report.to_json_string()),
    )?;

    let epsilon = ctx.config.epsilon.unwrap_or(report.epsilon);
    let x0 = random_initial_state(graph.n_nodes(), ctx.x0_seed);
    let parts = laplacian(&graph)?;
    let d = decomposition(&graph)?;
    let traj = integrate_parts(&parts, &d, &x0, ctx.config.t_end, ctx.config.dt, epsilon)?;

    let envelope = verify_envelope(&traj, report.rate);
    let (timescale, timescale_note) = match timescale_metrics(&traj) {
        Ok(metrics) => (Some(metrics), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let m0 = mean(&x0);
    let last = traj.states.last().unwrap();
    let consensus_error = last.iter().map(|v| (v - m0) * (v - m0)).sum::<f64>().sqrt();
    let mean_drift = traj
        .states
        .iter()
        .map(|x| (mean(x) - m0).abs())
        .fold(0.0f64, f64::max);

    let verdict = SimulationVerdict {
        epsilon,
        rate: report.rate,
        envelope,
        timescale,
        timescale_note,
        consensus_error,
        mean_drift,
    };

    let csv = write_trajectory_csv(&traj, report.rate);
    std::fs::write(ctx.out_dir.join("trajectory.csv"), csv)?;
    let verdict_json =
        serde_json::to_string_pretty(&verdict).expect("verdict serialization cannot fail");
    std::fs::write(
        ctx.out_dir.join("verdict.json"),
        format!("{verdict_json}\n"),
    )?;
    for (name, svg) in state_plots(&traj) {
        std::fs::write(ctx.out_dir.join(name), svg)?;
    }

    Ok((
        SimulationOutput {
            report,
            verdict,
            trajectory: traj,
        },
        verdict_json,
    ))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// `validate`: re-parse the emitted trajectory.csv and recheck every row
/// against the derived-trace definitions, the envelope column and mean
/// conservation. Reports all violations (capped) instead of the first.
pub fn cmd_validate(ctx: &RunContext) -> Result<String, CliError> {
    let graph = ctx.graph()?;
    let report = analyze(&graph, ctx.sigma2)?;
    let epsilon = ctx.config.epsilon.unwrap_or(report.epsilon);
    let d = decomposition(&graph)?;

    let csv_path = ctx.out_dir.join("trajectory.csv");
    let text = std::fs::read_to_string(&csv_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", csv_path.display())))?;
    let csv = clusternet_core::parse_trajectory_csv(&text)?;

    let mut violations: Vec<String> = Vec::new();
    let mut complain = |row: usize, what: String| {
        if violations.len() < 20 {
            violations.push(format!("row {row}: {what}"));
        }
    };

    let n = graph.n_nodes();
    let r = graph.n_clusters();
    if csv.states[0].len() != n || csv.cluster_means[0].len() != r {
        return Err(CliError::Numeric(format!(
            "CSV shape ({} states, {} means) does not match the graph ({n} nodes, {r} clusters)",
            csv.states[0].len(),
            csv.cluster_means[0].len()
        )));
    }

    let tol = 1e-9;
    let dt = if csv.times.len() >= 2 {
        csv.times[1] - csv.times[0]
    } else {
        0.0
    };
    let v0 = csv.v[0];
    let m0 = mean(&csv.states[0]);
    for k in 0..csv.times.len() {
        if (csv.times[k] - k as f64 * dt).abs() > 1e-9 * (1.0 + csv.times[k].abs()) {
            complain(k, format!("non-uniform time grid: t = {}", csv.times[k]));
        }
        let y = d.cluster_means(&csv.states[k]);
        for (a, (&stored, &recomputed)) in csv.cluster_means[k].iter().zip(y.iter()).enumerate() {
            if !rel_close(stored, recomputed, tol) {
                complain(
                    k,
                    format!("y_{a} = {stored} but cluster mean is {recomputed}"),
                );
            }
        }
        let uy = d.broadcast(&y);
        let e_x: Vec<f64> = csv.states[k]
            .iter()
            .zip(uy.iter())
            .map(|(a, b)| a - b)
            .collect();
        if !rel_close(csv.ex_norm[k], norm(&e_x), tol) {
            complain(
                k,
                format!("ex_norm {} vs recomputed {}", csv.ex_norm[k], norm(&e_x)),
            );
        }
        let e_y: Vec<f64> = {
            let ym = mean(&y);
            y.iter().map(|v| v - ym).collect()
        };
        if !rel_close(csv.ey_norm[k], norm(&e_y), tol) {
            complain(
                k,
                format!("ey_norm {} vs recomputed {}", csv.ey_norm[k], norm(&e_y)),
            );
        }
        let v = 0.5 * norm(&e_y).powi(2) + epsilon * 0.5 * norm(&e_x).powi(2);
        if !rel_close(csv.v[k], v, tol) {
            complain(k, format!("V {} vs recomputed {}", csv.v[k], v));
        }
        let envelope = (-report.rate * csv.times[k]).exp() * v0;
        if !rel_close(csv.envelope[k], envelope, tol) {
            complain(
                k,
                format!("envelope {} vs recomputed {}", csv.envelope[k], envelope),
            );
        }
        if (mean(&csv.states[k]) - m0).abs() > 1e-9 {
            complain(k, format!("state mean drifted to {}", mean(&csv.states[k])));
        }
    }

    if violations.is_empty() {
        Ok(format!(
            "validate: ok ({} rows, {} nodes, {} clusters)",
            csv.times.len(),
            n,
            r
        ))
    } else {
        Err(CliError::Numeric(format!(
            "trajectory.csv failed validation:\n{}",
            violations.join("\n")
        )))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidGraph { .. }
            | CoreError::EndpointOutOfRange { .. }
            | CoreError::DisconnectedCluster { .. }
            | CoreError::GeneratorRetriesExhausted { .. }
            | CoreError::InvalidTopology(_)
            | CoreError::Parse { .. } => CliError::Graph(e.to_string()),
            CoreError::Io(inner) => CliError::Config(inner.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
