//! Shared inputs for the criterion benchmarks.

use clusternet_core::{generate, ClusterGraph, ExternalPattern, InternalModel, TopologySpec};

/// The 65-node reference network: clusters of 15, 30 and 20 nodes, complete
/// internally, joined by a gateway triangle.
pub fn network_65() -> ClusterGraph {
    generate(
        &TopologySpec {
            cluster_sizes: vec![15, 30, 20],
            internal: InternalModel::Complete,
            external: ExternalPattern::Ring,
            gateways: 1,
        },
        1,
    )
    .unwrap()
}

/// A 300-node network: six random clusters of 50 nodes, two links between
/// every cluster pair.
pub fn network_300() -> ClusterGraph {
    generate(
        &TopologySpec {
            cluster_sizes: vec![50; 6],
            internal: InternalModel::Random { p: 0.5 },
            external: ExternalPattern::Complete,
            gateways: 2,
        },
        42,
    )
    .unwrap()
}
