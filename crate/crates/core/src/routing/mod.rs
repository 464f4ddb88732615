//! Semantic-aware routing.
//!
//! Candidate paths are the `k` hop-count shortest loop-free paths. Each is annotated with
//! delay, bottleneck load and a predicted semantic distortion, then scored by a
//! class-weighted blend of a distortion cost and a delay/load cost. The shortest-path,
//! load-based and distortion-minimizing baselines pick from the same candidate set.

mod cost;
mod metrics;
mod paths;
mod topology;

pub use cost::{
    baseline_route, link_distortion, path_cost, perf_cost_j2, predict_distortion, select_path, semantic_cost_j1,
    total_cost, CandidatePath, DistortionModel, KappaMap, PathCost, RoutingConfig, Scheme, Selection,
};
pub use metrics::{aggregate_path_metrics, LinkImpairment, LinkMetrics, LinkSnapshot, PathMetrics};
pub use paths::{k_shortest_paths, shortest_path};
pub use topology::{NetNode, NodeKind, Topology};

use crate::error::Result;

/// Up to `k` candidates from `src` to `dst` annotated against `snapshot`. Paths using a
/// link absent from the snapshot are skipped.
#[allow(clippy::too_many_arguments)]
pub fn generate_candidates(
    topo: &Topology,
    snapshot: &LinkSnapshot,
    src: usize,
    dst: usize,
    k: usize,
    size: f64,
    now: f64,
    interval: f64,
    model: &DistortionModel,
) -> Vec<CandidatePath> {
    k_shortest_paths(topo, src, dst, k)
        .into_iter()
        .filter_map(|hops| {
            let m: Result<PathMetrics> = aggregate_path_metrics(&hops, snapshot, size, now, interval);
            m.ok().map(|m| CandidatePath::new(hops, m, model))
        })
        .collect()
}
