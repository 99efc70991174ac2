//! Route evaluation: the coverage index and route entropy.
//!
//! The coverage index asks how much of the hottest part of the monitored
//! area a batch of routes actually touched. Rank the monitored nodes by
//! target value, keep the top ψ percent (the set `Z`), intersect with the
//! nodes any agent visited, and normalize: `|W_ψ| / |Z|` lies in [0, 1].
//! ψ in the 3–20 percent range mirrors the coverage standards used when
//! scoring hotspot predictions.
//!
//! Route entropy measures how much a batch of episodes varies: for each
//! step and agent slot, the Shannon entropy (natural log) of the node the
//! slot occupies across episodes, averaged over slots and steps. A batch of
//! identical routes scores exactly zero.

mod report;

pub use report::{format_table, parse_table, CoverageReport, TableRow};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::env::EpisodeLog;
use crate::terrain::{NodeId, PatrolGraph};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("monitored set is empty")]
    EmptyMonitoredSet,
    #[error("psi must be in (0, 100], got {0}")]
    InvalidPsi(u32),
    #[error("episode batch is empty")]
    EmptyBatch,
    #[error("episodes do not belong to one graph/config: {0}")]
    MixedGraphs(String),
    #[error("report parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
}

/// Whether batch coverage is the mean of per-run indices or the index of
/// the pooled union of all runs' visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    MeanPerRun,
    PooledUnion,
}

/// Monitored nodes ordered by σ descending, ties by ascending node id.
#[derive(Debug, Clone)]
pub struct HotspotRanking {
    order: Vec<NodeId>,
}

impl HotspotRanking {
    pub fn new(graph: &PatrolGraph) -> Self {
        let mut order = graph.monitored().to_vec();
        order.sort_by(|&a, &b| {
            graph.node(b).sigma.total_cmp(&graph.node(a).sigma).then(a.cmp(&b))
        });
        Self { order }
    }

    /// All of C, hottest first.
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }
}

/// The top-ψ-percent set Z: the first ⌈ψ·|C|/100⌉ nodes of the ranking.
/// The ceiling keeps Z non-empty even for small monitored sets.
pub fn top_psi_set(ranking: &HotspotRanking, psi: u32) -> Result<Vec<NodeId>, MetricsError> {
    if psi == 0 || psi > 100 {
        return Err(MetricsError::InvalidPsi(psi));
    }
    let total = ranking.order.len();
    if total == 0 {
        return Err(MetricsError::EmptyMonitoredSet);
    }
    let take = (psi as usize * total).div_ceil(100);
    Ok(ranking.order[..take].to_vec())
}

/// Coverage index of a single episode: |Z ∩ visited| / |Z|.
pub fn coverage_index(
    graph: &PatrolGraph,
    episode: &EpisodeLog,
    psi: u32,
) -> Result<f64, MetricsError> {
    let ranking = HotspotRanking::new(graph);
    let z = top_psi_set(&ranking, psi)?;
    let visited: BTreeSet<NodeId> =
        episode.routes.iter().flatten().copied().collect();
    Ok(intersection_fraction(&z, &visited))
}

fn intersection_fraction(z: &[NodeId], visited: &BTreeSet<NodeId>) -> f64 {
    let hit = z.iter().filter(|id| visited.contains(id)).count();
    hit as f64 / z.len() as f64
}

/// Evaluates a batch of episodes: coverage per ψ (mean per run by default)
/// and route entropy.
pub fn batch_evaluate(
    graph: &PatrolGraph,
    episodes: &[EpisodeLog],
    psi_values: &[u32],
) -> Result<CoverageReport, MetricsError> {
    batch_evaluate_with_mode(graph, episodes, psi_values, CoverageMode::MeanPerRun)
}

pub fn batch_evaluate_with_mode(
    graph: &PatrolGraph,
    episodes: &[EpisodeLog],
    psi_values: &[u32],
    mode: CoverageMode,
) -> Result<CoverageReport, MetricsError> {
    if episodes.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    validate_batch(graph, episodes)?;

    let ranking = HotspotRanking::new(graph);
    let mut coverage = Vec::with_capacity(psi_values.len());
    for &psi in psi_values {
        let z = top_psi_set(&ranking, psi)?;
        let value = match mode {
            CoverageMode::MeanPerRun => {
                let sum: f64 = episodes
                    .iter()
                    .map(|ep| {
                        let visited: BTreeSet<NodeId> =
                            ep.routes.iter().flatten().copied().collect();
                        intersection_fraction(&z, &visited)
                    })
                    .sum();
                sum / episodes.len() as f64
            }
            CoverageMode::PooledUnion => {
                let visited: BTreeSet<NodeId> = episodes
                    .iter()
                    .flat_map(|ep| ep.routes.iter().flatten().copied())
                    .collect();
                intersection_fraction(&z, &visited)
            }
        };
        coverage.push((psi, value));
    }

    Ok(CoverageReport {
        coverage,
        entropy: route_entropy(episodes),
        num_runs: episodes.len(),
        config_hash: episodes[0].config_hash,
        pooled: mode == CoverageMode::PooledUnion,
    })
}

fn validate_batch(graph: &PatrolGraph, episodes: &[EpisodeLog]) -> Result<(), MetricsError> {
    let first = &episodes[0];
    for (idx, ep) in episodes.iter().enumerate() {
        if ep.config_hash != first.config_hash {
            return Err(MetricsError::MixedGraphs(format!(
                "episode {idx} has config hash {:016x}, expected {:016x}",
                ep.config_hash, first.config_hash
            )));
        }
        if ep.num_agents() != first.num_agents() || ep.horizon() != first.horizon() {
            return Err(MetricsError::MixedGraphs(format!(
                "episode {idx} shape ({} agents, {} steps) differs from ({}, {})",
                ep.num_agents(),
                ep.horizon(),
                first.num_agents(),
                first.horizon()
            )));
        }
        if let Some(&node) = ep.routes.iter().flatten().find(|&&n| n >= graph.len()) {
            return Err(MetricsError::MixedGraphs(format!(
                "episode {idx} references node {node}, graph has {} nodes",
                graph.len()
            )));
        }
    }
    Ok(())
}

/// Mean per-step, per-agent-slot occupancy entropy across episodes, in
/// nats. Zero exactly when every episode follows identical routes.
pub fn route_entropy(episodes: &[EpisodeLog]) -> f64 {
    if episodes.is_empty() {
        return 0.0;
    }
    let num_agents = episodes[0].num_agents();
    let steps = episodes[0].horizon() + 1;
    debug_assert!(
        episodes.iter().all(|e| e.num_agents() == num_agents && e.horizon() + 1 == steps),
        "route_entropy requires a shape-consistent batch"
    );
    if num_agents == 0 || steps == 0 {
        return 0.0;
    }

    let total = episodes.len() as f64;
    let mut sum = 0.0;
    for t in 0..steps {
        for agent in 0..num_agents {
            let mut counts: BTreeMap<NodeId, usize> = BTreeMap::new();
            for ep in episodes {
                *counts.entry(ep.routes[agent][t]).or_insert(0) += 1;
            }
            let mut h = 0.0;
            for &count in counts.values() {
                let p = count as f64 / total;
                h -= p * p.ln();
            }
            sum += h;
        }
    }
    sum / (steps as f64 * num_agents as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::{skeletonize, Cell, GridMap, DEFAULT_CELL_SIDE_M};

    fn graph_with_sigmas(sigmas: &[u32]) -> PatrolGraph {
        let cells: Vec<Cell> = sigmas
            .iter()
            .map(|&s| Cell { has_road: true, crime_count: s, in_zone: true })
            .collect();
        skeletonize(&GridMap::new(1, sigmas.len(), DEFAULT_CELL_SIDE_M, cells).unwrap())
            .unwrap()
    }

    fn log_of(routes: Vec<Vec<NodeId>>) -> EpisodeLog {
        EpisodeLog { seed: 0, config_hash: 1, routes }
    }

    #[test]
    fn full_psi_is_whole_monitored_set() {
        let graph = graph_with_sigmas(&[3, 1, 2]);
        let ranking = HotspotRanking::new(&graph);
        let z = top_psi_set(&ranking, 100).unwrap();
        let mut sorted = z.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
        // And the ranking is hottest-first.
        assert_eq!(ranking.order(), &[0, 2, 1]);
    }

    #[test]
    fn psi_cardinality() {
        let sigmas: Vec<u32> = (0..100).map(|i| i as u32).collect();
        let graph = graph_with_sigmas(&sigmas);
        let ranking = HotspotRanking::new(&graph);
        assert_eq!(top_psi_set(&ranking, 3).unwrap().len(), 3);
        assert_eq!(top_psi_set(&ranking, 20).unwrap().len(), 20);
        // Ceiling: 3% of 10 nodes is still one node.
        let small = graph_with_sigmas(&[1; 10]);
        assert_eq!(top_psi_set(&HotspotRanking::new(&small), 3).unwrap().len(), 1);
    }

    #[test]
    fn ranking_ties_break_by_id() {
        // σ: [5, 9, 5, 9, 1] -> order 1, 3 (9s by id), then 0, 2 (5s), then 4.
        let graph = graph_with_sigmas(&[5, 9, 5, 9, 1]);
        let ranking = HotspotRanking::new(&graph);
        assert_eq!(ranking.order(), &[1, 3, 0, 2, 4]);
        // A 40% cut (|Z| = 2) takes both 9s.
        assert_eq!(top_psi_set(&ranking, 40).unwrap(), vec![1, 3]);
    }

    #[test]
    fn invalid_psi_and_empty_monitored() {
        let graph = graph_with_sigmas(&[1]);
        let ranking = HotspotRanking::new(&graph);
        assert!(matches!(top_psi_set(&ranking, 0), Err(MetricsError::InvalidPsi(0))));
        assert!(matches!(top_psi_set(&ranking, 101), Err(MetricsError::InvalidPsi(101))));

        let cells = vec![Cell { has_road: true, crime_count: 0, in_zone: false }];
        let empty_c =
            skeletonize(&GridMap::new(1, 1, DEFAULT_CELL_SIDE_M, cells).unwrap()).unwrap();
        assert!(matches!(
            top_psi_set(&HotspotRanking::new(&empty_c), 10),
            Err(MetricsError::EmptyMonitoredSet)
        ));
    }

    #[test]
    fn coverage_extremes_and_half() {
        // 10 monitored nodes; ψ=20 -> |Z| = 2 (the two hottest).
        let graph = graph_with_sigmas(&[9, 8, 1, 1, 1, 1, 1, 1, 1, 1]);
        let all = log_of(vec![(0..10).collect()]);
        assert_eq!(coverage_index(&graph, &all, 20).unwrap(), 1.0);
        let none = log_of(vec![vec![5, 6, 7]]);
        assert_eq!(coverage_index(&graph, &none, 20).unwrap(), 0.0);
        let one = log_of(vec![vec![0, 2, 3]]);
        assert_eq!(coverage_index(&graph, &one, 20).unwrap(), 0.5);
    }

    #[test]
    fn batch_mean_and_pooled() {
        let graph = graph_with_sigmas(&[9, 8, 1, 1, 1, 1, 1, 1, 1, 1]);
        let hit = EpisodeLog { seed: 0, config_hash: 1, routes: vec![vec![0, 1]] };
        let miss = EpisodeLog { seed: 1, config_hash: 1, routes: vec![vec![5, 6]] };
        let report = batch_evaluate(&graph, &[hit.clone(), miss.clone()], &[20]).unwrap();
        assert_eq!(report.coverage, vec![(20, 0.5)]);
        assert_eq!(report.num_runs, 2);

        let pooled = batch_evaluate_with_mode(
            &graph,
            &[hit, miss],
            &[20],
            CoverageMode::PooledUnion,
        )
        .unwrap();
        assert_eq!(pooled.coverage, vec![(20, 1.0)]);
    }

    #[test]
    fn batch_rejects_mixed_episodes() {
        let graph = graph_with_sigmas(&[1, 1]);
        let a = EpisodeLog { seed: 0, config_hash: 1, routes: vec![vec![0, 1]] };
        let b = EpisodeLog { seed: 0, config_hash: 2, routes: vec![vec![0, 1]] };
        assert!(matches!(
            batch_evaluate(&graph, &[a.clone(), b], &[20]),
            Err(MetricsError::MixedGraphs(_))
        ));
        let oob = EpisodeLog { seed: 0, config_hash: 1, routes: vec![vec![0, 7]] };
        assert!(matches!(
            batch_evaluate(&graph, &[a, oob], &[20]),
            Err(MetricsError::MixedGraphs(_))
        ));
        assert!(matches!(batch_evaluate(&graph, &[], &[20]), Err(MetricsError::EmptyBatch)));
    }

    #[test]
    fn entropy_single_and_identical() {
        let ep = log_of(vec![vec![0, 1, 2]]);
        assert_eq!(route_entropy(std::slice::from_ref(&ep)), 0.0);
        assert_eq!(route_entropy(&[ep.clone(), ep.clone(), ep]), 0.0);
    }

    #[test]
    fn entropy_two_distinct_single_agent_episodes() {
        // Positions differ at every step: ln 2 per step, mean ln 2.
        let a = log_of(vec![vec![0, 1, 2]]);
        let b = log_of(vec![vec![3, 4, 5]]);
        let h = route_entropy(&[a, b]);
        assert!((h - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_counts_each_agent_slot_separately() {
        // Two agents swap routes between the episodes: each slot sees two
        // outcomes per step, so the mean is ln 2, not 0.
        let a = log_of(vec![vec![0, 1], vec![2, 3]]);
        let b = log_of(vec![vec![2, 3], vec![0, 1]]);
        let h = route_entropy(&[a, b]);
        assert!((h - 2.0f64.ln()).abs() < 1e-12);
    }
}
