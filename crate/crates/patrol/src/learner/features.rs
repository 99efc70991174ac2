//! Handcrafted observation features.
//!
//! The policy is memoryless and linear over a fixed-length feature vector
//! per (agent, observation), so training finishes in minutes and every
//! gradient is checkable by finite differences. The vector packs the local
//! target landscape (the agent's node and its four grid neighbors), a
//! global exploration signal, two beacon distances, and the remaining time.

use crate::env::{Action, Observation};
use crate::terrain::{NodeId, PatrolGraph};

/// Feature vector length.
pub const FEATURE_LEN: usize = 14;

/// Action slots for the policy head: Stay plus the four grid directions.
pub const ACTION_SLOTS: usize = 5;

pub type Features = [f64; FEATURE_LEN];

// Grid direction order for slots 1..=4: up, down, left, right.
const DIRECTIONS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Neighbor of `node` in each of the four grid directions, if present.
pub fn slot_targets(graph: &PatrolGraph, node: NodeId) -> [Option<NodeId>; 4] {
    let (row, col) = graph.node(node).grid_pos;
    let mut out = [None; 4];
    for (i, (dr, dc)) in DIRECTIONS.iter().enumerate() {
        let r = row as i64 + dr;
        let c = col as i64 + dc;
        if r >= 0 && c >= 0 {
            let candidate = graph.node_at(r as usize, c as usize);
            // Only an actual edge (a 4-neighbor road cell) is reachable.
            out[i] = candidate.filter(|id| graph.neighbors(node).contains(id));
        }
    }
    out
}

/// Which policy slots are legal for an agent standing on `node`.
pub fn legal_slot_mask(graph: &PatrolGraph, node: NodeId) -> [bool; ACTION_SLOTS] {
    let targets = slot_targets(graph, node);
    let mut mask = [true; ACTION_SLOTS];
    for (i, target) in targets.iter().enumerate() {
        mask[i + 1] = target.is_some();
    }
    mask
}

/// The action a slot denotes for an agent on `node`. `None` for an illegal
/// slot.
pub fn slot_action(graph: &PatrolGraph, node: NodeId, slot: usize) -> Option<Action> {
    if slot == 0 {
        return Some(Action::Stay);
    }
    slot_targets(graph, node)[slot - 1].map(Action::MoveTo)
}

/// Inverse of [`slot_action`].
pub fn action_slot(graph: &PatrolGraph, node: NodeId, action: Action) -> Option<usize> {
    match action {
        Action::Stay => Some(0),
        Action::MoveTo(dest) => slot_targets(graph, node)
            .iter()
            .position(|&t| t == Some(dest))
            .map(|i| i + 1),
    }
}

/// Builds the feature vector for one agent.
///
/// Layout:
/// - `0..5` — normalized σ of the current node and its up/down/left/right
///   neighbors (absent neighbors zero-padded).
/// - `5..10` — the same σ values discounted by observed visits + 1. Masked
///   visit entries are treated as unvisited.
/// - `10` — fraction of nodes not observed as visited (masked entries count
///   as unvisited).
/// - `11` — normalized Chebyshev distance to the nearest other agent
///   (1 when patrolling alone).
/// - `12` — normalized Chebyshev distance to the highest-σ in-sight
///   unvisited node (1 when no such node is in sight).
/// - `13` — remaining time `(horizon - t) / horizon`.
pub fn featurize(
    graph: &PatrolGraph,
    observation: &Observation,
    agent: usize,
    t: usize,
    horizon: usize,
) -> Features {
    let mut f = [0.0; FEATURE_LEN];
    let here = observation.agent_positions[agent];
    let sigma_scale = graph.max_sigma().max(1.0);
    let (rows, cols) = graph.grid_dims();
    let dist_scale = (rows - 1).max(cols - 1).max(1) as f64;

    let observed_visits = |node: NodeId| -> u32 {
        let v = observation.visible_visits[node];
        if v < 0 {
            0
        } else {
            v as u32
        }
    };
    let sigma_norm = |node: NodeId| graph.node(node).sigma / sigma_scale;

    f[0] = sigma_norm(here);
    f[5] = sigma_norm(here) / f64::from(observed_visits(here) + 1);
    for (i, target) in slot_targets(graph, here).iter().enumerate() {
        if let Some(node) = *target {
            f[1 + i] = sigma_norm(node);
            f[6 + i] = sigma_norm(node) / f64::from(observed_visits(node) + 1);
        }
    }

    let unvisited =
        observation.visible_visits.iter().filter(|&&v| v <= 0).count();
    f[10] = unvisited as f64 / graph.len() as f64;

    f[11] = observation
        .agent_positions
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != agent)
        .map(|(_, &p)| graph.chebyshev(here, p))
        .min()
        .map_or(1.0, |d| d as f64 / dist_scale);

    // Highest-σ node that is in sight and has never been visited; ties on σ
    // go to the lower id. Masked nodes are excluded: out of sight means
    // unknown, not a target.
    let mut beacon: Option<NodeId> = None;
    for node in 0..graph.len() {
        if observation.visible_visits[node] != 0 {
            continue;
        }
        match beacon {
            None => beacon = Some(node),
            Some(best) if graph.node(node).sigma > graph.node(best).sigma => {
                beacon = Some(node)
            }
            _ => {}
        }
    }
    f[12] = beacon.map_or(1.0, |node| graph.chebyshev(here, node) as f64 / dist_scale);

    f[13] = (horizon - t) as f64 / horizon as f64;
    f
}
