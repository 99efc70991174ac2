//! Non-learning reference policies and the policy contract itself.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Action, Observation};
use crate::terrain::{NodeId, PatrolGraph};

/// Everything a policy may consult when choosing an action.
///
/// `true_visits` is the unmasked global visit table. The greedy baseline
/// reads it — it is meant to lack coordination, not state visibility —
/// while learned policies must restrict themselves to `observation`.
pub struct PolicyInput<'a> {
    pub agent: usize,
    pub observation: &'a Observation,
    /// Legal actions for this agent: Stay first, then moves by ascending
    /// destination id.
    pub legal: &'a [Action],
    pub true_visits: &'a [u32],
    pub graph: &'a PatrolGraph,
    pub t: usize,
    pub horizon: usize,
}

/// A shared decision rule: one instance serves every agent of an episode.
/// The rng passed in is a dedicated per-episode stream, so policies that
/// ignore it are deterministic by construction.
pub trait Policy {
    /// Called once before each episode; stateful policies reset here.
    fn begin_episode(&mut self) {}

    /// Must return an element of `input.legal`.
    fn select_action(&mut self, input: &PolicyInput<'_>, rng: &mut ChaCha8Rng) -> Action;
}

/// How the greedy baseline scores a candidate destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyScore {
    /// σ(v) / (η · (υ(v) + 1)): the value term the agent would realize on
    /// arrival, so greedy chases exactly what the reward pays.
    VisitDiscounted,
    /// Raw σ(v), ignoring visit history.
    RawSigma,
}

/// Moves each agent to the reachable node (its own, or a neighbor) with the
/// highest score; ties go to the lowest node id. All agents decide
/// simultaneously from the pre-move state.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    eta: f64,
    score: GreedyScore,
}

impl GreedyPolicy {
    pub fn new(eta: f64, score: GreedyScore) -> Self {
        assert!(eta > 0.0, "eta must be positive");
        Self { eta, score }
    }

    fn score(&self, graph: &PatrolGraph, visits: &[u32], node: NodeId) -> f64 {
        let sigma = graph.node(node).sigma;
        match self.score {
            GreedyScore::VisitDiscounted => sigma / (self.eta * f64::from(visits[node] + 1)),
            GreedyScore::RawSigma => sigma,
        }
    }
}

/// The greedy baseline with the visit-discounted score.
pub fn greedy_policy(eta: f64) -> GreedyPolicy {
    GreedyPolicy::new(eta, GreedyScore::VisitDiscounted)
}

impl Policy for GreedyPolicy {
    fn select_action(&mut self, input: &PolicyInput<'_>, _rng: &mut ChaCha8Rng) -> Action {
        let here = input.observation.agent_positions[input.agent];
        let mut best_node = here;
        let mut best_score = self.score(input.graph, input.true_visits, here);
        for &action in input.legal {
            let Action::MoveTo(dest) = action else { continue };
            let score = self.score(input.graph, input.true_visits, dest);
            if score > best_score || (score == best_score && dest < best_node) {
                best_node = dest;
                best_score = score;
            }
        }
        if best_node == here {
            Action::Stay
        } else {
            Action::MoveTo(best_node)
        }
    }
}

/// Uniform choice over the legal action set, driven by the per-episode rng
/// stream the rollout provides; reproducible for a fixed rollout seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

pub fn random_policy() -> RandomPolicy {
    RandomPolicy
}

impl Policy for RandomPolicy {
    fn select_action(&mut self, input: &PolicyInput<'_>, rng: &mut ChaCha8Rng) -> Action {
        input.legal[rng.random_range(0..input.legal.len())]
    }
}
