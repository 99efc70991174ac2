//! The patrol simulation core.
//!
//! A fixed-horizon episode models one shift: `N` homogeneous agents move
//! simultaneously over a [`PatrolGraph`], one hop (or a stay) per step.
//! The environment tracks per-node visit counts, produces line-of-sight
//! observations, and pays the cooperative reward.
//!
//! # Rewards
//!
//! Each agent's individual reward on arrival at node `v` with
//! post-arrival visit count `u`:
//!
//! - `v` outside the monitored set: the coverage factor `nu` (negative).
//! - otherwise, the visit-discounted value `sigma(v) / (eta * u)`, plus the
//!   one-time exploration bonus, plus `nu / 2` whenever the value term has
//!   dropped below 1 (the node is no longer worth standing on).
//!
//! The exploration bonus pays `alpha_plus` on the first-ever visit of a node
//! whose target value meets the relevance threshold `phi`, `alpha_minus` on
//! the first visit of any other node, and nothing after that. The joint
//! reward adds the sum of everyone's individual rewards to each agent's own,
//! which keeps lazy agents from coasting on teammates' work.
//!
//! Transitions and observations are deterministic: actions always succeed
//! and observations are a pure function of state.

mod log;

pub use log::EpisodeLog;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thiserror::Error;

use crate::baselines::{Policy, PolicyInput};
use crate::terrain::{NodeId, PatrolGraph};
use crate::util::fnv1a64;

// Distinct ChaCha streams per seed: one for the environment (start
// placement), one for whatever policy is driving it, one for deriving
// per-run seeds of a batch.
const ENV_STREAM: u64 = 0;
pub(crate) const POLICY_STREAM: u64 = 1;
const BATCH_STREAM: u64 = 2;

/// Expands a base seed into per-run seeds for a batch of rollouts, so runs
/// stay independent and reproducible under any execution order.
pub fn derive_seeds(base_seed: u64, count: usize) -> Vec<u64> {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(BATCH_STREAM);
    (0..count).map(|_| rng.next_u64()).collect()
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("cannot place {agents} agents on {available} distinct start nodes")]
    TooManyAgents { agents: usize, available: usize },
    #[error("agent {agent} chose an illegal action {action:?}")]
    IllegalAction { agent: usize, action: Action },
    #[error("episode already finished (t = horizon)")]
    EpisodeFinished,
}

/// Where agents are placed at reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    /// Distinct monitored nodes drawn uniformly at random.
    Random,
    /// Agent `k` starts on the `(k+1)`-th highest-σ monitored node, ties
    /// broken by lower node id: the best node not yet taken.
    Best,
}

/// Reward function parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardParams {
    /// Normalization factor η; divides the target value.
    pub eta: f64,
    /// Relevance threshold φ separating important nodes.
    pub phi: f64,
    /// Coverage factor ν, a penalty; must be negative.
    pub nu: f64,
    /// Exploration reward α⁻ for first visits below the threshold.
    pub alpha_minus: f64,
    /// Optimal exploration reward α⁺ for first visits at or above it.
    pub alpha_plus: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self { eta: 10.0, phi: 10.0, nu: -25.0, alpha_minus: 5.0, alpha_plus: 50.0 }
    }
}

impl RewardParams {
    /// Retuning for large sparse zones: milder coverage penalty, doubled
    /// exploration rewards.
    pub fn sparse_zone() -> Self {
        Self { nu: -10.0, alpha_minus: 10.0, alpha_plus: 100.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        // NaN fails every comparison, so spell the checks NaN-first.
        if self.eta.is_nan() || self.eta <= 0.0 {
            return Err(EnvError::InvalidConfig("eta must be positive".into()));
        }
        if self.nu.is_nan() || self.nu >= 0.0 {
            return Err(EnvError::InvalidConfig("nu must be negative".into()));
        }
        if self.alpha_plus < self.alpha_minus {
            return Err(EnvError::InvalidConfig(
                "alpha_plus must be >= alpha_minus".into(),
            ));
        }
        Ok(())
    }
}

/// Environment configuration: the knobs of the decision process.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub num_agents: usize,
    /// Chebyshev radius L of the observation box, in grid cells.
    pub line_of_sight: usize,
    pub start_mode: StartMode,
    /// Steps per episode (a shift).
    pub horizon: usize,
    pub reward: RewardParams,
    /// Discount factor γ. Carried here for completeness; consumed by the
    /// learner.
    pub discount: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            num_agents: 2,
            line_of_sight: 3,
            start_mode: StartMode::Best,
            horizon: 50,
            reward: RewardParams::default(),
            discount: 0.99,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.num_agents == 0 {
            return Err(EnvError::InvalidConfig("num_agents must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(EnvError::InvalidConfig("horizon must be >= 1".into()));
        }
        if self.line_of_sight == 0 {
            return Err(EnvError::InvalidConfig("line_of_sight must be >= 1".into()));
        }
        if self.discount.is_nan() || self.discount <= 0.0 || self.discount > 1.0 {
            return Err(EnvError::InvalidConfig("discount must be in (0, 1]".into()));
        }
        self.reward.validate()
    }

    /// Stable fingerprint of this config on a given graph; stamped into
    /// episode logs and reports so mismatched artifacts are detectable.
    pub fn config_hash(&self, graph: &PatrolGraph) -> u64 {
        let text = format!(
            "agents={};los={};start={:?};horizon={};eta={};phi={};nu={};am={};ap={};gamma={};graph={:016x}",
            self.num_agents,
            self.line_of_sight,
            self.start_mode,
            self.horizon,
            self.reward.eta.to_bits(),
            self.reward.phi.to_bits(),
            self.reward.nu.to_bits(),
            self.reward.alpha_minus.to_bits(),
            self.reward.alpha_plus.to_bits(),
            self.discount.to_bits(),
            graph.fingerprint(),
        );
        fnv1a64(text.as_bytes())
    }
}

/// Full simulation state of one episode.
#[derive(Debug, Clone)]
pub struct EnvState {
    /// Step index in `[0, horizon]`.
    pub t: usize,
    /// Current node of each agent.
    pub positions: Vec<NodeId>,
    /// Visit count per node. Arrival (including the start placement and
    /// staying put) counts as a visit, so occupied nodes always have a
    /// count of at least 1.
    pub visits: Vec<u32>,
    rng: ChaCha8Rng,
}

impl EnvState {
    /// The episode's generator. Transitions and observations are
    /// deterministic, so after reset consumes the start placement nothing
    /// in the environment itself draws from this stream again.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// What one agent sees before acting.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Positions of all agents, the observer included. Peer positions are
    /// never masked.
    pub agent_positions: Vec<NodeId>,
    /// Visit count per node, with entries outside the observer's
    /// line-of-sight box masked to -1. A real count is always >= 0, so the
    /// sentinel is unambiguous.
    pub visible_visits: Vec<i64>,
    /// Target value per node; not masked.
    pub target_values: Vec<f64>,
}

/// One agent's move for a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Stay,
    /// Move to an adjacent node.
    MoveTo(NodeId),
}

/// Outcome of one simultaneous step.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// R′ per agent.
    pub individual_rewards: Vec<f64>,
    /// Joint reward per agent: own R′ plus the sum of everyone's R′.
    pub joint_rewards: Vec<f64>,
    pub observations: Vec<Observation>,
    pub done: bool,
}

/// Starts an episode: places agents, seeds the per-episode generator, and
/// returns the initial observations. Start placements count as visits.
pub fn reset(
    graph: &PatrolGraph,
    config: &EnvConfig,
    seed: u64,
) -> Result<(EnvState, Vec<Observation>), EnvError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ENV_STREAM);

    let monitored = graph.monitored();
    if monitored.len() < config.num_agents {
        return Err(EnvError::TooManyAgents {
            agents: config.num_agents,
            available: monitored.len(),
        });
    }
    let positions: Vec<NodeId> = match config.start_mode {
        StartMode::Best => {
            let mut ranked = monitored.to_vec();
            ranked.sort_by(|&a, &b| {
                graph
                    .node(b)
                    .sigma
                    .total_cmp(&graph.node(a).sigma)
                    .then(a.cmp(&b))
            });
            ranked.truncate(config.num_agents);
            ranked
        }
        StartMode::Random => {
            let mut pool = monitored.to_vec();
            pool.shuffle(&mut rng);
            pool.truncate(config.num_agents);
            pool
        }
    };

    let mut visits = vec![0u32; graph.len()];
    for &p in &positions {
        visits[p] = 1;
    }
    let state = EnvState { t: 0, positions, visits, rng };
    let observations =
        (0..config.num_agents).map(|a| observe(graph, &state, config, a)).collect();
    Ok((state, observations))
}

/// Actions available to an agent: stay, plus one move per neighbor.
/// Ordered Stay first, then moves by ascending destination id.
pub fn legal_actions(graph: &PatrolGraph, state: &EnvState, agent: usize) -> Vec<Action> {
    let mut actions = vec![Action::Stay];
    actions.extend(graph.neighbors(state.positions[agent]).iter().map(|&n| Action::MoveTo(n)));
    actions
}

/// Advances the simulation one step. All agents move simultaneously and may
/// share a node. Visit counts are incremented in ascending agent order, and
/// each agent's reward is computed from the count as of its own increment,
/// so of several simultaneous first arrivals only the lowest-indexed agent
/// collects the exploration bonus.
pub fn step(
    graph: &PatrolGraph,
    state: &mut EnvState,
    config: &EnvConfig,
    actions: &[Action],
) -> Result<StepResult, EnvError> {
    if state.t >= config.horizon {
        return Err(EnvError::EpisodeFinished);
    }
    assert_eq!(actions.len(), config.num_agents, "one action per agent");

    let mut destinations = Vec::with_capacity(actions.len());
    for (agent, &action) in actions.iter().enumerate() {
        let here = state.positions[agent];
        let dest = match action {
            Action::Stay => here,
            Action::MoveTo(target) => {
                if !graph.neighbors(here).contains(&target) {
                    return Err(EnvError::IllegalAction { agent, action });
                }
                target
            }
        };
        destinations.push(dest);
    }

    let mut individual = Vec::with_capacity(destinations.len());
    for &dest in &destinations {
        state.visits[dest] += 1;
        individual.push(individual_reward(graph, &config.reward, dest, state.visits[dest]));
    }
    state.positions = destinations;

    let sum: f64 = individual.iter().sum();
    let joint: Vec<f64> = individual.iter().map(|r| r + sum).collect();

    state.t += 1;
    let done = state.t == config.horizon;
    let observations =
        (0..config.num_agents).map(|a| observe(graph, state, config, a)).collect();
    Ok(StepResult { individual_rewards: individual, joint_rewards: joint, observations, done })
}

/// R′ for an agent standing on `node` with post-arrival count `upsilon`.
fn individual_reward(
    graph: &PatrolGraph,
    reward: &RewardParams,
    node: NodeId,
    upsilon: u32,
) -> f64 {
    if !graph.is_monitored(node) {
        return reward.nu;
    }
    let sigma = graph.node(node).sigma;
    let value = sigma / (reward.eta * f64::from(upsilon));
    // A post-arrival count of 1 means the node was never visited before and
    // nobody else was standing on it: any occupant would already have
    // contributed a visit.
    let bonus = if upsilon == 1 {
        if sigma >= reward.phi {
            reward.alpha_plus
        } else {
            reward.alpha_minus
        }
    } else {
        0.0
    };
    if value >= 1.0 {
        value + bonus
    } else {
        value + bonus + reward.nu / 2.0
    }
}

/// The observation of one agent: all peer positions, visit counts inside
/// the agent's Chebyshev line-of-sight box, the full target vector.
pub fn observe(
    graph: &PatrolGraph,
    state: &EnvState,
    config: &EnvConfig,
    agent: usize,
) -> Observation {
    let (or, oc) = graph.node(state.positions[agent]).grid_pos;
    let radius = config.line_of_sight;
    let visible_visits = graph
        .nodes()
        .iter()
        .map(|n| {
            let (r, c) = n.grid_pos;
            if or.abs_diff(r).max(oc.abs_diff(c)) <= radius {
                i64::from(state.visits[n.id])
            } else {
                -1
            }
        })
        .collect();
    Observation {
        agent_positions: state.positions.clone(),
        visible_visits,
        target_values: graph.nodes().iter().map(|n| n.sigma).collect(),
    }
}

/// Cumulative outcome of one full episode.
#[derive(Debug, Clone)]
pub struct RolloutResult {
    pub log: EpisodeLog,
    /// Summed individual reward per agent.
    pub total_individual: Vec<f64>,
    /// Summed joint reward per agent.
    pub total_joint: Vec<f64>,
}

/// Runs reset plus `horizon` steps under `policy`. The policy is shared:
/// it is consulted once per agent per step, in agent order, drawing on a
/// dedicated rng stream derived from `seed`.
pub fn rollout(
    graph: &PatrolGraph,
    config: &EnvConfig,
    policy: &mut dyn Policy,
    seed: u64,
) -> Result<RolloutResult, EnvError> {
    let (mut state, mut observations) = reset(graph, config, seed)?;
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed);
    policy_rng.set_stream(POLICY_STREAM);
    policy.begin_episode();

    let mut routes: Vec<Vec<NodeId>> =
        state.positions.iter().map(|&p| vec![p]).collect();
    let mut total_individual = vec![0.0; config.num_agents];
    let mut total_joint = vec![0.0; config.num_agents];

    for _ in 0..config.horizon {
        let actions: Vec<Action> = (0..config.num_agents)
            .map(|agent| {
                let legal = legal_actions(graph, &state, agent);
                let input = PolicyInput {
                    agent,
                    observation: &observations[agent],
                    legal: &legal,
                    true_visits: &state.visits,
                    graph,
                    t: state.t,
                    horizon: config.horizon,
                };
                policy.select_action(&input, &mut policy_rng)
            })
            .collect();
        let result = step(graph, &mut state, config, &actions)?;
        for agent in 0..config.num_agents {
            routes[agent].push(state.positions[agent]);
            total_individual[agent] += result.individual_rewards[agent];
            total_joint[agent] += result.joint_rewards[agent];
        }
        observations = result.observations;
    }

    let log = EpisodeLog { seed, config_hash: config.config_hash(graph), routes };
    Ok(RolloutResult { log, total_individual, total_joint })
}
