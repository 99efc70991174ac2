//! Desk-scale shared-policy reinforcement learner with value decomposition.
//!
//! The learner trades the original recurrent encoder for a linear policy
//! over handcrafted features (see [`featurize`]): training runs in minutes
//! on one core, stays bit-reproducible, and its gradients can be verified
//! against finite differences. The structural essentials are kept: a
//! single policy shared by all agents, a clipped-surrogate update with GAE
//! advantages, and a joint value estimated as the sum of per-agent value
//! heads.

mod features;
mod gae;
mod model;
mod train;

pub use features::{
    action_slot, featurize, legal_slot_mask, slot_action, slot_targets, Features,
    ACTION_SLOTS, FEATURE_LEN,
};
pub use gae::{gae_advantages, monte_carlo_advantages};
pub use model::{
    argmax_slot, feature_schema_hash, masked_softmax, sample_slot, PolicyParams, THETA_LEN,
};
pub use train::{
    collect_batch, surrogate_gradient, surrogate_objective, train, SampleRecord, StepRecord,
    SurrogateBatch, TrainResult,
};

use thiserror::Error;

use crate::baselines::{Policy, PolicyInput};
use crate::env::{self, Action, EnvConfig, EnvError, EpisodeLog};
use crate::metrics::{self, CoverageReport, MetricsError};
use crate::terrain::PatrolGraph;

use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("training diverged at update {update}: non-finite reward or parameters")]
    DivergedTraining { update: usize },
    #[error("policy file schema {found:016x} does not match expected {expected:016x}")]
    SchemaMismatch { expected: u64, found: u64 },
    #[error("unsupported policy file version {0}")]
    UnsupportedVersion(u32),
    #[error("policy file parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Hyperparameters of the update rule. The defaults follow the published
/// configuration where one exists; the clip range and discount are the
/// usual clipped-surrogate conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub gae_lambda: f64,
    pub entropy_coeff: f64,
    /// KL penalty coefficient, held fixed over training.
    pub kl_coeff: f64,
    pub use_gae: bool,
    pub clip_epsilon: f64,
    pub discount: f64,
    pub episodes_per_update: usize,
    pub total_updates: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            gae_lambda: 0.95,
            entropy_coeff: 0.01,
            kl_coeff: 0.3,
            use_gae: true,
            clip_epsilon: 0.2,
            discount: 0.99,
            episodes_per_update: 16,
            total_updates: 300,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |msg: &str| Err(LearnerError::Env(EnvError::InvalidConfig(msg.into())));
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must be in [0, 1]");
        }
        if self.entropy_coeff < 0.0 || self.kl_coeff < 0.0 {
            return bad("entropy_coeff and kl_coeff must be non-negative");
        }
        if self.clip_epsilon.is_nan() || self.clip_epsilon <= 0.0 {
            return bad("clip_epsilon must be positive");
        }
        if self.discount.is_nan() || self.discount <= 0.0 || self.discount > 1.0 {
            return bad("discount must be in (0, 1]");
        }
        if self.episodes_per_update == 0 {
            return bad("episodes_per_update must be >= 1");
        }
        Ok(())
    }
}

/// Action selection mode when executing trained parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSelect {
    /// Sample from the policy distribution (the training behavior).
    Sample,
    /// Deterministic: the highest-probability legal action.
    Argmax,
}

/// A trained (or initial) parameter set acting as a [`Policy`]. Uses only
/// the masked observation, never the environment's true visit table.
#[derive(Debug, Clone)]
pub struct LearnedPolicy {
    params: PolicyParams,
    select: ActionSelect,
}

impl LearnedPolicy {
    pub fn new(params: PolicyParams, select: ActionSelect) -> Self {
        Self { params, select }
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }
}

impl Policy for LearnedPolicy {
    fn select_action(&mut self, input: &PolicyInput<'_>, rng: &mut ChaCha8Rng) -> Action {
        let features =
            featurize(input.graph, input.observation, input.agent, input.t, input.horizon);
        let node = input.observation.agent_positions[input.agent];
        let mask = legal_slot_mask(input.graph, node);
        let probs = masked_softmax(&self.params.logits(&features), &mask);
        let slot = match self.select {
            ActionSelect::Sample => sample_slot(&probs, rng),
            ActionSelect::Argmax => argmax_slot(&probs, &mask),
        };
        slot_action(input.graph, node, slot).expect("selected slot is legal")
    }
}

/// Outcome of evaluating a parameter set over a batch of rollouts.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub report: CoverageReport,
    pub logs: Vec<EpisodeLog>,
    /// Mean over runs and agents of the episode-total joint reward.
    pub mean_joint_reward: f64,
    /// Same for the individual reward.
    pub mean_individual_reward: f64,
}

/// Rolls the policy out `num_runs` times and scores the batch with the
/// coverage metrics.
pub fn evaluate_policy(
    graph: &PatrolGraph,
    env_config: &EnvConfig,
    params: &PolicyParams,
    num_runs: usize,
    seed: u64,
    select: ActionSelect,
    psi_values: &[u32],
) -> Result<PolicyEvaluation, LearnerError> {
    let mut policy = LearnedPolicy::new(params.clone(), select);
    let mut logs = Vec::with_capacity(num_runs);
    let mut joint_sum = 0.0;
    let mut individual_sum = 0.0;
    for run_seed in env::derive_seeds(seed, num_runs) {
        let result = env::rollout(graph, env_config, &mut policy, run_seed)?;
        joint_sum += result.total_joint.iter().sum::<f64>() / result.total_joint.len() as f64;
        individual_sum += result.total_individual.iter().sum::<f64>()
            / result.total_individual.len() as f64;
        logs.push(result.log);
    }
    let report = metrics::batch_evaluate(graph, &logs, psi_values)?;
    Ok(PolicyEvaluation {
        report,
        logs,
        mean_joint_reward: joint_sum / num_runs as f64,
        mean_individual_reward: individual_sum / num_runs as f64,
    })
}

/// Writes a training curve as `update reward` records.
pub fn format_curve(curve: &[f64]) -> String {
    let mut out = String::from("update mean_joint_reward\n");
    for (update, reward) in curve.iter().enumerate() {
        out.push_str(&format!("{update} {reward}\n"));
    }
    out
}

/// Parses the output of [`format_curve`].
pub fn parse_curve(text: &str) -> Result<Vec<f64>, LearnerError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header = lines.next().map(|(_, l)| l).unwrap_or_default();
    if header.split_whitespace().collect::<Vec<_>>() != ["update", "mean_joint_reward"] {
        return Err(LearnerError::ParseError {
            line: 1,
            message: format!("unexpected curve header `{header}`"),
        });
    }
    let mut curve = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let err = |message: String| LearnerError::ParseError { line: line_no, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [update, reward] = tokens.as_slice() else {
            return Err(err(format!("expected 2 columns, found {}", tokens.len())));
        };
        let update: usize =
            update.parse().map_err(|_| err(format!("bad update index `{update}`")))?;
        if update != curve.len() {
            return Err(err(format!("update {update} out of order")));
        }
        curve.push(reward.parse().map_err(|_| err(format!("bad reward `{reward}`")))?);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::StartMode;
    use crate::terrain::{generate_synthetic_map, skeletonize, SyntheticSpec};

    #[test]
    fn curve_round_trip() {
        let curve = vec![-12.5, 3.25, 700.0 / 3.0];
        assert_eq!(parse_curve(&format_curve(&curve)).unwrap(), curve);
        assert_eq!(parse_curve("update mean_joint_reward\n").unwrap(), Vec::<f64>::new());
        assert!(parse_curve("bogus\n").is_err());
    }

    #[test]
    fn untrained_evaluation_is_sane_and_deterministic() {
        let spec = SyntheticSpec { rows: 6, cols: 6, hotspots: 1, ..SyntheticSpec::default() };
        let graph = skeletonize(&generate_synthetic_map(&spec, 2).unwrap()).unwrap();
        let cfg = EnvConfig {
            num_agents: 2,
            horizon: 10,
            start_mode: StartMode::Random,
            ..EnvConfig::default()
        };
        let params = PolicyParams::zeros();
        let a = evaluate_policy(&graph, &cfg, &params, 5, 33, ActionSelect::Sample, &[3, 20])
            .unwrap();
        let b = evaluate_policy(&graph, &cfg, &params, 5, 33, ActionSelect::Sample, &[3, 20])
            .unwrap();
        assert_eq!(a.logs, b.logs);
        for &(_, v) in &a.report.coverage {
            assert!((0.0..=1.0).contains(&v));
        }
        assert_eq!(a.report.num_runs, 5);
    }

    #[test]
    fn argmax_single_run_has_zero_entropy() {
        let spec = SyntheticSpec { rows: 5, cols: 5, hotspots: 1, ..SyntheticSpec::default() };
        let graph = skeletonize(&generate_synthetic_map(&spec, 4).unwrap()).unwrap();
        let cfg = EnvConfig { num_agents: 1, horizon: 6, ..EnvConfig::default() };
        let eval = evaluate_policy(
            &graph,
            &cfg,
            &PolicyParams::zeros(),
            1,
            0,
            ActionSelect::Argmax,
            &[20],
        )
        .unwrap();
        assert_eq!(eval.report.entropy, 0.0);
    }
}
