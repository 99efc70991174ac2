//! Batch collection, the clipped-surrogate objective, and the update loop.
//!
//! Each update collects a batch of episodes with the current stochastic
//! policy, estimates advantages with GAE against the decomposed joint
//! value, and ascends the clipped surrogate with an entropy bonus and a
//! fixed-coefficient KL penalty. The objective and its analytic gradient
//! are exposed as pure functions of (params, batch), which is what makes
//! finite-difference verification possible.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{self, EnvConfig};
use crate::terrain::PatrolGraph;

use super::features::{
    featurize, legal_slot_mask, slot_action, Features, ACTION_SLOTS, FEATURE_LEN,
};
use super::gae::{gae_advantages, monte_carlo_advantages};
use super::model::{masked_softmax, sample_slot, PolicyParams, THETA_LEN};
use super::{LearnerConfig, LearnerError};

/// Gradient steps taken on each collected batch. The published learning
/// rate is small; heavy batch reuse (with the clip and the KL penalty as
/// guard rails) is what makes it move at desk scale.
const EPOCHS_PER_UPDATE: usize = 40;

/// Weight of the value-regression term in the combined objective.
const VALUE_LOSS_COEFF: f64 = 0.5;

/// Adam moment parameters for the policy block.
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Optimizer for one training run: Adam on the policy block at the
/// configured learning rate, plain SGD on the critic block at a
/// self-normalized rate.
///
/// The two blocks live on different scales. Policy gradients are tiny and
/// noisy, so Adam's per-parameter normalization is what lets the published
/// learning rate make progress. Value-regression gradients instead grow
/// with the return magnitude, and their curvature is bounded by
/// `num_agents² · (FEATURE_LEN + 1)` because the joint value sums one
/// linear head per agent; stepping at the inverse of that bound converges
/// fast without ever diverging, whatever the reward scale.
struct BlockOptimizer {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    critic_rate: f64,
}

impl BlockOptimizer {
    fn new(num_agents: usize) -> Self {
        let (value_w, _) = PolicyParams::value_indices();
        let curvature_bound = (num_agents * num_agents * (FEATURE_LEN + 1)) as f64;
        Self {
            m: vec![0.0; value_w],
            v: vec![0.0; value_w],
            t: 0,
            critic_rate: 1.0 / curvature_bound,
        }
    }

    /// One ascent step on `params` along `grad`.
    fn step(&mut self, params: &mut PolicyParams, grad: &[f64], learning_rate: f64) {
        self.t += 1;
        let (value_w, _) = PolicyParams::value_indices();
        let theta = params.theta_mut();
        for idx in 0..theta.len() {
            if idx < value_w {
                self.m[idx] = ADAM_BETA1 * self.m[idx] + (1.0 - ADAM_BETA1) * grad[idx];
                self.v[idx] =
                    ADAM_BETA2 * self.v[idx] + (1.0 - ADAM_BETA2) * grad[idx] * grad[idx];
                let m_hat = self.m[idx] / (1.0 - ADAM_BETA1.powi(self.t));
                let v_hat = self.v[idx] / (1.0 - ADAM_BETA2.powi(self.t));
                theta[idx] += learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
            } else {
                theta[idx] += self.critic_rate * grad[idx];
            }
        }
    }
}

/// One (step, agent) decision from a collected batch.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub features: Features,
    pub mask: [bool; ACTION_SLOTS],
    /// Slot the behavior policy sampled.
    pub slot: usize,
    /// Log-probability of that slot under the behavior policy.
    pub old_logp: f64,
    /// Full behavior distribution, for the KL penalty.
    pub old_probs: [f64; ACTION_SLOTS],
    /// Normalized advantage of the step this sample belongs to.
    pub advantage: f64,
}

/// One environment step: everything the value head trains against.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Feature vectors of all agents at this step; the joint value is the
    /// sum of per-agent estimates over these.
    pub agent_features: Vec<Features>,
    /// GAE return target (unnormalized advantage plus the old joint value).
    pub return_target: f64,
}

/// A batch of experience, ready for surrogate evaluation.
#[derive(Debug, Clone)]
pub struct SurrogateBatch {
    pub samples: Vec<SampleRecord>,
    pub steps: Vec<StepRecord>,
    /// Mean over episodes of the episode-total joint reward (averaged over
    /// agents); the training-curve statistic.
    pub mean_episode_joint_reward: f64,
}

/// Collects one episode per seed with the stochastic policy in `params`.
pub fn collect_batch(
    graph: &PatrolGraph,
    env_config: &EnvConfig,
    learner_config: &LearnerConfig,
    params: &PolicyParams,
    seeds: &[u64],
) -> Result<SurrogateBatch, LearnerError> {
    let mut samples = Vec::new();
    let mut steps = Vec::new();
    let mut episode_totals = Vec::with_capacity(seeds.len());

    for &seed in seeds {
        let (mut state, mut observations) = env::reset(graph, env_config, seed)?;
        let mut policy_rng = ChaCha8Rng::seed_from_u64(seed);
        policy_rng.set_stream(env::POLICY_STREAM);

        let horizon = env_config.horizon;
        let mut episode_samples = Vec::with_capacity(horizon * env_config.num_agents);
        let mut episode_steps = Vec::with_capacity(horizon);
        let mut team_rewards = Vec::with_capacity(horizon);
        let mut joint_values = Vec::with_capacity(horizon);
        let mut episode_total = 0.0;

        for _ in 0..horizon {
            let mut agent_features = Vec::with_capacity(env_config.num_agents);
            let mut actions = Vec::with_capacity(env_config.num_agents);
            let mut joint_value = 0.0;
            for (agent, observation) in observations.iter().enumerate() {
                let features = featurize(graph, observation, agent, state.t, horizon);
                let node = state.positions[agent];
                let mask = legal_slot_mask(graph, node);
                let probs = masked_softmax(&params.logits(&features), &mask);
                let slot = sample_slot(&probs, &mut policy_rng);
                actions.push(slot_action(graph, node, slot).expect("sampled slot is legal"));
                joint_value += params.value(&features);
                episode_samples.push(SampleRecord {
                    features,
                    mask,
                    slot,
                    old_logp: probs[slot].ln(),
                    old_probs: probs,
                    advantage: 0.0, // filled in after GAE
                });
                agent_features.push(features);
            }
            let result = env::step(graph, &mut state, env_config, &actions)?;
            let team_reward = result.joint_rewards.iter().sum::<f64>()
                / env_config.num_agents as f64;
            team_rewards.push(team_reward);
            joint_values.push(joint_value);
            episode_total += team_reward;
            episode_steps.push(StepRecord { agent_features, return_target: 0.0 });
            observations = result.observations;
        }

        let advantages = if learner_config.use_gae {
            gae_advantages(
                &team_rewards,
                &joint_values,
                learner_config.discount,
                learner_config.gae_lambda,
            )
        } else {
            monte_carlo_advantages(&team_rewards, &joint_values, learner_config.discount)
        };
        for (t, step) in episode_steps.iter_mut().enumerate() {
            step.return_target = advantages[t] + joint_values[t];
            for agent in 0..env_config.num_agents {
                episode_samples[t * env_config.num_agents + agent].advantage = advantages[t];
            }
        }
        samples.extend(episode_samples);
        steps.extend(episode_steps);
        episode_totals.push(episode_total);
    }

    normalize_advantages(&mut samples);
    let mean_episode_joint_reward =
        episode_totals.iter().sum::<f64>() / episode_totals.len().max(1) as f64;
    Ok(SurrogateBatch { samples, steps, mean_episode_joint_reward })
}

/// Batch-level zero-mean unit-variance advantage normalization. Every
/// agent of a step shares the step advantage, so sample-level moments are
/// the step-level ones.
fn normalize_advantages(samples: &mut [SampleRecord]) {
    if samples.is_empty() {
        return;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n;
    let var = samples.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for s in samples {
        s.advantage = (s.advantage - mean) / (std + 1e-8);
    }
}

/// The maximized objective: clipped policy surrogate, plus entropy bonus,
/// minus the KL penalty, minus the value-regression loss.
pub fn surrogate_objective(
    params: &PolicyParams,
    batch: &SurrogateBatch,
    config: &LearnerConfig,
) -> f64 {
    let mut policy_term = 0.0;
    let mut entropy_term = 0.0;
    let mut kl_term = 0.0;
    for sample in &batch.samples {
        let probs = masked_softmax(&params.logits(&sample.features), &sample.mask);
        let ratio = (probs[sample.slot].ln() - sample.old_logp).exp();
        let clipped =
            ratio.clamp(1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
        policy_term += (ratio * sample.advantage).min(clipped * sample.advantage);
        for (slot, &p) in probs.iter().enumerate() {
            if sample.mask[slot] && p > 0.0 {
                entropy_term -= p * p.ln();
                if sample.old_probs[slot] > 0.0 {
                    kl_term +=
                        sample.old_probs[slot] * (sample.old_probs[slot].ln() - p.ln());
                }
            }
        }
    }
    let num_samples = batch.samples.len() as f64;

    let mut value_loss = 0.0;
    for step in &batch.steps {
        let joint: f64 = step.agent_features.iter().map(|f| params.value(f)).sum();
        value_loss += (joint - step.return_target).powi(2);
    }
    let num_steps = batch.steps.len() as f64;

    policy_term / num_samples + config.entropy_coeff * entropy_term / num_samples
        - config.kl_coeff * kl_term / num_samples
        - VALUE_LOSS_COEFF * value_loss / num_steps
}

/// Analytic gradient of [`surrogate_objective`] with respect to the flat
/// parameter vector.
pub fn surrogate_gradient(
    params: &PolicyParams,
    batch: &SurrogateBatch,
    config: &LearnerConfig,
) -> Vec<f64> {
    let mut grad = vec![0.0; THETA_LEN];
    let num_samples = batch.samples.len() as f64;

    for sample in &batch.samples {
        let probs = masked_softmax(&params.logits(&sample.features), &sample.mask);
        let logp = probs[sample.slot].ln();
        let ratio = (logp - sample.old_logp).exp();
        let clipped =
            ratio.clamp(1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
        let unclipped_term = ratio * sample.advantage;
        let clipped_term = clipped * sample.advantage;

        // d min(u1, u2)/dθ: when the unclipped branch is active the usual
        // score-function gradient applies; when the clipped branch wins the
        // ratio sits in the clamp's flat region and contributes nothing.
        let policy_coeff = if unclipped_term <= clipped_term {
            sample.advantage * ratio / num_samples
        } else {
            0.0
        };

        // Entropy of the masked softmax: dH/dz_k = -p_k (ln p_k + H).
        let mut entropy = 0.0;
        for (slot, &p) in probs.iter().enumerate() {
            if sample.mask[slot] && p > 0.0 {
                entropy -= p * p.ln();
            }
        }

        for (slot, &p) in probs.iter().enumerate() {
            if !sample.mask[slot] || p <= 0.0 {
                continue;
            }
            // d log π(slot*)/dz_k = 1[k = slot*] - p_k.
            let dlogp = f64::from(u8::from(slot == sample.slot)) - p;
            let mut dz = policy_coeff * dlogp;
            dz += config.entropy_coeff * (-p * (p.ln() + entropy)) / num_samples;
            // d KL(old ‖ π)/dz_k = p_k - old_p_k.
            dz -= config.kl_coeff * (p - sample.old_probs[slot]) / num_samples;

            let (w_row, b_idx) = PolicyParams::policy_indices(slot);
            let g = &mut grad;
            for (j, f) in sample.features.iter().enumerate() {
                g[w_row + j] += dz * f;
            }
            g[b_idx] += dz;
        }
    }

    let num_steps = batch.steps.len() as f64;
    let (value_w, value_b) = PolicyParams::value_indices();
    for step in &batch.steps {
        let joint: f64 = step.agent_features.iter().map(|f| params.value(f)).sum();
        let dvalue = -VALUE_LOSS_COEFF * 2.0 * (joint - step.return_target) / num_steps;
        for features in &step.agent_features {
            for (j, f) in features.iter().enumerate() {
                grad[value_w + j] += dvalue * f;
            }
            grad[value_b] += dvalue;
        }
    }
    grad
}

/// Training output: final parameters plus the per-update reward curve.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: PolicyParams,
    /// Mean episode joint reward of each update's collection batch.
    pub curve: Vec<f64>,
}

/// Runs the full training loop. Reproducible: the seed fixes every rollout
/// and therefore every gradient.
pub fn train(
    graph: &PatrolGraph,
    env_config: &EnvConfig,
    learner_config: &LearnerConfig,
) -> Result<TrainResult, LearnerError> {
    env_config.validate()?;
    learner_config.validate()?;
    let mut params = PolicyParams::zeros();
    let mut optimizer = BlockOptimizer::new(env_config.num_agents);
    let mut curve = Vec::with_capacity(learner_config.total_updates);
    let mut master = ChaCha8Rng::seed_from_u64(learner_config.seed);

    for update in 0..learner_config.total_updates {
        let seeds: Vec<u64> =
            (0..learner_config.episodes_per_update).map(|_| master.next_u64()).collect();
        let batch = collect_batch(graph, env_config, learner_config, &params, &seeds)?;
        for _ in 0..EPOCHS_PER_UPDATE {
            let grad = surrogate_gradient(&params, &batch, learner_config);
            optimizer.step(&mut params, &grad, learner_config.learning_rate);
        }
        curve.push(batch.mean_episode_joint_reward);
        if !batch.mean_episode_joint_reward.is_finite() || !params.is_finite() {
            return Err(LearnerError::DivergedTraining { update });
        }
    }
    Ok(TrainResult { params, curve })
}
