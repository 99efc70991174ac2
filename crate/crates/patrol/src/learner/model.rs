//! The policy head and decomposed value head, as one flat parameter vector.
//!
//! Policy: a linear map from the feature vector to one logit per action
//! slot, masked softmax over the legal slots. Value: a linear per-agent
//! estimate whose outputs are summed into the joint value — the
//! value-decomposition structure that gives each agent a share of the
//! credit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::features::{Features, ACTION_SLOTS, FEATURE_LEN};
use super::LearnerError;
use crate::util::fnv1a64;

/// Flat parameter layout: policy weights (slot-major), policy biases,
/// value weights, value bias.
pub const THETA_LEN: usize = ACTION_SLOTS * FEATURE_LEN + ACTION_SLOTS + FEATURE_LEN + 1;

const POLICY_W: usize = 0;
const POLICY_B: usize = ACTION_SLOTS * FEATURE_LEN;
const VALUE_W: usize = POLICY_B + ACTION_SLOTS;
const VALUE_B: usize = VALUE_W + FEATURE_LEN;

const FORMAT_VERSION: u32 = 1;

/// Fingerprint of the feature schema; a policy file trained against a
/// different layout must not load.
pub fn feature_schema_hash() -> u64 {
    let descriptor = format!(
        "features-v1;len={FEATURE_LEN};slots={ACTION_SLOTS};\
         layout=sigma[cur,u,d,l,r],discounted[cur,u,d,l,r],frac_unvisited,\
         d_nearest_agent,d_best_unvisited,time_remaining"
    );
    fnv1a64(descriptor.as_bytes())
}

/// Weights of the shared policy and the per-agent value head.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    theta: Vec<f64>,
}

impl PolicyParams {
    /// All-zero parameters: a uniform policy and a zero value estimate.
    pub fn zeros() -> Self {
        Self { theta: vec![0.0; THETA_LEN] }
    }

    pub fn from_theta(theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), THETA_LEN);
        Self { theta }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }

    /// Raw (unmasked) logits for each action slot.
    pub fn logits(&self, features: &Features) -> [f64; ACTION_SLOTS] {
        let mut out = [0.0; ACTION_SLOTS];
        for (slot, logit) in out.iter_mut().enumerate() {
            let row = POLICY_W + slot * FEATURE_LEN;
            let mut acc = self.theta[POLICY_B + slot];
            for (j, f) in features.iter().enumerate() {
                acc += self.theta[row + j] * f;
            }
            *logit = acc;
        }
        out
    }

    /// Per-agent value estimate; the joint value is the sum over agents.
    pub fn value(&self, features: &Features) -> f64 {
        let mut acc = self.theta[VALUE_B];
        for (j, f) in features.iter().enumerate() {
            acc += self.theta[VALUE_W + j] * f;
        }
        acc
    }

    /// Gradient offsets into the flat vector, used by the surrogate
    /// gradient: (policy weight row of `slot`, policy bias of `slot`).
    pub(crate) fn policy_indices(slot: usize) -> (usize, usize) {
        (POLICY_W + slot * FEATURE_LEN, POLICY_B + slot)
    }

    pub(crate) fn value_indices() -> (usize, usize) {
        (VALUE_W, VALUE_B)
    }

    /// Text form: a versioned header plus the four parameter sections.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("version {FORMAT_VERSION}\n"));
        out.push_str(&format!("feature_schema {:016x}\n", feature_schema_hash()));
        out.push_str(&format!("feature_len {FEATURE_LEN}\n"));
        out.push_str(&format!("num_actions {ACTION_SLOTS}\n"));
        let section = |name: &str, values: &[f64]| {
            let mut line = String::from(name);
            for v in values {
                line.push_str(&format!(" {v}"));
            }
            line.push('\n');
            line
        };
        out.push_str(&section("policy_w", &self.theta[POLICY_W..POLICY_B]));
        out.push_str(&section("policy_b", &self.theta[POLICY_B..VALUE_W]));
        out.push_str(&section("value_w", &self.theta[VALUE_W..VALUE_B]));
        out.push_str(&section("value_b", &self.theta[VALUE_B..]));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LearnerError> {
        let mut version = None;
        let mut schema = None;
        let mut sections: [Option<Vec<f64>>; 4] = [None, None, None, None];
        for (idx, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let line_no = idx + 1;
            let err =
                |message: String| LearnerError::ParseError { line: line_no, message };
            let mut parts = line.split_whitespace();
            let field = parts.next().unwrap_or_default();
            match field {
                "version" => {
                    let v = parts.next().ok_or_else(|| err("missing version".into()))?;
                    version =
                        Some(v.parse::<u32>().map_err(|_| err(format!("bad version `{v}`")))?);
                }
                "feature_schema" => {
                    let v = parts.next().ok_or_else(|| err("missing schema".into()))?;
                    schema = Some(
                        u64::from_str_radix(v, 16)
                            .map_err(|_| err(format!("bad schema `{v}`")))?,
                    );
                }
                "feature_len" | "num_actions" => {
                    let v = parts.next().ok_or_else(|| err("missing value".into()))?;
                    let n: usize =
                        v.parse().map_err(|_| err(format!("bad value `{v}`")))?;
                    let expected =
                        if field == "feature_len" { FEATURE_LEN } else { ACTION_SLOTS };
                    if n != expected {
                        return Err(err(format!("{field} {n} != expected {expected}")));
                    }
                }
                "policy_w" | "policy_b" | "value_w" | "value_b" => {
                    let values: Result<Vec<f64>, _> =
                        parts.map(|t| t.parse::<f64>()).collect();
                    let values =
                        values.map_err(|_| err(format!("bad float in `{field}`")))?;
                    let (idx, expected) = match field {
                        "policy_w" => (0, ACTION_SLOTS * FEATURE_LEN),
                        "policy_b" => (1, ACTION_SLOTS),
                        "value_w" => (2, FEATURE_LEN),
                        _ => (3, 1),
                    };
                    if values.len() != expected {
                        return Err(err(format!(
                            "`{field}` has {} values, expected {expected}",
                            values.len()
                        )));
                    }
                    sections[idx] = Some(values);
                }
                other => return Err(err(format!("unknown field `{other}`"))),
            }
        }
        match version {
            Some(FORMAT_VERSION) => {}
            Some(v) => return Err(LearnerError::UnsupportedVersion(v)),
            None => {
                return Err(LearnerError::ParseError {
                    line: 0,
                    message: "missing version".into(),
                })
            }
        }
        let found = schema.ok_or(LearnerError::ParseError {
            line: 0,
            message: "missing feature_schema".into(),
        })?;
        if found != feature_schema_hash() {
            return Err(LearnerError::SchemaMismatch {
                expected: feature_schema_hash(),
                found,
            });
        }
        let mut theta = Vec::with_capacity(THETA_LEN);
        for (i, section) in sections.into_iter().enumerate() {
            let name = ["policy_w", "policy_b", "value_w", "value_b"][i];
            theta.extend(section.ok_or_else(|| LearnerError::ParseError {
                line: 0,
                message: format!("missing `{name}` section"),
            })?);
        }
        Ok(Self { theta })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), LearnerError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, LearnerError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Probabilities of a masked softmax: zero on illegal slots, normalized
/// over the legal ones.
pub fn masked_softmax(
    logits: &[f64; ACTION_SLOTS],
    mask: &[bool; ACTION_SLOTS],
) -> [f64; ACTION_SLOTS] {
    let mut max = f64::NEG_INFINITY;
    for slot in 0..ACTION_SLOTS {
        if mask[slot] && logits[slot] > max {
            max = logits[slot];
        }
    }
    debug_assert!(max.is_finite(), "at least one legal slot required");
    let mut probs = [0.0; ACTION_SLOTS];
    let mut total = 0.0;
    for slot in 0..ACTION_SLOTS {
        if mask[slot] {
            probs[slot] = (logits[slot] - max).exp();
            total += probs[slot];
        }
    }
    for p in &mut probs {
        *p /= total;
    }
    probs
}

/// Samples a slot from masked-softmax probabilities.
pub fn sample_slot(probs: &[f64; ACTION_SLOTS], rng: &mut ChaCha8Rng) -> usize {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_legal = 0;
    for (slot, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_legal = slot;
            acc += p;
            if draw < acc {
                return slot;
            }
        }
    }
    // Rounding can leave acc fractionally below 1; fall back to the last
    // legal slot.
    last_legal
}

/// Highest-probability legal slot, ties to the lowest slot index.
pub fn argmax_slot(probs: &[f64; ACTION_SLOTS], mask: &[bool; ACTION_SLOTS]) -> usize {
    let mut best = None;
    for slot in 0..ACTION_SLOTS {
        if !mask[slot] {
            continue;
        }
        match best {
            None => best = Some(slot),
            Some(b) if probs[slot] > probs[b] => best = Some(slot),
            _ => {}
        }
    }
    best.expect("at least one legal slot")
}
