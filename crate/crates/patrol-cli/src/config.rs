//! Run configuration: defaults, config-file parsing, flag precedence, and
//! the effective-config echo.
//!
//! Precedence is flags over config file over defaults. The effective
//! config is echoed into every output directory in the same `key value`
//! format the `--config` flag accepts, so any run can be reproduced from
//! its own artifacts.

use std::fmt;
use std::path::{Path, PathBuf};

use patrol::env::{EnvConfig, RewardParams, StartMode};
use patrol::learner::{ActionSelect, LearnerConfig};

/// Exit-code classification: 2 for configuration problems, 3 for data
/// problems (unreadable or inconsistent files).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

/// Which policy a run executes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySelector {
    Greedy,
    /// Greedy scoring raw σ instead of the visit-discounted value.
    GreedyRaw,
    Random,
    Trained(PathBuf),
}

impl PolicySelector {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "greedy" => Ok(Self::Greedy),
            "greedy-raw" => Ok(Self::GreedyRaw),
            "random" => Ok(Self::Random),
            other => match other.strip_prefix("trained:") {
                Some(path) if !path.is_empty() => Ok(Self::Trained(PathBuf::from(path))),
                _ => Err(CliError::Config(format!(
                    "unknown policy `{other}` (expected greedy, greedy-raw, random, or trained:<path>)"
                ))),
            },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Greedy => "greedy",
            Self::GreedyRaw => "greedy-raw",
            Self::Random => "random",
            Self::Trained(_) => "trained",
        }
    }

    fn spec_string(&self) -> String {
        match self {
            Self::Trained(path) => format!("trained:{}", path.display()),
            other => other.label().to_string(),
        }
    }
}

/// The full effective configuration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub map: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub agents: usize,
    pub line_of_sight: usize,
    pub start_mode: StartMode,
    pub horizon: usize,
    pub discount: f64,
    pub eta: f64,
    pub phi: f64,
    pub nu: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub learning_rate: f64,
    pub gae_lambda: f64,
    pub entropy_coeff: f64,
    pub kl_coeff: f64,
    pub use_gae: bool,
    pub clip_epsilon: f64,
    pub episodes_per_update: usize,
    pub total_updates: usize,
    pub num_runs: usize,
    pub psi: Vec<u32>,
    pub pooled: bool,
    pub select: ActionSelect,
    pub policies: Vec<PolicySelector>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let env = EnvConfig::default();
        let learner = LearnerConfig::default();
        Self {
            map: PathBuf::from("maps/example_20x20.map"),
            out: std::env::var_os("PATROL_OUT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
            seed: 7,
            jobs: 1,
            agents: 5,
            line_of_sight: env.line_of_sight,
            start_mode: env.start_mode,
            horizon: env.horizon,
            discount: env.discount,
            eta: env.reward.eta,
            phi: env.reward.phi,
            nu: env.reward.nu,
            alpha_minus: env.reward.alpha_minus,
            alpha_plus: env.reward.alpha_plus,
            learning_rate: learner.learning_rate,
            gae_lambda: learner.gae_lambda,
            entropy_coeff: learner.entropy_coeff,
            kl_coeff: learner.kl_coeff,
            use_gae: learner.use_gae,
            clip_epsilon: learner.clip_epsilon,
            episodes_per_update: learner.episodes_per_update,
            total_updates: learner.total_updates,
            num_runs: 100,
            psi: vec![3, 5, 10, 20],
            pooled: false,
            select: ActionSelect::Argmax,
            policies: vec![PolicySelector::Greedy],
        }
    }
}

impl RunConfig {
    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            num_agents: self.agents,
            line_of_sight: self.line_of_sight,
            start_mode: self.start_mode,
            horizon: self.horizon,
            reward: RewardParams {
                eta: self.eta,
                phi: self.phi,
                nu: self.nu,
                alpha_minus: self.alpha_minus,
                alpha_plus: self.alpha_plus,
            },
            discount: self.discount,
        }
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            learning_rate: self.learning_rate,
            gae_lambda: self.gae_lambda,
            entropy_coeff: self.entropy_coeff,
            kl_coeff: self.kl_coeff,
            use_gae: self.use_gae,
            clip_epsilon: self.clip_epsilon,
            discount: self.discount,
            episodes_per_update: self.episodes_per_update,
            total_updates: self.total_updates,
            seed: self.seed,
        }
    }

    /// `key value` lines; parseable by [`apply_config_file`].
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, value: String| {
            out.push_str(key);
            out.push(' ');
            out.push_str(&value);
            out.push('\n');
        };
        line("map", self.map.display().to_string());
        line("out", self.out.display().to_string());
        line("seed", self.seed.to_string());
        line("jobs", self.jobs.to_string());
        line("agents", self.agents.to_string());
        line("line_of_sight", self.line_of_sight.to_string());
        line(
            "start_mode",
            match self.start_mode {
                StartMode::Random => "random".into(),
                StartMode::Best => "best".into(),
            },
        );
        line("horizon", self.horizon.to_string());
        line("discount", self.discount.to_string());
        line("eta", self.eta.to_string());
        line("phi", self.phi.to_string());
        line("nu", self.nu.to_string());
        line("alpha_minus", self.alpha_minus.to_string());
        line("alpha_plus", self.alpha_plus.to_string());
        line("learning_rate", self.learning_rate.to_string());
        line("gae_lambda", self.gae_lambda.to_string());
        line("entropy_coeff", self.entropy_coeff.to_string());
        line("kl_coeff", self.kl_coeff.to_string());
        line("use_gae", u8::from(self.use_gae).to_string());
        line("clip_epsilon", self.clip_epsilon.to_string());
        line("episodes_per_update", self.episodes_per_update.to_string());
        line("total_updates", self.total_updates.to_string());
        line("num_runs", self.num_runs.to_string());
        line(
            "psi",
            self.psi.iter().map(u32::to_string).collect::<Vec<_>>().join(","),
        );
        line("pooled", u8::from(self.pooled).to_string());
        line(
            "select",
            match self.select {
                ActionSelect::Argmax => "argmax".into(),
                ActionSelect::Sample => "sample".into(),
            },
        );
        for policy in &self.policies {
            line("policy", policy.spec_string());
        }
        out
    }
}

/// Applies a config file's `key value` lines on top of `config`. Repeated
/// `policy` keys accumulate; everything else overwrites.
pub fn apply_config_file(config: &mut RunConfig, path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
    let mut policies: Vec<PolicySelector> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| CliError::Config(format!("{}:{}: {msg}", path.display(), idx + 1));
        let (key, value) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| bad(format!("missing value in `{line}`")))?;
        let value = value.trim();
        match key {
            "map" => config.map = PathBuf::from(value),
            "out" => config.out = PathBuf::from(value),
            "seed" => config.seed = parse(value, key, &bad)?,
            "jobs" => config.jobs = parse(value, key, &bad)?,
            "agents" => config.agents = parse(value, key, &bad)?,
            "line_of_sight" => config.line_of_sight = parse(value, key, &bad)?,
            "start_mode" => config.start_mode = parse_start_mode(value).map_err(&bad)?,
            "horizon" => config.horizon = parse(value, key, &bad)?,
            "discount" => config.discount = parse(value, key, &bad)?,
            "eta" => config.eta = parse(value, key, &bad)?,
            "phi" => config.phi = parse(value, key, &bad)?,
            "nu" => config.nu = parse(value, key, &bad)?,
            "alpha_minus" => config.alpha_minus = parse(value, key, &bad)?,
            "alpha_plus" => config.alpha_plus = parse(value, key, &bad)?,
            "learning_rate" => config.learning_rate = parse(value, key, &bad)?,
            "gae_lambda" => config.gae_lambda = parse(value, key, &bad)?,
            "entropy_coeff" => config.entropy_coeff = parse(value, key, &bad)?,
            "kl_coeff" => config.kl_coeff = parse(value, key, &bad)?,
            "use_gae" => config.use_gae = parse_flag(value).map_err(&bad)?,
            "clip_epsilon" => config.clip_epsilon = parse(value, key, &bad)?,
            "episodes_per_update" => config.episodes_per_update = parse(value, key, &bad)?,
            "total_updates" => config.total_updates = parse(value, key, &bad)?,
            "num_runs" => config.num_runs = parse(value, key, &bad)?,
            "psi" => config.psi = parse_psi_list(value).map_err(&bad)?,
            "pooled" => config.pooled = parse_flag(value).map_err(&bad)?,
            "select" => config.select = parse_select(value).map_err(&bad)?,
            "policy" => policies.push(PolicySelector::parse(value)?),
            other => return Err(bad(format!("unknown config key `{other}`"))),
        }
    }
    if !policies.is_empty() {
        config.policies = policies;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(
    value: &str,
    key: &str,
    bad: &dyn Fn(String) -> CliError,
) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(format!("invalid value `{value}` for `{key}`")))
}

pub fn parse_start_mode(value: &str) -> Result<StartMode, String> {
    match value {
        "random" => Ok(StartMode::Random),
        "best" => Ok(StartMode::Best),
        other => Err(format!("invalid start mode `{other}` (random|best)")),
    }
}

pub fn parse_select(value: &str) -> Result<ActionSelect, String> {
    match value {
        "argmax" => Ok(ActionSelect::Argmax),
        "sample" => Ok(ActionSelect::Sample),
        other => Err(format!("invalid selection mode `{other}` (argmax|sample)")),
    }
}

fn parse_flag(value: &str) -> Result<bool, String> {
    match value {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(format!("invalid boolean `{other}`")),
    }
}

pub fn parse_psi_list(value: &str) -> Result<Vec<u32>, String> {
    let psi: Result<Vec<u32>, _> = value.split(',').map(|t| t.trim().parse::<u32>()).collect();
    let psi = psi.map_err(|_| format!("invalid psi list `{value}`"))?;
    if psi.is_empty() {
        return Err("psi list is empty".into());
    }
    Ok(psi)
}
