//! `patrol` — command-line front end for the patrol routing pipeline.
//!
//! Subcommands mirror the pipeline stages: `gen-map` produces a synthetic
//! grid map, `simulate` rolls a policy out and scores it, `train` fits the
//! shared policy, and `evaluate` compares policies side by side. Every
//! command is reproducible: identical flags and seeds give byte-identical
//! artifacts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use patrol::terrain::SyntheticSpec;

use config::{
    apply_config_file, parse_psi_list, parse_select, parse_start_mode, CliError,
    PolicySelector, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "patrol",
    version,
    about = "Cooperative multi-agent patrol routing: simulate, train, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic grid map with crime hotspots.
    GenMap(GenMapArgs),
    /// Roll out one policy over many seeded runs; write logs and a report.
    Simulate(RunArgs),
    /// Train the shared policy on a map; write policy and training curve.
    Train(RunArgs),
    /// Compare one or more policies in a single table.
    Evaluate(RunArgs),
}

#[derive(Args)]
struct GenMapArgs {
    #[arg(long, default_value_t = 20)]
    rows: usize,
    #[arg(long, default_value_t = 20)]
    cols: usize,
    /// Number of crime hotspots.
    #[arg(long, default_value_t = 3)]
    hotspots: usize,
    /// Smallest peak crime count a hotspot may draw.
    #[arg(long, default_value_t = 20)]
    peak_min: u32,
    /// Largest peak crime count a hotspot may draw.
    #[arg(long, default_value_t = 60)]
    peak_max: u32,
    /// Probability that a cell carries a road, in (0, 1].
    #[arg(long, default_value_t = 0.9)]
    density: f64,
    /// Chebyshev radius over which hotspot crime decays to zero.
    #[arg(long, default_value_t = 3)]
    decay_radius: usize,
    /// Physical cell side in meters.
    #[arg(long, default_value_t = 50.0)]
    cell_side: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output map file.
    #[arg(long, default_value = "map.txt")]
    out: PathBuf,
}

/// Flags shared by simulate, train, and evaluate. Unset flags fall back to
/// the config file (if given), then to built-in defaults.
#[derive(Args)]
struct RunArgs {
    /// Config file of `key value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Map file to run on.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Output directory (env PATROL_OUT_DIR overrides the default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for rollout batches.
    #[arg(long)]
    jobs: Option<usize>,
    /// Patrols to deploy.
    #[arg(long)]
    agents: Option<usize>,
    /// Chebyshev radius of the observation box.
    #[arg(long)]
    line_of_sight: Option<usize>,
    /// Initial agent placement: best | random.
    #[arg(long, value_parser = parse_start_mode)]
    start_mode: Option<patrol::env::StartMode>,
    /// Steps per episode.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    discount: Option<f64>,
    /// Reward normalization factor.
    #[arg(long)]
    eta: Option<f64>,
    /// Relevance threshold for the optimal exploration reward.
    #[arg(long)]
    phi: Option<f64>,
    /// Coverage factor (negative penalty).
    #[arg(long)]
    nu: Option<f64>,
    /// Exploration reward for first visits below the threshold.
    #[arg(long)]
    alpha_minus: Option<f64>,
    /// Exploration reward for first visits at or above the threshold.
    #[arg(long)]
    alpha_plus: Option<f64>,
    /// Reward preset: standard | sparse-zone.
    #[arg(long)]
    reward_preset: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    gae_lambda: Option<f64>,
    #[arg(long)]
    entropy_coeff: Option<f64>,
    #[arg(long)]
    kl_coeff: Option<f64>,
    /// Use GAE advantages (1) or plain discounted returns (0).
    #[arg(long)]
    use_gae: Option<bool>,
    #[arg(long)]
    clip_epsilon: Option<f64>,
    #[arg(long)]
    episodes_per_update: Option<usize>,
    #[arg(long)]
    total_updates: Option<usize>,
    /// Rollouts per evaluation batch.
    #[arg(long)]
    num_runs: Option<usize>,
    /// Comma-separated coverage percentages, e.g. 3,5,10,20.
    #[arg(long, value_parser = parse_psi_list)]
    psi: Option<Vec<u32>>,
    /// Score the pooled union of all runs instead of the per-run mean.
    #[arg(long)]
    pooled: bool,
    /// Action selection for trained policies: argmax | sample.
    #[arg(long, value_parser = parse_select)]
    select: Option<patrol::learner::ActionSelect>,
    /// Policy to run: greedy | greedy-raw | random | trained:<path>.
    /// Repeatable for evaluate.
    #[arg(long = "policy")]
    policies: Vec<String>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            apply_config_file(&mut config, path)?;
        }
        if let Some(preset) = &self.reward_preset {
            let params = match preset.as_str() {
                "standard" => patrol::env::RewardParams::default(),
                "sparse-zone" => patrol::env::RewardParams::sparse_zone(),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown reward preset `{other}` (standard|sparse-zone)"
                    )))
                }
            };
            config.eta = params.eta;
            config.phi = params.phi;
            config.nu = params.nu;
            config.alpha_minus = params.alpha_minus;
            config.alpha_plus = params.alpha_plus;
        }
        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if let Some(value) = self.$field { config.$field = value; })*
            };
        }
        overlay!(
            map, out, seed, jobs, agents, line_of_sight, start_mode, horizon, discount,
            eta, phi, nu, alpha_minus, alpha_plus, learning_rate, gae_lambda,
            entropy_coeff, kl_coeff, use_gae, clip_epsilon, episodes_per_update,
            total_updates, num_runs, psi, select
        );
        if self.pooled {
            config.pooled = true;
        }
        if !self.policies.is_empty() {
            config.policies = self
                .policies
                .iter()
                .map(|s| PolicySelector::parse(s))
                .collect::<Result<_, _>>()?;
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenMap(args) => {
            let spec = SyntheticSpec {
                rows: args.rows,
                cols: args.cols,
                hotspots: args.hotspots,
                peak_min: args.peak_min,
                peak_max: args.peak_max,
                road_density: args.density,
                decay_radius: args.decay_radius,
                cell_side_m: args.cell_side,
            };
            commands::gen_map(&spec, args.seed, &args.out)
        }
        Command::Simulate(args) => commands::simulate(&args.into_config()?),
        Command::Train(args) => commands::train(&args.into_config()?),
        Command::Evaluate(args) => commands::evaluate(&args.into_config()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
