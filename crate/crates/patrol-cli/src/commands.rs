//! The four subcommands: map generation, simulation, training, evaluation.

use std::path::Path;

use patrol::baselines::{GreedyPolicy, GreedyScore, Policy, RandomPolicy};
use patrol::env::{self, EnvConfig, EpisodeLog, RolloutResult};
use patrol::learner::{self, LearnedPolicy, PolicyParams};
use patrol::metrics::{
    self, batch_evaluate_with_mode, format_table, CoverageMode, CoverageReport, TableRow,
};
use patrol::terrain::{self, GridMap, PatrolGraph, SyntheticSpec};

use crate::config::{CliError, PolicySelector, RunConfig};

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn gen_map(spec: &SyntheticSpec, seed: u64, out: &Path) -> Result<(), CliError> {
    let grid = terrain::generate_synthetic_map(spec, seed).map_err(config_err)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(data_err)?;
    }
    terrain::save_map(&grid, out).map_err(data_err)?;
    let graph = terrain::skeletonize(&grid).map_err(data_err)?;
    print_map_summary(&grid, &graph, &format!("{}", out.display()));
    let components = graph.monitored_components();
    if components.len() > 1 {
        eprintln!(
            "warning: monitored set splits into {} components (sizes: {})",
            components.len(),
            components.iter().map(|c| c.len().to_string()).collect::<Vec<_>>().join(", ")
        );
    }
    Ok(())
}

fn print_map_summary(grid: &GridMap, graph: &PatrolGraph, label: &str) {
    let road_cells = grid.cells().iter().filter(|c| c.has_road).count();
    let crime_total: u64 =
        grid.cells().iter().map(|c| u64::from(c.crime_count)).sum();
    let extension_km2 = (grid.rows() * grid.cols()) as f64
        * grid.cell_side_m()
        * grid.cell_side_m()
        / 1_000_000.0;
    println!("map {label}");
    println!("extension_km2 {extension_km2:.2}");
    println!("total_crime {crime_total}");
    println!("grid {}x{} road_cells {road_cells}", grid.rows(), grid.cols());
    println!(
        "nodes {} edges {} monitored {}",
        graph.len(),
        graph.edge_count(),
        graph.monitored().len()
    );
}

fn load_graph(config: &RunConfig) -> Result<PatrolGraph, CliError> {
    let grid = terrain::load_map(&config.map)
        .map_err(|e| CliError::Data(format!("{}: {e}", config.map.display())))?;
    terrain::skeletonize(&grid).map_err(data_err)
}

fn build_policy(
    selector: &PolicySelector,
    config: &RunConfig,
) -> Result<Box<dyn Policy + Send>, CliError> {
    Ok(match selector {
        PolicySelector::Greedy => {
            Box::new(GreedyPolicy::new(config.eta, GreedyScore::VisitDiscounted))
        }
        PolicySelector::GreedyRaw => {
            Box::new(GreedyPolicy::new(config.eta, GreedyScore::RawSigma))
        }
        PolicySelector::Random => Box::new(RandomPolicy),
        PolicySelector::Trained(path) => {
            let params = PolicyParams::load(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Box::new(LearnedPolicy::new(params, config.select))
        }
    })
}

/// Runs `num_runs` seeded rollouts of one policy, parallelized over a
/// worker pool of `jobs` threads. Results come back in run order, so the
/// outputs are identical no matter how many workers run.
fn rollout_batch(
    graph: &PatrolGraph,
    env_config: &EnvConfig,
    selector: &PolicySelector,
    config: &RunConfig,
) -> Result<Vec<RolloutResult>, CliError> {
    let seeds = env::derive_seeds(config.seed, config.num_runs);
    let jobs = config.jobs.max(1);
    let mut results: Vec<Option<Result<RolloutResult, CliError>>> = Vec::new();
    results.resize_with(seeds.len(), || None);

    if jobs == 1 {
        let mut policy = build_policy(selector, config)?;
        for (slot, &seed) in results.iter_mut().zip(&seeds) {
            *slot = Some(
                env::rollout(graph, env_config, policy.as_mut(), seed).map_err(data_err),
            );
        }
    } else {
        // Validate the policy (and any trained-parameter file) up front so
        // worker threads cannot race on the first error.
        drop(build_policy(selector, config)?);
        let chunk = seeds.len().div_ceil(jobs);
        std::thread::scope(|scope| {
            for (worker, slots) in results.chunks_mut(chunk).enumerate() {
                let seeds = &seeds[worker * chunk..];
                scope.spawn(move || {
                    let mut policy = match build_policy(selector, config) {
                        Ok(p) => p,
                        Err(e) => {
                            slots[0] = Some(Err(e));
                            return;
                        }
                    };
                    for (slot, &seed) in slots.iter_mut().zip(seeds) {
                        *slot = Some(
                            env::rollout(graph, env_config, policy.as_mut(), seed)
                                .map_err(data_err),
                        );
                    }
                });
            }
        });
    }
    results
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

fn report_for(
    graph: &PatrolGraph,
    logs: &[EpisodeLog],
    config: &RunConfig,
) -> Result<CoverageReport, CliError> {
    let mode = if config.pooled { CoverageMode::PooledUnion } else { CoverageMode::MeanPerRun };
    batch_evaluate_with_mode(graph, logs, &config.psi, mode).map_err(data_err)
}

fn start_label(config: &RunConfig) -> &'static str {
    match config.start_mode {
        patrol::env::StartMode::Random => "random",
        patrol::env::StartMode::Best => "best",
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(data_err)?;
    std::fs::write(dir.join(name), contents).map_err(data_err)
}

pub fn simulate(config: &RunConfig) -> Result<(), CliError> {
    let graph = load_graph(config)?;
    let env_config = config.env_config();
    env_config.validate().map_err(config_err)?;
    let selector = config.policies.first().ok_or_else(|| {
        CliError::Config("simulate needs a policy (--policy)".into())
    })?;

    let results = rollout_batch(&graph, &env_config, selector, config)?;
    let logs: Vec<EpisodeLog> = results.iter().map(|r| r.log.clone()).collect();
    let report = report_for(&graph, &logs, config)?;

    write_out(&config.out, "config.txt", &config.echo())?;
    for (run, log) in logs.iter().enumerate() {
        write_out(&config.out, &format!("episode_{run:04}.eplog"), &log.to_text())?;
    }
    write_out(&config.out, "report.txt", &report.to_text())?;
    let row = TableRow::from_report(
        selector.label(),
        config.line_of_sight,
        start_label(config),
        config.agents,
        &report,
    );
    let table = format_table(std::slice::from_ref(&row));
    write_out(&config.out, "table.txt", &table)?;
    write_out(&config.out, "heatmap.txt", &visit_heatmap(&graph, &logs))?;
    print!("{table}");
    Ok(())
}

/// Total visits per grid cell across all runs, as a plain grid of counts
/// for external plotting.
fn visit_heatmap(graph: &PatrolGraph, logs: &[EpisodeLog]) -> String {
    let (rows, cols) = graph.grid_dims();
    let mut counts = vec![0u64; rows * cols];
    for log in logs {
        for route in &log.routes {
            for &node in route {
                let (r, c) = graph.node(node).grid_pos;
                counts[r * cols + c] += 1;
            }
        }
    }
    let mut out = String::new();
    for r in 0..rows {
        let line: Vec<String> =
            (0..cols).map(|c| counts[r * cols + c].to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let graph = load_graph(config)?;
    let env_config = config.env_config();
    env_config.validate().map_err(config_err)?;
    let learner_config = config.learner_config();
    learner_config.validate().map_err(config_err)?;

    let result = learner::train(&graph, &env_config, &learner_config).map_err(data_err)?;
    write_out(&config.out, "config.txt", &config.echo())?;
    write_out(&config.out, "policy.txt", &result.params.to_text())?;
    write_out(&config.out, "curve.txt", &learner::format_curve(&result.curve))?;
    match result.curve.last() {
        Some(reward) => println!("final_mean_joint_reward {reward}"),
        None => println!("final_mean_joint_reward untrained"),
    }
    Ok(())
}

pub fn evaluate(config: &RunConfig) -> Result<(), CliError> {
    if config.policies.is_empty() {
        return Err(CliError::Config("evaluate needs at least one --policy".into()));
    }
    let graph = load_graph(config)?;
    let env_config = config.env_config();
    env_config.validate().map_err(config_err)?;

    let mut rows = Vec::new();
    for selector in &config.policies {
        let results = rollout_batch(&graph, &env_config, selector, config)?;
        let logs: Vec<EpisodeLog> = results.into_iter().map(|r| r.log).collect();
        let report = report_for(&graph, &logs, config)?;
        rows.push(TableRow::from_report(
            selector.label(),
            config.line_of_sight,
            start_label(config),
            config.agents,
            &report,
        ));
    }
    let table = format_table(&rows);
    // Guard: what we emit must parse back.
    metrics::parse_table(&table).map_err(data_err)?;
    write_out(&config.out, "config.txt", &config.echo())?;
    write_out(&config.out, "table.txt", &table)?;
    print!("{table}");
    Ok(())
}
