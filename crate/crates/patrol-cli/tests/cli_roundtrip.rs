//! End-to-end checks of the `patrol` binary: exit codes, file outputs,
//! determinism, and table parseability.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn patrol() -> Command {
    Command::new(env!("CARGO_BIN_EXE_patrol"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("patrol-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().unwrap();
    assert!(
        output.status.success(),
        "command failed: {}\nstdout: {}\nstderr: {}",
        output.status,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn gen_map(dir: &Path, extra: &[&str]) -> PathBuf {
    let map = dir.join("map.txt");
    let mut cmd = patrol();
    cmd.args(["gen-map", "--seed", "7", "--out"]).arg(&map).args(extra);
    run_ok(&mut cmd);
    map
}

#[test]
fn gen_map_is_deterministic() {
    let dir = tmp("gen-map-det");
    let a = dir.join("a.map");
    let b = dir.join("b.map");
    for out in [&a, &b] {
        run_ok(patrol().args(["gen-map", "--rows", "12", "--cols", "9", "--seed", "3", "--out"]).arg(out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.join("c.map");
    run_ok(patrol().args(["gen-map", "--rows", "12", "--cols", "9", "--seed", "4", "--out"]).arg(&c));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn gen_map_rejects_bad_spec_with_exit_2() {
    let dir = tmp("gen-map-bad");
    let out = patrol()
        .args(["gen-map", "--rows", "0", "--out"])
        .arg(dir.join("x.map"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dense_map_reports_full_lattice_edges() {
    // density 1 on 20x20: 2 * 20 * 19 = 760 edges, 400 nodes.
    let dir = tmp("gen-map-dense");
    let mut cmd = patrol();
    cmd.args(["gen-map", "--rows", "20", "--cols", "20", "--density", "1.0", "--seed", "5", "--out"])
        .arg(dir.join("dense.map"));
    let output = run_ok(&mut cmd);
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("nodes 400 edges 760"), "summary was: {stdout}");
}

#[test]
fn simulate_greedy_best_has_zero_entropy_and_writes_artifacts() {
    let dir = tmp("simulate-greedy");
    let map = gen_map(&dir, &["--rows", "10", "--cols", "10"]);
    let out_dir = dir.join("out");
    let output = run_ok(patrol().args([
        "simulate",
        "--map",
        map.to_str().unwrap(),
        "--policy",
        "greedy",
        "--start-mode",
        "best",
        "--agents",
        "3",
        "--num-runs",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8(output.stdout).unwrap();
    let rows = patrol::metrics::parse_table(&stdout).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].policy, "greedy");
    assert_eq!(rows[0].entropy, 0.0);

    for name in ["config.txt", "report.txt", "table.txt", "heatmap.txt"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    for run in 0..5 {
        let log_text =
            std::fs::read_to_string(out_dir.join(format!("episode_{run:04}.eplog"))).unwrap();
        let log = patrol::env::EpisodeLog::from_text(&log_text).unwrap();
        assert_eq!(log.num_agents(), 3);
        assert_eq!(log.horizon(), 50);
    }
    let report_text = std::fs::read_to_string(out_dir.join("report.txt")).unwrap();
    let report = patrol::metrics::CoverageReport::from_text(&report_text).unwrap();
    assert_eq!(report.entropy, 0.0);
    assert_eq!(report.num_runs, 5);
}

#[test]
fn simulate_single_random_run_writes_one_log() {
    let dir = tmp("simulate-single");
    let map = gen_map(&dir, &["--rows", "6", "--cols", "6", "--hotspots", "1"]);
    let out_dir = dir.join("out");
    run_ok(patrol().args([
        "simulate",
        "--map",
        map.to_str().unwrap(),
        "--policy",
        "random",
        "--agents",
        "2",
        "--num-runs",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    assert!(out_dir.join("episode_0000.eplog").exists());
    assert!(!out_dir.join("episode_0001.eplog").exists());
}

#[test]
fn corrupt_policy_file_is_data_error_exit_3() {
    let dir = tmp("bad-policy");
    let map = gen_map(&dir, &["--rows", "6", "--cols", "6", "--hotspots", "1"]);
    let policy = dir.join("policy.txt");
    // A plausible file with the wrong schema hash.
    let text = patrol::learner::PolicyParams::zeros()
        .to_text()
        .replace(
            &format!("{:016x}", patrol::learner::feature_schema_hash()),
            "00000000deadbeef",
        );
    std::fs::write(&policy, text).unwrap();
    let out = patrol()
        .args([
            "simulate",
            "--map",
            map.to_str().unwrap(),
            "--policy",
            &format!("trained:{}", policy.display()),
            "--num-runs",
            "1",
            "--agents",
            "1",
            "--out",
        ])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("schema"), "stderr: {stderr}");
}

#[test]
fn train_zero_updates_yields_loadable_policy_and_empty_curve() {
    let dir = tmp("train-zero");
    let map = gen_map(&dir, &["--rows", "6", "--cols", "6", "--hotspots", "1"]);
    let out_dir = dir.join("out");
    run_ok(patrol().args([
        "train",
        "--map",
        map.to_str().unwrap(),
        "--agents",
        "2",
        "--total-updates",
        "0",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let params = patrol::learner::PolicyParams::load(&out_dir.join("policy.txt")).unwrap();
    assert_eq!(params, patrol::learner::PolicyParams::zeros());
    let curve =
        patrol::learner::parse_curve(&std::fs::read_to_string(out_dir.join("curve.txt")).unwrap())
            .unwrap();
    assert!(curve.is_empty());
}

#[test]
fn train_writes_curve_records_and_is_deterministic() {
    let dir = tmp("train-det");
    let map = gen_map(&dir, &["--rows", "6", "--cols", "6", "--hotspots", "1"]);
    let args = |out: &Path| {
        vec![
            "train".to_string(),
            "--map".into(),
            map.display().to_string(),
            "--agents".into(),
            "2".into(),
            "--horizon".into(),
            "12".into(),
            "--episodes-per-update".into(),
            "4".into(),
            "--total-updates".into(),
            "6".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    run_ok(patrol().args(args(&out_a)));
    run_ok(patrol().args(args(&out_b)));
    // config.txt echoes the output directory, which legitimately differs
    // between the two runs; the produced artifacts must not.
    for name in ["policy.txt", "curve.txt"] {
        assert_eq!(
            std::fs::read(out_a.join(name)).unwrap(),
            std::fs::read(out_b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
    let curve =
        patrol::learner::parse_curve(&std::fs::read_to_string(out_a.join("curve.txt")).unwrap())
            .unwrap();
    assert_eq!(curve.len(), 6);
}

#[test]
fn evaluate_compares_policies_and_round_trips_table() {
    let dir = tmp("evaluate");
    let map = gen_map(&dir, &["--rows", "12", "--cols", "12"]);
    let out_dir = dir.join("out");
    let output = run_ok(patrol().args([
        "evaluate",
        "--map",
        map.to_str().unwrap(),
        "--policy",
        "greedy",
        "--policy",
        "random",
        "--start-mode",
        "random",
        "--agents",
        "4",
        "--num-runs",
        "40",
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8(output.stdout).unwrap();
    let rows = patrol::metrics::parse_table(&stdout).unwrap();
    assert_eq!(rows.len(), 2);
    let w3 = |policy: &str| {
        rows.iter().find(|r| r.policy == policy).unwrap().coverage[0].1
    };
    assert!(
        w3("greedy") >= w3("random"),
        "greedy {} should cover at least as much as random {}",
        w3("greedy"),
        w3("random")
    );
    // The written table parses identically.
    let table_text = std::fs::read_to_string(out_dir.join("table.txt")).unwrap();
    assert_eq!(patrol::metrics::parse_table(&table_text).unwrap().len(), 2);
}

#[test]
fn evaluate_with_single_policy_emits_single_row() {
    let dir = tmp("evaluate-single");
    let map = gen_map(&dir, &["--rows", "6", "--cols", "6", "--hotspots", "1"]);
    let output = run_ok(patrol().args([
        "evaluate",
        "--map",
        map.to_str().unwrap(),
        "--policy",
        "greedy-raw",
        "--agents",
        "2",
        "--num-runs",
        "3",
        "--out",
    ]).arg(dir.join("out")));
    let rows =
        patrol::metrics::parse_table(&String::from_utf8(output.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].policy, "greedy-raw");
}

#[test]
fn config_file_feeds_a_run_and_flags_override_it() {
    let dir = tmp("config-file");
    let map = gen_map(&dir, &["--rows", "6", "--cols", "6", "--hotspots", "1"]);
    let config_path = dir.join("run.conf");
    std::fs::write(
        &config_path,
        format!(
            "map {}\nagents 2\nnum_runs 3\npolicy random\nseed 5\n",
            map.display()
        ),
    )
    .unwrap();
    let out_dir = dir.join("out");
    run_ok(patrol().args([
        "simulate",
        "--config",
        config_path.to_str().unwrap(),
        "--num-runs",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    // Flag overrode the file's num_runs.
    assert!(out_dir.join("episode_0001.eplog").exists());
    assert!(!out_dir.join("episode_0002.eplog").exists());
    // The echoed config reflects the effective values.
    let echoed = std::fs::read_to_string(out_dir.join("config.txt")).unwrap();
    assert!(echoed.contains("num_runs 2"));
    assert!(echoed.contains("agents 2"));
    assert!(echoed.contains("policy random"));
}

#[test]
fn jobs_flag_does_not_change_outputs() {
    let dir = tmp("jobs-det");
    let map = gen_map(&dir, &["--rows", "8", "--cols", "8", "--hotspots", "1"]);
    let run = |out: &Path, jobs: &str| {
        run_ok(patrol().args([
            "simulate",
            "--map",
            map.to_str().unwrap(),
            "--policy",
            "random",
            "--agents",
            "2",
            "--num-runs",
            "12",
            "--seed",
            "4",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]));
    };
    let serial = dir.join("serial");
    let parallel = dir.join("parallel");
    run(&serial, "1");
    run(&parallel, "4");
    for run_idx in 0..12 {
        let name = format!("episode_{run_idx:04}.eplog");
        let a = std::fs::read(serial.join(&name)).unwrap();
        let b = std::fs::read(parallel.join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs under --jobs 4");
    }
    // The echoed config records the jobs value, so strip it before
    // comparing the rest of the artifacts.
    for name in ["report.txt", "table.txt", "heatmap.txt"] {
        assert_eq!(
            std::fs::read(serial.join(name)).unwrap(),
            std::fs::read(parallel.join(name)).unwrap(),
            "{name} differs under --jobs 4"
        );
    }
}
