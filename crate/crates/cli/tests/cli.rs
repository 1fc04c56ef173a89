use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const EXAMPLE: &str = "0.4,0.2,0.4\n0,1,0\n0.3,0.3,0.4\n";

fn ctwm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctwm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.csv"), EXAMPLE).unwrap();
    dir
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_example_reaches_consensus_at_two() {
    let dir = workspace();
    let out = ctwm(
        dir.path(),
        &["simulate", "--matrix", "m.csv", "--x0", "1,2,3", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["converged"], true);
    assert_eq!(v["equilibrium"]["classification"], "consensus");
    for x in v["final_state"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 2.0).abs() < 1e-6);
    }
    assert_eq!(read_json(&dir.path().join("o/equilibrium.json")), v);
    let csv = fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x_0,x_1,x_2\n0.0,1.0,2.0,3.0\n"), "{csv:.40}");
    let sidecar = read_json(&dir.path().join("o/trajectory.meta.json"));
    assert_eq!(sidecar["command"], "simulate");
    assert_eq!(sidecar["seed"], 0);
}

#[test]
fn simulate_from_consensus_stops_immediately() {
    let dir = workspace();
    let out = ctwm(
        dir.path(),
        &["simulate", "--matrix", "m.csv", "--x0", "-0.5,-0.5,-0.5", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["final_time"], 0.0);
    assert_eq!(v["final_state"], serde_json::json!([-0.5, -0.5, -0.5]));
}

#[test]
fn simulate_without_convergence_exits_two() {
    let dir = workspace();
    let out = ctwm(
        dir.path(),
        &[
            "simulate", "--matrix", "m.csv", "--x0", "1,2,3", "--t-max", "0.5", "--out", "o",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["converged"], false);
}

#[test]
fn pinned_simulation_reports_target_distance() {
    let dir = workspace();
    let out = ctwm(
        dir.path(),
        &[
            "simulate", "--matrix", "m.csv", "--x0", "1,2,3", "--pinned", "0,1", "--target", "-1", "--t-max", "200",
            "--out", "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["target_distance"].as_f64().unwrap() < 1e-6);
    assert!(v.get("equilibrium").is_none());
}

#[test]
fn missing_matrix_is_an_error() {
    let dir = workspace();
    let out = ctwm(dir.path(), &["simulate", "--matrix", "absent.csv", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("error:") && err.contains("absent.csv") && err.contains("i/o"),
        "{err}"
    );
}

#[test]
fn invalid_matrix_is_an_error() {
    let dir = workspace();
    fs::write(dir.path().join("bad.csv"), "1,-1\n0,1\n").unwrap();
    let out = ctwm(dir.path(), &["cohesion", "--matrix", "bad.csv", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative weight"));
}

#[test]
fn wrong_initial_state_length_is_an_error() {
    let dir = workspace();
    let out = ctwm(
        dir.path(),
        &["simulate", "--matrix", "m.csv", "--x0", "1,2", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cohesion_lists_minimal_sets() {
    let dir = workspace();
    let out = ctwm(dir.path(), &["cohesion", "--matrix", "m.csv", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["minimal_cohesive_sets"], serde_json::json!([[1], [0, 2]]));
    assert_eq!(v["only_global_maximal"], false);
    assert_eq!(v["complete"], true);
    assert_eq!(v["metadata"]["command"], "cohesion");
}

#[test]
fn pinning_finds_two_nodes_and_checks_a_given_set() {
    let dir = workspace();
    let out = ctwm(
        dir.path(),
        &["pinning", "--matrix", "m.csv", "--pinned", "0", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["size"], 2);
    assert_eq!(v["certified_optimal"], true);
    assert_eq!(v["check"]["feasible"], false);
    assert_eq!(v["check"]["uncovered_witness"], serde_json::json!([1]));
}

#[test]
fn generated_network_is_saved_and_seeded() {
    let dir = workspace();
    let args = [
        "cohesion", "--model", "er", "--n", "7", "--p", "0.4", "--seed", "11", "--out", "o",
    ];
    let first = stdout_json(&ctwm(dir.path(), &args));
    let matrix = fs::read_to_string(dir.path().join("o/matrix.json")).unwrap();
    let second = stdout_json(&ctwm(dir.path(), &args));
    assert_eq!(first, second);
    assert_eq!(matrix, fs::read_to_string(dir.path().join("o/matrix.json")).unwrap());
    let saved: Value = serde_json::from_str(&matrix).unwrap();
    assert_eq!(saved["n"], 7);
    assert_eq!(saved["meta"]["metadata"]["seed"], 11);

    let reloaded = stdout_json(&ctwm(
        dir.path(),
        &["cohesion", "--matrix", "o/matrix.json", "--out", "p"],
    ));
    assert_eq!(reloaded["minimal_cohesive_sets"], first["minimal_cohesive_sets"]);
}

#[test]
fn sweep_writes_one_row_per_parameter() {
    let dir = workspace();
    let out = ctwm(
        dir.path(),
        &[
            "sweep",
            "--n",
            "8",
            "--params",
            "0.3,0.5",
            "--replicates",
            "2",
            "--seed",
            "4",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("param,mean,sd,ci95"));
    let meta = read_json(&dir.path().join("o/sweep.meta.json"));
    assert_eq!(meta["seed"], 4);
    assert_eq!(meta["config"]["replicates"], 2);
}

fn write_estimates(path: &Path) {
    let mut text = String::from("experiment,participant,question,round,estimate\n");
    for q in 0..25 {
        let mut x: Vec<f64> = (0..4).map(|p| ((q * 7 + p * 3) % 11) as f64 / 11.0).collect();
        for round in 1..=3 {
            for (p, v) in x.iter().enumerate() {
                text.push_str(&format!("0,{p},{q},{round},{v}\n"));
            }
            let mut sorted = x.clone();
            sorted.sort_by(f64::total_cmp);
            let med = (sorted[1] + sorted[2]) / 2.0;
            x = x.iter().map(|v| 0.4 * v + 0.6 * med).collect();
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_compares_models() {
    let dir = workspace();
    write_estimates(&dir.path().join("d.csv"));
    let out = ctwm(dir.path(), &["fit", "--data", "d.csv", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["holdout"], serde_json::json!({"start": 20, "end": 25}));
    assert_eq!(v["include_self"], true);
    assert_eq!(v["models"].as_array().unwrap().len(), 4);
    let median_fit = &v["fits"][0]["experiments"][0]["participants"][0]["gamma"];
    for g in median_fit.as_array().unwrap() {
        assert!((g.as_f64().unwrap() - 0.4).abs() < 1e-9, "{median_fit}");
    }

    let out = ctwm(
        dir.path(),
        &[
            "fit",
            "--data",
            "d.csv",
            "--exclude-self",
            "--train-count",
            "10",
            "--out",
            "o",
        ],
    );
    let v = stdout_json(&out);
    assert_eq!(v["include_self"], false);
    assert_eq!(v["holdout"]["start"], 10);
}

#[test]
fn fit_rejects_a_holdout_beyond_the_data() {
    let dir = workspace();
    write_estimates(&dir.path().join("d.csv"));
    let out = ctwm(
        dir.path(),
        &["fit", "--data", "d.csv", "--holdout-end", "40", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_fills_in_and_flags_win() {
    let dir = workspace();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    fs::write(
        dir.path().join("cfg/run.toml"),
        "seed = 7\nout = \"res\"\n[simulate]\nmatrix = \"../m.csv\"\nx0 = [1.0, 2.0, 3.0]\nt_max = 0.5\n",
    )
    .unwrap();

    let out = ctwm(dir.path(), &["--config", "cfg/run.toml", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    let v = read_json(&dir.path().join("cfg/res/equilibrium.json"));
    assert_eq!(v["metadata"]["seed"], 7);
    assert_eq!(v["metadata"]["config"]["integrator"]["t_max"], 0.5);

    let out = ctwm(
        dir.path(),
        &["--config", "cfg/run.toml", "simulate", "--t-max", "40", "--seed", "3"],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["metadata"]["seed"], 3);
    assert_eq!(v["metadata"]["config"]["integrator"]["t_max"], 40.0);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = workspace();
    fs::write(dir.path().join("bad.toml"), "sede = 1\n").unwrap();
    let out = ctwm(dir.path(), &["--config", "bad.toml", "cohesion", "--matrix", "m.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
}

#[test]
fn single_replicate_single_parameter_sweep_has_one_row() {
    let dir = workspace();
    let out = ctwm(
        dir.path(),
        &[
            "sweep",
            "--family",
            "ws",
            "--n",
            "10",
            "--params",
            "0.5",
            "--replicates",
            "1",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("0.5,"));
}

#[test]
fn sweep_output_does_not_depend_on_job_count() {
    let dir = workspace();
    let run = |jobs: &str| {
        let out = ctwm(
            dir.path(),
            &[
                "sweep",
                "--n",
                "10",
                "--params",
                "0.2,0.4",
                "--replicates",
                "6",
                "--seed",
                "2",
                "--jobs",
                jobs,
                "--out",
                jobs,
            ],
        );
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    assert_eq!(run("1"), run("4"));
}
