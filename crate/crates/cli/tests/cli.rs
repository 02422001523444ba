//! End-to-end runs of the `ht` binary.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ht"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("ht_cli_e2e");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gen_then_mean_round_trip() {
    let data = tmp("gauss.txt");
    let status = bin()
        .args(["gen", "--dist", "gaussian", "--d", "2", "--n", "400"])
        .args(["--seed", "5", "--out", data.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(data.exists());
    let summary = std::fs::read_to_string(tmp("gauss.txt.summary.txt")).unwrap();
    assert!(summary.contains("command: gen"));

    let mu = tmp("mu.json");
    let status = bin()
        .args(["mean", "--in", data.to_str().unwrap()])
        .args(["--delta", "0.05", "--norm", "l2", "--out", mu.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&mu).unwrap()).unwrap();
    let coords = parsed["mu"].as_array().unwrap();
    assert_eq!(coords.len(), 2);
    for c in coords {
        assert!(c.as_f64().unwrap().abs() < 0.5);
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let conf = tmp("ht.conf");
    std::fs::write(&conf, "seed 9\nn 50\nd 3\ndist rademacher\n").unwrap();
    let out = tmp("rademacher.txt");
    let status = bin()
        .args(["--config", conf.to_str().unwrap()])
        .args(["--out", out.to_str().unwrap()])
        .args(["gen", "--n", "20"]) // flag overrides the config's n
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "20 3");
    assert!(text.contains("1.0000000000000000e0") || text.contains("-1.0000000000000000e0"));
}

#[test]
fn bench_writes_csv_and_summary() {
    let out = tmp("bench.csv");
    let status = bin()
        .args(["bench", "--task", "mean1d", "--dist", "pareto", "--index", "2.5"])
        .args(["--n", "500", "--deltas", "0.05", "--trials", "40"])
        .args(["--seed", "1", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# ht bench csv schema v1"));
    assert_eq!(csv.lines().count(), 4); // comment + header + 2 estimator rows
    let summary = std::fs::read_to_string(tmp("bench.csv.summary.txt")).unwrap();
    assert!(summary.contains("command: bench"));
    assert!(summary.contains("runtime_ms:"));
}

#[test]
fn sdp_subcommand_solves_problem_file() {
    let mut problem = ht_sdp::SdpProblem::new(vec![2]);
    problem.objective.add(0, 0, 0, 1.0);
    let mut a = ht_sdp::SparseSym::new();
    a.add(0, 0, 0, 1.0);
    a.add(0, 1, 1, 1.0);
    problem.add_constraint(a, 1.0);
    let pfile = tmp("problem.sdp");
    ht_sdp::write_problem(&problem, &pfile).unwrap();

    let sfile = tmp("solution.txt");
    let output = bin()
        .args(["sdp", "--in", pfile.to_str().unwrap(), "--out", sfile.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let (status, objective, gap) = ht_sdp::read_solution(&sfile).unwrap();
    assert_eq!(status, "Optimal");
    assert!((objective - 1.0).abs() < 1e-6);
    assert!(gap < 1e-6);
}

#[test]
fn roadblock_sweep_emits_expected_columns() {
    let out = tmp("sweep.csv");
    let status = bin()
        .args(["roadblock", "sweep", "--d", "4", "--m", "60"])
        .args(["--lambdas", "0.8", "--trials", "2", "--seed", "3"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.contains("lambda,test,accuracy,trials"));
    assert!(csv.contains("0.8,subset,"));
    assert!(csv.contains("0.8,sos,"));
}
