use std::path::Path;
use std::process::{Command, Output};

fn qwtopo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwtopo"))
        .args(args)
        .current_dir(dir)
        .env_remove("QWTOPO_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_prints_concatenated_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let out = qwtopo(
        &["simulate", "--topology", "star", "--n", "5", "--times", "0.5,0.6"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<f64> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(values.len(), 10);
    for slice in values.chunks(5) {
        assert!((slice.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn noisy_simulation_depends_on_seed_only() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        stdout(&qwtopo(
            &[
                "simulate",
                "--topology",
                "circle",
                "--n",
                "6",
                "--resources",
                "50",
                "--seed",
                seed,
            ],
            dir.path(),
        ))
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn file_target_matches_generated_target() {
    let dir = tempfile::tempdir().unwrap();
    let sim = qwtopo(
        &[
            "simulate",
            "--topology",
            "line",
            "--n",
            "6",
            "--times",
            "0.5,0.6,1",
            "--output",
            "t.json",
        ],
        dir.path(),
    );
    assert_eq!(sim.status.code(), Some(0));
    let from_file = qwtopo(
        &["reconstruct", "--target", "t.json", "--seed", "21", "--ng", "30"],
        dir.path(),
    );
    let generated = qwtopo(
        &[
            "reconstruct",
            "--topology",
            "line",
            "--n",
            "6",
            "--times",
            "0.5,0.6,1",
            "--seed",
            "21",
            "--ng",
            "30",
        ],
        dir.path(),
    );
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(stdout(&from_file), stdout(&generated));
    let report: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    assert_eq!(report["chromosome"].as_str().unwrap().len(), 15);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| qwtopo(args, dir.path()).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["--version"]), Some(0));
    assert_eq!(code(&["benchmark", "--bogus"]), Some(1));
    assert_eq!(code(&[]), Some(1));
    assert_eq!(code(&["simulate", "--topology", "hexagon", "--n", "5"]), Some(1));
    assert_eq!(code(&["simulate", "--topology", "star"]), Some(1));
    assert_eq!(
        code(&["simulate", "--topology", "star", "--n", "5", "--times", "0.6,0.5"]),
        Some(1)
    );
    assert_eq!(code(&["sweep", "--topology", "star", "--n", "5,6"]), Some(1));
    assert_eq!(code(&["reconstruct", "--target", "missing.json"]), Some(2));
    assert_eq!(
        code(&[
            "benchmark",
            "--topology",
            "star",
            "--n",
            "4",
            "--runs",
            "1",
            "--output",
            "no/such/dir/x.csv"
        ]),
        Some(2)
    );
}

#[test]
fn target_size_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    qwtopo(
        &["simulate", "--topology", "star", "--n", "4", "--output", "t.json"],
        dir.path(),
    );
    let out = qwtopo(&["reconstruct", "--target", "t.json", "--n", "5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match"));
}

#[test]
fn benchmark_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = qwtopo(
        &[
            "benchmark",
            "--topology",
            "star",
            "--n",
            "4-5",
            "--runs",
            "3",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "topology,n,run,seed,success,generations,evaluations,chromosome"
    );
    assert_eq!(lines.len(), 1 + 6);
    assert!(lines[1].starts_with("star,4,0,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("star n=5"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "[experiment]\ntopology = \"circle\"\nn = 5\nruns = 2\n\n[ga]\nng = 3\n",
    )
    .unwrap();
    let out = qwtopo(
        &["--config", "run.toml", "benchmark", "--runs", "4", "--format", "json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let entry = &report["entries"][0];
    assert_eq!(entry["topology"], "circle");
    assert_eq!(entry["runs"].as_array().unwrap().len(), 4);
    assert_eq!(entry["ga"]["max_generations"], 3);

    std::fs::write(dir.path().join("bad.toml"), "[ga]\nunknown = 1\n").unwrap();
    let out = qwtopo(&["--config", "bad.toml", "benchmark"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_dir_variable_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let dest = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qwtopo"))
        .args([
            "sweep",
            "--topology",
            "star",
            "--n",
            "4",
            "--mc-runs",
            "2",
            "--inner-runs",
            "2",
            "--output",
            "s.csv",
        ])
        .current_dir(dir.path())
        .env("QWTOPO_OUTPUT_DIR", dest.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dest.path().join("s.csv")).unwrap();
    assert!(text.starts_with("threshold,N_r,tp,fp,tn,fn,total\n"));
    // two default resource levels times twelve thresholds
    assert_eq!(text.lines().count(), 1 + 24);
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn sweep_defaults_to_short_searches() {
    let dir = tempfile::tempdir().unwrap();
    let out = qwtopo(
        &[
            "sweep",
            "--topology",
            "star",
            "--n",
            "4",
            "--resources",
            "500",
            "--mc-runs",
            "1",
            "--inner-runs",
            "1",
        ],
        dir.path(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["entries"][0]["ga"]["max_generations"], 5);
}
