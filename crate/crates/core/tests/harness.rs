use std::fs;

use mol_core::harness::{mean, parse_summary, run_experiment, ExperimentConfig};

fn fig1_config(out: std::path::PathBuf) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(
        "env = fig1\nseeds = 0..2\nmax_frames = 50000\neval_every = 5000\n",
    )
    .unwrap();
    cfg.out = Some(out);
    cfg
}

#[test]
fn three_seeds_write_csvs_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    let result = run_experiment(&fig1_config(first.clone()), 2).unwrap();
    run_experiment(&fig1_config(second.clone()), 1).unwrap();

    for name in ["seed_0.csv", "seed_1.csv", "seed_2.csv", "summary.csv"] {
        let a = fs::read(first.join(name)).unwrap();
        let b = fs::read(second.join(name)).unwrap();
        assert!(!a.is_empty(), "{name} is empty");
        assert_eq!(a, b, "{name} differs between reruns");
    }
    assert!(first.join("config.txt").exists());

    let summary = parse_summary(&fs::read_to_string(first.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(summary.len(), 10);
    for (i, row) in summary.iter().enumerate() {
        let per_seed: Vec<f64> = result.runs.iter().map(|r| r.checkpoints[i]).collect();
        assert!((row.mean - mean(&per_seed)).abs() <= 1e-9);
    }
}

#[test]
fn existing_output_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("stale.txt"), "x").unwrap();
    let mut cfg = fig1_config(dir.path().to_path_buf());
    cfg.max_frames = 1_000;
    cfg.eval_every = 500;
    let err = run_experiment(&cfg, 1).unwrap_err();
    assert!(err.is_config());
}
