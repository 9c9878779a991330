use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mol"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.txt");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn run_then_compare_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "env = fig1\nseeds = 0,1\nmax_frames = 4000\neval_every = 1000\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = mol(&["run", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(out.join("summary.csv").exists());
    }
    let o = mol(&[
        "compare",
        a.join("summary.csv").to_str().unwrap(),
        b.join("summary.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("checkpoint,frames,mean_a,mean_b,ratio_pct"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "env = fig1\nbogus = 3\n");
    let o = mol(&["run", &cfg, "--out", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn missing_files_exit_with_two() {
    let o = mol(&["compare", "/nonexistent/a.csv", "/nonexistent/b.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn untrained_report_is_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "env = keydoor\nmode = mol\nseeds = 0\nmax_frames = 50\neval_every = 50\n",
    );
    let out = dir.path().join("r");
    assert_eq!(
        mol(&["run", &cfg, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let o = mol(&["report-importance", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no successful trajectory"));
}

#[test]
fn bad_thresholds_exit_with_one() {
    let o = mol(&["report-importance", "/tmp", "--thresholds", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}
