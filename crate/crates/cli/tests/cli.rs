use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pulseqfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulseqfm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn missing_experiment_key_is_a_config_error() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("run.toml");
    let out = root.path().join("out");
    fs::write(&cfg, "[general]\nseeds = 2\n").unwrap();
    let o = pulseqfm(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`experiment`"));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
}

#[test]
fn unknown_ansatz_is_a_config_error() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("out");
    let o = pulseqfm(&["coeffs", "--ansatz", "nope", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
    assert!(!out.exists());
}

#[test]
fn numerical_failure_removes_partial_outputs() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("out");
    // expressibility needs at least 100 state pairs; earlier report stages succeed first
    let o = pulseqfm(&[
        "report", "--ansatz", "basis_rx", "--seeds", "1", "--steps", "2", "--samples", "20",
        "--sigma2-steps", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expressibility"));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(root.path()).unwrap().count(), 0);
}

#[test]
fn config_file_run_is_deterministic() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("run.toml");
    fs::write(
        &cfg,
        "experiment = \"train\"\n[general]\nansatz = \"ry_crz\"\nseeds = 2\nmaster_seed = 7\n[train]\nsteps = 5\n",
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let out = root.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_pulseqfm"))
            .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("PULSEQFM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a", "1"), run("b", "2"));
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    assert_eq!(fa.len(), 2);
    assert_eq!(fa, fb);
    for f in ["final_mse.svg", "training_curves.svg", "manifest.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["config"]["steps"], 5);

    let history = String::from_utf8(fa[0].1.clone()).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("ansatz,mode,seed,step,mse"));
    // 3 modes x 2 seeds x (5 steps + final)
    assert_eq!(lines.count(), 36);
}

#[test]
fn bad_thread_setting_is_rejected() {
    let root = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pulseqfm"))
        .args(["coeffs", "--out", root.path().join("o").to_str().unwrap()])
        .env("PULSEQFM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
