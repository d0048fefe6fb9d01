use std::path::Path;
use std::process::{Command, Output};

fn emlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emlab")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn missing_config_leaves_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = emlab(&["run", "nope.cfg", "--output", "out"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.cfg"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn invalid_domain_is_reported_before_any_write() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "bad.cfg",
        "experiment = regime_check\nalpha = 1\nbeta = 1\nhorizon = 100\nsteps = 200\noutput = out\n",
    );
    let out = emlab(&["run", "bad.cfg"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));
    assert!(!tmp.path().join("out").exists());

    write(tmp.path(), "unknown.cfg", "experiment = fig9\n");
    let out = emlab(&["run", "unknown.cfg"], tmp.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment `fig9`"));
}

#[test]
fn fig1_writes_three_cells_and_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "fig1.cfg", "experiment = fig1\npaths = 200\nrecord_every = 1000\noutput = out\n");
    let out = emlab(&["run", "fig1.cfg", "--seed", "3"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for x0 in ["1", "5", "10"] {
        let csv = std::fs::read_to_string(tmp.path().join(format!("out/fig1_x0_{x0}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,E|Y_k|^2,q50,q90,overflow_count");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 11);
        assert!(rows.last().unwrap().starts_with("10000,"));
        assert!(!csv.contains("inf"));
    }
    let manifest = std::fs::read_to_string(tmp.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 3\n"));
    assert!(manifest.contains("experiment = fig1\n"));
    assert!(manifest.contains("wall_time_s = "));
    assert!(manifest.contains("version = "));
}

#[test]
fn seed_override_changes_output_and_env_threads_is_honoured() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.cfg",
        "experiment = custom\nnoise = pareto\nalpha = 1.5\nhorizon = 1\nsteps = 20\nx0 = 0.5\npaths = 300\n",
    );
    let run = |seed: &str, dir: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_emlab"))
            .args(["run", "c.cfg", "--seed", seed, "--output", dir])
            .env("EMLAB_THREADS", "2")
            .current_dir(tmp.path())
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read_to_string(tmp.path().join(dir).join("custom.csv")).unwrap()
    };
    let a = run("1", "a");
    assert_eq!(a, run("1", "b"));
    assert_ne!(a, run("2", "c"));
    let manifest = std::fs::read_to_string(tmp.path().join("a/manifest.txt")).unwrap();
    assert!(manifest.contains("threads = 2\n"));
}

#[test]
fn regime_command_prints_the_condition_table() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "r.cfg",
        "experiment = regime_check\nalpha = 1\nbeta = 0.5\nhorizon = 100\nsteps = 200\nn_max = 150\n",
    );
    let out = emlab(&["regime", "r.cfg"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("K = 1.117428"), "{text}");
    assert_eq!(text.matches("pass").count(), 4, "{text}");
    assert!(!tmp.path().join("out").exists());

    write(tmp.path(), "f.cfg", "experiment = fig2\n");
    assert!(!emlab(&["regime", "f.cfg"], tmp.path()).status.success());
}

#[test]
fn unwritable_output_fails() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "blocker", "");
    write(
        tmp.path(),
        "r.cfg",
        "experiment = regime_check\nalpha = 1\nbeta = 0.5\nhorizon = 100\nsteps = 200\nn_max = 1\n",
    );
    let out = emlab(&["run", "r.cfg", "--output", "blocker/sub"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("blocker"));
}
