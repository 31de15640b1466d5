use std::path::Path;
use std::process::{Command, Output};

fn qtrack(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtrack"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TWO_VARIABLES: &str = "n 2\nlin 0 1\nlin 1 -2\nquad 0 1 3\n";

#[test]
fn brute_force_on_two_variable_qubo() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("two.qubo"), TWO_VARIABLES).unwrap();
    let o = qtrack(&["solve", "--qubo", "two.qubo", "--solver", "brute"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("bits 01\n"), "{out}");
    assert!(out.contains("energy -2.0\n"), "{out}");
}

#[test]
fn anneal_and_vqe_agree_on_two_variable_qubo() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("two.qubo"), TWO_VARIABLES).unwrap();
    let o = qtrack(&["solve", "--qubo", "two.qubo", "--solver", "anneal", "--seed", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("bits 01\n"));

    let o = qtrack(
        &[
            "solve", "--qubo", "two.qubo", "--solver", "vqe", "--alpha", "1", "--reps", "0",
            "--trace-out", "trace.csv", "--set", "vqe.total_budget=200", "--set", "vqe.reps=[0]",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("bits 01\n"), "{}", stdout(&o));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,stage,cvar_cost\n"));
    assert_eq!(trace.lines().count(), 202);
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = qtrack(&["sweep-vqe", "--seed", "1", "--config", "nowhere/cfg.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere/cfg.toml"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["sweep-size"],
        vec!["solve", "--qubo", "x", "--solver", "magic"],
        vec!["generate", "--density", "3", "--out", "h.csv", "--bogus"],
        vec!["generate", "--density", "3", "--out", "h.csv", "--set", "detector.nope=1"],
        vec!["frobnicate"],
    ] {
        let o = qtrack(&args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert!(qtrack(&["--help"], dir.path()).status.success());
}

#[test]
fn capacity_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("big.qubo"), "n 30\nlin 0 -1\n").unwrap();
    let o = qtrack(&["solve", "--qubo", "big.qubo", "--solver", "brute"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn generate_build_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = qtrack(&["generate", "--density", "6", "--seed", "4", "--out", "hits.csv"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = qtrack(
        &["build-qubo", "--hits", "hits.csv", "--out", "ev.qubo", "--triplets-out", "trip.csv"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.join("trip.csv").exists());
    let o = qtrack(&["solve", "--qubo", "ev.qubo", "--solver", "anneal", "--seed", "1"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("energy -")), "{}", stdout(&o));
}

#[test]
fn sweeps_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.toml"),
        "[size_sweep]\ndensities = [8]\nslice_sizes = [4, 8]\nn_events = 2\n\
         [vqe]\ndensity = 8\nslice_sizes = [4]\nalphas = [0.5]\nreps = [1]\nnoise = [true]\n\
         shots = 32\nstage_budget = 8\ntotal_budget = 24\nn_slices = 2\nn_seeds = 2\n",
    )
    .unwrap();
    for (cmd, stem) in [("sweep-vqe", "vqe_sweep"), ("sweep-size", "size_sweep")] {
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let o = qtrack(&[cmd, "--seed", "77", "--config", "cfg.toml", "--out-dir", run], d);
            assert!(o.status.success(), "{}", stderr(&o));
            outputs.push(std::fs::read(d.join(run).join(format!("{stem}.csv"))).unwrap());
            assert!(d.join(run).join(format!("{stem}.timing.csv")).exists());
        }
        assert_eq!(outputs[0], outputs[1], "{cmd}");
        assert!(String::from_utf8_lossy(&outputs[0]).starts_with("# qtrack-sweep v1\n"));
    }
    let o = qtrack(&["sweep-vqe", "--seed", "78", "--config", "cfg.toml", "--out-dir", "c"], d);
    assert!(o.status.success());
}

#[test]
fn generate_falls_back_to_master_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.toml"), "master_seed = 9\n").unwrap();
    assert!(qtrack(&["generate", "--density", "5", "--seed", "9", "--out", "a.csv"], d).status.success());
    assert!(qtrack(&["generate", "--density", "5", "--config", "cfg.toml", "--out", "b.csv"], d).status.success());
    assert_eq!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("b.csv")).unwrap());
}
