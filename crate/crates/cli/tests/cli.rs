use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mala_lab::output::body_of;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mala-lab"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(sub: &str, config: &Path, seed: u64, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--seed")
        .arg(seed.to_string())
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

const SMALL_TAIL: &str = "[target]\nkind = \"isotropic\"\ndim = 2\nsigma = 1.0\n\n[tail]\ndeltas = [0.5, 0.05]\nn_samples = 20000\n";

#[test]
fn verify_moments_one_dimensional_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("verify-moments", &repo_config("verify-moments.toml"), 42, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("verify-moments.csv"));
    for lemma in ["grad-norm", "quadratic-form", "quadratic-form-at-qt", "grad-diff-q0", "grad-diff-qeta"] {
        let rows: Vec<&str> = body_of(&csv).lines().filter(|l| l.starts_with(&format!("{lemma},"))).collect();
        assert_eq!(rows.len(), 4, "{lemma}");
        assert!(rows.iter().all(|r| r.contains(",PASS,")), "{lemma}");
    }
    assert!(csv.contains("# failed: 0\n"));
    assert!(dir.path().join("verify-moments.md").exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("stepsize = 0.1\n{SMALL_TAIL}"));
    let out = run("acceptance-tail", &cfg, 1, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stepsize"));
}

#[test]
fn missing_seed_or_physics_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tail.toml", SMALL_TAIL);
    let out = bin().args(["acceptance-tail", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let no_n = write_config(dir.path(), "no_n.toml", &SMALL_TAIL.replace("n_samples = 20000\n", ""));
    assert_eq!(run("acceptance-tail", &no_n, 1, dir.path(), &[]).status.code(), Some(2));
    let wrong = write_config(dir.path(), "wrong.toml", &format!("experiment = \"sample\"\n{SMALL_TAIL}"));
    assert_eq!(run("acceptance-tail", &wrong, 1, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn reruns_and_worker_counts_give_identical_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tail.toml", SMALL_TAIL);
    let mut bodies = Vec::new();
    for (i, workers) in ["1", "8", "8"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = run("acceptance-tail", &cfg, 7, &out_dir, &["--workers", workers]);
        assert_eq!(out.status.code(), Some(0));
        bodies.push(body_of(&read(out_dir.join("acceptance-tail.csv"))).to_string());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[1], bodies[2]);
    let other = run("acceptance-tail", &cfg, 8, &dir.path().join("other"), &[]);
    assert_eq!(other.status.code(), Some(0));
    // a different seed must change at least the sampled rows' details or estimates
    let body = read(dir.path().join("other/acceptance-tail.csv"));
    assert!(body.contains("# seed: 8\n"));
}

#[test]
fn oversized_step_fails_tail_and_report_marks_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tail.toml", &format!("{SMALL_TAIL}eta = 2.5\n"));
    let out = run("acceptance-tail", &cfg, 3, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let csv_path = dir.path().join("acceptance-tail.csv");
    let summary = bin().arg("report").arg(&csv_path).output().unwrap();
    assert_eq!(summary.status.code(), Some(0));
    let text = String::from_utf8(summary.stdout).unwrap();
    assert!(text.contains("| 0.05 |") && text.contains("| FAIL |"), "{text}");
}

#[test]
fn report_edge_cases() {
    let empty = bin().arg("report").output().unwrap();
    assert_eq!(empty.status.code(), Some(0));
    assert!(empty.stdout.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let foreign = write_config(dir.path(), "foreign.csv", "x,y\n1,2\n");
    assert_eq!(bin().arg("report").arg(&foreign).output().unwrap().status.code(), Some(2));
}

#[test]
fn mixing_scan_summary_has_slope_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mix.toml",
        "[mixing]\ndims = [2, 4]\neps = 0.2\nm_target = 7.38905609893065\nreplicas = 10000\nresamples = 200\n",
    );
    let out = run("mixing-scan", &cfg, 5, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("mixing-scan.csv"));
    assert!(csv.contains("dim,eta,tau_hat,predicted_n,predicted_n_naive"));
    assert!(csv.contains("# slope: "));
    let summary = bin().arg("report").arg(dir.path().join("mixing-scan.csv")).output().unwrap();
    let text = String::from_utf8(summary.stdout).unwrap();
    assert!(text.contains("fitted slope"));
    assert!(text.contains("trace-aware 1, naive 1.5"));
    assert!(text.contains("| 2 |") && text.contains("| 4 |"));
}

#[test]
fn sample_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sample", &repo_config("sample.toml"), 9, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let traj = read(dir.path().join("trajectory_3.csv"));
    let body = body_of(&traj);
    assert!(body.starts_with("step,q_1,q_2,q_3,q_4,accepted\n"));
    assert_eq!(body.lines().count(), 1 + 101);

    let bin_dir = dir.path().join("bin");
    let cfg = write_config(
        dir.path(),
        "bin.toml",
        "[target]\nkind = \"cosine\"\ndim = 2\na = 0.3\n[policy]\nkind = \"manual\"\neta = 0.5\n[sample]\nn_steps = 50\nlazy = false\nq0 = [0.1, 0.2]\nformat = \"binary\"\n",
    );
    assert_eq!(run("sample", &cfg, 9, &bin_dir, &[]).status.code(), Some(0));
    let bytes = std::fs::read(bin_dir.join("trajectory_0.bin")).unwrap();
    let (d, rows) = mala_core::trajectory::read_binary(&bytes[..]).unwrap();
    assert_eq!((d, rows.len()), (2, 51));
    assert_eq!(rows[0], vec![0.1, 0.2]);

    let no_start = write_config(dir.path(), "nostart.toml", &read(cfg.clone()).replace("q0 = [0.1, 0.2]\n", ""));
    assert_eq!(run("sample", &no_start, 9, &bin_dir, &[]).status.code(), Some(2));
}

#[test]
fn finite_chain_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["conductance", "lovasz-check"] {
        let out = run(sub, &repo_config(&format!("{sub}.toml")), 0, dir.path(), &[]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
    }
    let csv = read(dir.path().join("conductance.csv"));
    assert!(body_of(&csv).starts_with("s,phi_s,bound_check\n"));
    let near_half = write_config(
        dir.path(),
        "c.toml",
        &read(repo_config("conductance.toml")).replace("0.2]", "0.49]"),
    );
    assert_eq!(run("conductance", &near_half, 0, dir.path(), &[]).status.code(), Some(0));
    let half = write_config(
        dir.path(),
        "c.toml",
        &read(repo_config("conductance.toml")).replace("0.2]", "0.5]"),
    );
    assert_eq!(run("conductance", &half, 0, dir.path(), &[]).status.code(), Some(2));
}
