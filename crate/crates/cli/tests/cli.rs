use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qflow"))
        .args(args)
        .current_dir(dir)
        .env_remove("QFLOW_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_VERIFY: &str = "[verify]\nn = 4\nfields = 20\nperp_fields = 50\n";

#[test]
fn verify_is_deterministic_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", SMALL_VERIFY);
    let a = qflow(dir.path(), &["verify", "--config", &cfg, "--seed", "7", "--out", "a"]);
    let b = qflow(dir.path(), &["verify", "--config", &cfg, "--seed", "7", "--out", "b"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
    assert_eq!(fs::read(dir.path().join("a/verify.jsonl")).unwrap(), fs::read(dir.path().join("b/verify.jsonl")).unwrap());
    assert!(dir.path().join("a/run.log").exists());
    let c = qflow(dir.path(), &["verify", "--config", &cfg, "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn corrupted_webster_curvature_fails_bochner() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", &format!("{SMALL_VERIFY}w0 = 2.2\n"));
    let out = qflow(dir.path(), &["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bochner"));
}

#[test]
fn flow_sphere_preset_converges_with_rate_32() {
    let dir = tempfile::tempdir().unwrap();
    let out = qflow(dir.path(), &["flow", "--out", "run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("run/summary.json"));
    assert_eq!(s["status"], "converged");
    let slope = s["q_linf_log_slope"].as_f64().unwrap();
    assert!((slope + 32.0).abs() < 0.02 * 32.0, "{slope}");
    assert!(s["equilibrium_residual"].as_f64().unwrap() <= 1e-9);
    let csv = fs::read_to_string(dir.path().join("run/flow.csv")).unwrap();
    assert!(csv.starts_with("t,energy,dissipation"));
    let snap = json(&dir.path().join("run/snapshot.json"));
    assert_eq!(snap["version"], 1);
    assert_eq!(snap["N"], 6);
}

#[test]
fn flow_kernel_drift_reports_linear_law() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.cfg", "[flow]\npreset = kernel-drift\nn = 4\nt_end = 0.3\n");
    let out = qflow(dir.path(), &["flow", "--config", &cfg, "--out", "run"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&dir.path().join("run/summary.json"));
    assert_eq!(s["kernel_drift"], true);
    assert!(s["kernel_law_residual"].as_f64().unwrap() < 1e-8);
    assert!(String::from_utf8_lossy(&out.stdout).contains("kernel drift"));
}

#[test]
fn flow_with_zero_duration_emits_initial_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.cfg", "[flow]\nn = 3\nt_end = 0\n");
    let out = qflow(dir.path(), &["flow", "--config", &cfg, "--out", "run"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("run/flow.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[flow]\nn = 4\nstop_on_convergence = false\nrecord_dt = 0.05\n";
    let full = write(dir.path(), "full.cfg", &format!("{base}t_end = 0.6\n"));
    let half = write(dir.path(), "half.cfg", &format!("{base}t_end = 0.3\n"));
    assert_eq!(qflow(dir.path(), &["flow", "--config", &full, "--out", "full"]).status.code(), Some(0));
    assert_eq!(qflow(dir.path(), &["flow", "--config", &half, "--out", "half"]).status.code(), Some(0));
    let resumed = qflow(dir.path(), &["flow", "--config", &full, "--resume", "half/snapshot.json", "--out", "resumed"]);
    assert_eq!(resumed.status.code(), Some(0), "{}", String::from_utf8_lossy(&resumed.stderr));
    let a = json(&dir.path().join("full/snapshot.json"));
    let b = json(&dir.path().join("resumed/snapshot.json"));
    assert_eq!(a["t"], b["t"]);
    let (ma, mb) = (a["modes"].as_array().unwrap(), b["modes"].as_array().unwrap());
    assert_eq!(ma.len(), mb.len());
    for (x, y) in ma.iter().zip(mb) {
        let (x, y) = (x["coeff"].as_f64().unwrap(), y["coeff"].as_f64().unwrap());
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
    let rows = |p: &str| fs::read_to_string(dir.path().join(p)).unwrap().lines().count();
    assert_eq!(rows("resumed/flow.csv"), 1 + 7);
}

#[test]
fn numerical_overflow_aborts_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.cfg", "[flow]\nn = 2\nlambda0 = 1 1 0 plus 500\n");
    let out = qflow(dir.path(), &["flow", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn spectrum_examples() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.cfg", "[spectrum]\noperator = paneitz\nn = 4\nk = 4\n");
    let out = qflow(dir.path(), &["spectrum", "--config", &p]);
    assert_eq!(out.status.code(), Some(0));
    let d: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ev: Vec<f64> = d["spectrum"]["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in ev.iter().zip([16.0, 16.0, 16.0, 48.0]) {
        assert!((got - want).abs() < 1e-9, "{ev:?}");
    }

    let k = write(dir.path(), "k.cfg", "[spectrum]\noperator = neg-kohn\nn = 2\nk = 1\n");
    let d: Value = serde_json::from_slice(&qflow(dir.path(), &["spectrum", "--config", &k]).stdout).unwrap();
    assert!((d["smallest_nonzero"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    write(dir.path(), "m.txt", "0 0 0\n0 3 0\n0 0 5\n");
    let m = write(dir.path(), "m.cfg", "[spectrum]\noperator = matrix-file\nmatrix = m.txt\n");
    let out = qflow(dir.path(), &["spectrum", "--config", &m, "--out", "s"]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&dir.path().join("s/spectrum.json"));
    let ev: Vec<f64> = d["spectrum"]["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(ev.len(), 2);
    assert!((ev[0] - 3.0).abs() < 1e-9 && (ev[1] - 5.0).abs() < 1e-9);

    let bad = write(dir.path(), "b.cfg", "[spectrum]\noperator = matrix-file\n");
    assert_eq!(qflow(dir.path(), &["spectrum", "--config", &bad]).status.code(), Some(2));
}

#[test]
fn moser_fits_envelope_and_rejects_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.cfg", "[moser]\nn = 3\ntrain = 30\nheld_out = 30\n");
    let out = qflow(dir.path(), &["moser", "--config", &cfg, "--out", "m"]);
    let env = json(&dir.path().join("m/moser.json"));
    for k in ["kappa", "nu", "log_c"] {
        assert!(env[k].as_f64().unwrap().is_finite());
    }
    let report: Value = serde_json::from_str(fs::read_to_string(dir.path().join("m/moser.jsonl")).unwrap().lines().last().unwrap()).unwrap();
    let expected = if report["pass"].as_bool().unwrap() { 0 } else { 1 };
    assert_eq!(out.status.code(), Some(expected), "{}", String::from_utf8_lossy(&out.stderr));
    let empty = write(dir.path(), "e.cfg", "[moser]\ntrain = 0\n");
    assert_eq!(qflow(dir.path(), &["moser", "--config", &empty]).status.code(), Some(2));
}

#[test]
fn heisenberg_suite_and_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.cfg", "[heisenberg]\ncorpus = bump a=0.8; poly-bump c0=1 cx=0.5 a=0.9\nbase = 8\nsamples = 2000\n");
    let out = qflow(dir.path(), &["heisenberg", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| serde_json::from_str::<Value>(l).unwrap()["pass"] == true));
    assert!(text.contains("cohn_lu_constant"));
    let empty = write(dir.path(), "e.cfg", "[heisenberg]\ncorpus =\n");
    assert_eq!(qflow(dir.path(), &["heisenberg", "--config", &empty]).status.code(), Some(2));
    let wide = write(dir.path(), "w.cfg", "[heisenberg]\ncorpus = bump a=2\n");
    assert_eq!(qflow(dir.path(), &["heisenberg", "--config", &wide]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.cfg", "[flow]\nbogus = 1\n");
    assert_eq!(qflow(dir.path(), &["flow", "--config", &unknown]).status.code(), Some(2));
    let syntax = write(dir.path(), "s.cfg", "[flow]\nno equals sign\n");
    assert_eq!(qflow(dir.path(), &["flow", "--config", &syntax]).status.code(), Some(2));
    assert_eq!(qflow(dir.path(), &["flow", "--config", "missing.cfg"]).status.code(), Some(2));
    assert_eq!(qflow(dir.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(qflow(dir.path(), &["verify", "--resume", "x.json"]).status.code(), Some(2));
    let preset = write(dir.path(), "p.cfg", "[flow]\npreset = round\n");
    assert_eq!(qflow(dir.path(), &["flow", "--config", &preset]).status.code(), Some(2));
}

#[test]
fn print_config_is_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "# x\n[verify]\nseed=3\nn = 4\n[flow]\nt_end = 0.5\n");
    let out = qflow(dir.path(), &["verify", "--config", &cfg, "--print-config"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "[flow]\nt_end = 0.5\n\n[verify]\nn = 4\nseed = 3\n");
    let again = write(dir.path(), "d.cfg", &text);
    let out2 = qflow(dir.path(), &["verify", "--config", &again, "--print-config"]);
    assert_eq!(String::from_utf8(out2.stdout).unwrap(), text);
}

#[test]
fn cache_directory_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", SMALL_VERIFY);
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_qflow"))
            .args(["verify", "--config", &cfg])
            .current_dir(dir.path())
            .env("QFLOW_CACHE_DIR", dir.path().join("cache"))
            .output()
            .unwrap()
    };
    let a = run();
    assert!(dir.path().join("cache/space-N4-order8.json").exists());
    let b = run();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, qflow(dir.path(), &["verify", "--config", &cfg]).stdout);
}
