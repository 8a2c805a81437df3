use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qwalk(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("QWALK_OUT_DIR")
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn evolve_writes_full_table_and_manifest() {
    let tmp = TempDir::new().unwrap();
    ok(&qwalk(&["evolve", "--torus", "10,10", "-T", "50"], tmp.path()));
    let rho = read(tmp.path(), "rho.csv");
    assert_eq!(rho.lines().count(), 1 + 51 * 100);
    assert_eq!(rho.lines().next(), Some("t,v,rho"));
    let manifest: serde_json::Value = serde_json::from_str(&read(tmp.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["horizon"], 50);
    assert_eq!(manifest["outputs"][0], "rho.csv");
    assert!(manifest["rng_algorithm"].as_str().unwrap().contains("ChaCha20"));

    let zero = TempDir::new().unwrap();
    ok(&qwalk(&["evolve", "--cycle", "4", "-T", "0"], zero.path()));
    assert_eq!(read(zero.path(), "rho.csv").lines().count(), 1 + 4);
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(&qwalk(&["sample", "--torus", "6,6", "--coin", "grover", "-T", "20", "-M", "20", "--seed", "5"], a.path()));
    let manifest = a.path().join("manifest.json");
    ok(&qwalk(&["sample", "--config", manifest.to_str().unwrap()], b.path()));
    assert_eq!(read(a.path(), "trajectories.csv"), read(b.path(), "trajectories.csv"));
    assert_eq!(read(a.path(), "manifest.json"), read(b.path(), "manifest.json"));
}

#[test]
fn malformed_config_exits_2_with_location() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"graph\": {\"kind\": \"cycle\",\n  \"n\": 4,,\n}").unwrap();
    let out = qwalk(&["evolve", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    let out = qwalk(&["evolve"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_unitary_coin_is_rejected_with_condition() {
    let tmp = TempDir::new().unwrap();
    let s = 1.1 * std::f64::consts::FRAC_1_SQRT_2;
    let block = serde_json::json!([[[s, 0.0], [s, 0.0]], [[s, 0.0], [-s, 0.0]]]);
    let cfg = serde_json::json!({
        "graph": {"kind": "cycle", "n": 4},
        "coin": {"kind": "explicit", "blocks": [block, block, block, block]},
        "horizon": 3
    });
    let path = tmp.path().join("cfg.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let out = qwalk(&["equivalence", "--config", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("column normalization"));

    // accepted without validation, the breach surfaces as a numerical failure
    let mut cfg = cfg;
    cfg["allow_non_unitary"] = true.into();
    std::fs::write(&path, cfg.to_string()).unwrap();
    let out = qwalk(&["equivalence", "--config", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let out = qwalk(&["equivalence", "--config", path.to_str().unwrap(), "--lenient"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(tmp.path().join("report.json").exists());
}

#[test]
fn equivalence_then_sample_from_directory() {
    let eq = TempDir::new().unwrap();
    ok(&qwalk(&["equivalence", "--cycle", "4", "-T", "10"], eq.path()));
    let report: serde_json::Value = serde_json::from_str(&read(eq.path(), "report.json")).unwrap();
    assert!(report["theorem"]["max_propagation_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["theorem"]["steps"], 10);
    let matrices = read(eq.path(), "matrices.csv");
    assert!(matrices.starts_with("t,u,v,p\n0,0,1,0.5\n"));

    let sa = TempDir::new().unwrap();
    ok(&qwalk(&["sample", "--from", eq.path().to_str().unwrap(), "-M", "20"], sa.path()));
    let traj = read(sa.path(), "trajectories.csv");
    assert_eq!(traj.lines().count(), 1 + 20 * 11);

    let verify = Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(["verify", eq.path().to_str().unwrap()])
        .output()
        .unwrap();
    ok(&verify);
}

#[test]
fn binary_and_csv_matrices_load_identically() {
    let csv = TempDir::new().unwrap();
    let bin = TempDir::new().unwrap();
    ok(&qwalk(&["equivalence", "--cycle", "4", "-k", "2", "--phase", "3.14159", "-T", "5"], csv.path()));
    ok(&qwalk(&["equivalence", "--cycle", "4", "-k", "2", "--phase", "3.14159", "-T", "5", "--binary"], bin.path()));
    let (_, a) = qwalk::io::load_sequence(csv.path()).unwrap();
    let (_, b) = qwalk::io::load_sequence(bin.path()).unwrap();
    assert_eq!(a, b);
    assert!(read(csv.path(), "matrices.csv").lines().nth(1).unwrap().contains('|'));
}

#[test]
fn torus_dp_agrees_with_evolve() {
    let dp = TempDir::new().unwrap();
    let ev = TempDir::new().unwrap();
    let args = ["--torus", "4,4", "--coin", "grover", "-T", "30"];
    ok(&qwalk(&[&["torus-dp"][..], &args].concat(), dp.path()));
    ok(&qwalk(&[&["evolve"][..], &args].concat(), ev.path()));
    let parse = |s: String| -> Vec<f64> {
        s.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
    };
    let a = parse(read(dp.path(), "rho.csv"));
    let b = parse(read(ev.path(), "rho.csv"));
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-9));

    let out = qwalk(&["torus-dp", "--torus", "4,4", "-T", "3"], dp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tvd_and_rejection_outputs() {
    let tmp = TempDir::new().unwrap();
    ok(&qwalk(&["tvd", "--torus", "6,6", "--coin", "grover", "--sizes", "10,100", "--t-grid", "2,4"], tmp.path()));
    let tvd = read(tmp.path(), "tvd.csv");
    assert_eq!(tvd.lines().next(), Some("M,t,tvd"));
    assert_eq!(tvd.lines().count(), 5);

    ok(&qwalk(&["rejection", "--complete", "5", "--shift", "arc", "--rejection-length", "3", "--attempts", "1000", "--start", "0,0"], tmp.path()));
    let report: serde_json::Value = serde_json::from_str(&read(tmp.path(), "rejection.json")).unwrap();
    assert_eq!(report["attempts"], 1000);
    assert!(report["accepted"].as_u64().unwrap() <= 1000);

    ok(&qwalk(&["evolve", "--cycle", "4", "--format", "json", "-T", "2"], tmp.path()));
    let rho: serde_json::Value = serde_json::from_str(&read(tmp.path(), "rho.json")).unwrap();
    assert_eq!(rho["rho"].as_array().unwrap().len(), 3);
}

#[test]
fn out_dir_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(["evolve", "--cycle", "5", "-T", "1"])
        .env("QWALK_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    ok(&out);
    assert!(tmp.path().join("rho.csv").exists());
}
