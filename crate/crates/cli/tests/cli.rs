use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cmg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares a produced file with its committed copy; `UPDATE_GOLDEN=1` rewrites it.
fn assert_golden(produced: &Path, name: &str) {
    let got = std::fs::read_to_string(produced).unwrap();
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(got, want, "{name} differs from the committed golden file");
}

#[test]
fn verify_cmg_on_the_round_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmg(&["verify-cmg", "--space", "sphere", "--c", "1", "--n", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_golden(&dir.path().join("verify-cmg.json"), "verify-cmg.json");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("verify-cmg.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["verdict"]["is_cmg"], true);
    assert_eq!(report["schema"], "cmg-report/1");
}

#[test]
fn index_of_the_plane_saddle() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmg(&["index", "--space", "euclidean", "--germ", "saddle2d"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_golden(&dir.path().join("index.json"), "index.json");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("index.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["index"]["index"], -1);
}

#[test]
fn osc_on_a_product_of_spheres() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmg(&["osc", "--space", "product:s2xs2", "--point", "0.1,0.2,0.1,0.3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_golden(&dir.path().join("osc.json"), "osc.json");
    assert_golden(&dir.path().join("osc.csv"), "osc.csv");
    let csv = std::fs::read_to_string(dir.path().join("osc.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let osc: f64 = row[6].parse().unwrap();
    assert!((osc - 1.0).abs() < 1e-6);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["sweep-qc", "--space", "sphere", "--samples", "2000"];
    assert_eq!(cmg(&args, a.path()).status.code(), Some(0));
    assert_eq!(cmg(&[&args[..], &["--threads", "1"]].concat(), b.path()).status.code(), Some(0));
    for f in ["sweep-qc.json", "sweep-qc.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let csv = std::fs::read_to_string(a.path().join("sweep-qc.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "param,kappa_proxy,k_max,k_min,osc,refined");
}

#[test]
fn exit_codes_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmg(&["verify-cmg", "--space", "torus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("verify-cmg.json")).unwrap()).unwrap();
    assert_eq!(report["error"]["kind"], "parse");

    let out = cmg(&["osc", "--space", "sphere", "--point", "1,2"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("osc.json")).unwrap()).unwrap();
    assert_eq!(report["error"]["kind"], "domain");

    // zero tolerances turn rounding-level defects into listed failures
    let out = cmg(&["verify-cmg", "--space", "sphere", "--tol-scale", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL hessian-conformal-on-neighborhood"));

    let out = cmg(&["verify-cmg", "--space", "product:s2xr"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_cmg")).args(["osc", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_report_dir_variable() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scan.toml");
    std::fs::write(
        &config,
        r#"
space = { kind = "product", factors = [{ kind = "sphere", n = 2, c = 1.0 }, { kind = "euclidean", n = 1 }] }
count = 8
samples = 2000
expect = "nonconstant"
"#,
    )
    .unwrap();
    let reports = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_cmg"))
        .args(["scan-schur", "--config"])
        .arg(&config)
        .env("CMG_REPORT_DIR", &reports)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(reports.join("scan-schur.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(reports.join("scan-schur.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["verdict"]["verdict"], "non_constant");
}

#[test]
fn curvature_and_index_on_a_surface_of_revolution() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmg(&["curvature", "--space", "revolution:cubic(1)", "--point", "0.18,-0.24"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("curvature.json")).unwrap()).unwrap();
    let at_q = report["results"]["surface"]["curvature_gradient_norm_at_point"].as_f64().unwrap();
    let r: f64 = 0.3;
    assert!((at_q - 12.0 * r / (1.0 + r * r).powi(2)).abs() < 1e-5);
    let out = cmg(&["index", "--space", "revolution:sinh"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}
