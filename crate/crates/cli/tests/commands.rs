use std::path::Path;
use std::process::Command;

fn ksat(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_ksat")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "ksat {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_then_analyse() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    let cnf_s = cnf.to_str().unwrap();
    ksat(&["gen", "--n", "14", "--alpha", "3", "--seed", "5", "--out", cnf_s]);
    assert!(std::fs::read_to_string(&cnf).unwrap().contains("p cnf 14 42"));

    let oracle = dir.path().join("oracle.json");
    ksat(&["oracle", "--cnf", cnf_s, "--clusters", "--json-out", oracle.to_str().unwrap()]);
    let o = json(&oracle);
    assert_eq!(o["schema_version"], 1);
    let count = o["count"].as_u64().unwrap();
    assert!(count > 0);
    let sizes: u64 = o["clusters"]["sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(sizes, count);

    let bp = dir.path().join("bp.json");
    ksat(&["bp", "--cnf", cnf_s, "--json-out", bp.to_str().unwrap()]);
    let b = json(&bp);
    let hist: u64 = b["marginal_histogram"]["counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(hist, 14);

    let sp = ksat(&["sp", "--cnf", cnf_s, "--seed", "2"]);
    let s: serde_json::Value = serde_json::from_str(&sp).unwrap();
    assert!(s["converged"].as_bool().unwrap());
    assert!(s["polarization_histogram"].is_object());

    let trace = dir.path().join("trace.csv");
    let sid = dir.path().join("sid.json");
    ksat(&[
        "sid",
        "--cnf",
        cnf_s,
        "--trace-out",
        trace.to_str().unwrap(),
        "--json-out",
        sid.to_str().unwrap(),
    ]);
    let header = std::fs::read_to_string(&trace).unwrap();
    assert!(header.starts_with("step,var,value,delta_hat,complexity_density,n_residual"));
    let r = json(&sid);
    assert_eq!(r["status"], "solved");
    assert_eq!(r["assignment"].as_array().unwrap().len(), 14);
}

#[test]
fn popdyn_scan_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pd.csv");
    let ck = dir.path().join("pop.bin");
    ksat(&[
        "popdyn", "--mode", "bp", "--alpha", "2", "--pop-size", "500", "--burn-in", "5", "--measure-sweeps", "5",
        "--batches", "5", "--csv-out", csv.to_str().unwrap(), "--checkpoint-out", ck.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "schema_version,alpha,mode,complexity_density,err,frozen_fraction,converged,sweeps_used,contradiction_rate"
    );
    assert_eq!(lines.count(), 1);
    let back = ksat_core::popdyn::read_checkpoint(std::fs::File::open(&ck).unwrap()).unwrap();
    assert_eq!(back.alpha, 2.0);
    assert_eq!(back.population.len(), 500);

    let out = ksat(&[
        "popdyn", "--scan", "3:3.2:0.1", "--pop-size", "300", "--burn-in", "2", "--measure-sweeps", "4",
        "--batches", "2",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_command_with_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let plot = dir.path().join("plot");
    let out = ksat(&[
        "sweep", "--kind", "bp", "--alpha", "4:3:0.1", "--n", "100", "--seeds", "3", "--csv-out",
        csv.to_str().unwrap(), "--plotdata-dir", plot.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["per_alpha"].as_array().unwrap().len(), 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1);
}

#[test]
fn harness_errors_exit_nonzero() {
    let out = Command::new(env!("CARGO_BIN_EXE_ksat"))
        .args(["bp", "--cnf", "/nonexistent/f.cnf"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
