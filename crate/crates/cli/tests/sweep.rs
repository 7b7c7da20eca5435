use std::fs;

use ksat_cli::{emit_plotdata, read_rows, run_sweep, summarize, SweepKind, SweepResult, SweepSpec};
use ksat_core::bp::BpConfig;
use ksat_core::decimate::SidConfig;
use ksat_core::sp::SpConfig;
use ksat_core::stats;

fn spec(kind: SweepKind, alphas: Vec<f64>, seeds: usize) -> SweepSpec {
    SweepSpec {
        kind,
        alphas,
        n: 300,
        seeds,
        base_seed: 11,
        bp: BpConfig::default(),
        sp: SpConfig::default(),
        sid: SidConfig {
            batch_fraction: 0.05,
            ..SidConfig::default()
        },
    }
}

fn without_wall_time(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[10] = "";
            f.join(",")
        })
        .collect()
}

#[test]
fn replay_reproduces_csv_across_pool_widths() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(SweepKind::Sp, vec![3.0, 4.0, 4.2], 3);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run_sweep(&s, 1, Some(&a)).unwrap();
    run_sweep(&s, 3, Some(&b)).unwrap();
    let (a, b) = (fs::read_to_string(a).unwrap(), fs::read_to_string(b).unwrap());
    assert_eq!(a.lines().count(), 1 + 9);
    assert_eq!(without_wall_time(&a), without_wall_time(&b));
}

#[test]
fn summary_matches_aggregates_of_written_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    for kind in [SweepKind::Bp, SweepKind::Sid] {
        let s = spec(kind, vec![3.5, 4.1], 4);
        let res = run_sweep(&s, 2, Some(&path)).unwrap();
        let rows = read_rows(&path).unwrap();
        assert_eq!(rows, res.rows);
        assert_eq!(summarize(&s, &rows), res.summary);
    }
}

#[test]
fn one_row_per_cell_in_grid_order() {
    let s = spec(SweepKind::Bp, vec![2.0, 3.0], 3);
    let res = run_sweep(&s, 2, None).unwrap();
    let cells: Vec<(usize, usize)> = res.rows.iter().map(|r| (r.alpha_index, r.replicate)).collect();
    assert_eq!(cells, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
    assert!(res.rows.iter().all(|r| r.seed == s.cell_seed(r.alpha_index, r.replicate)));
}

#[test]
fn failed_cells_are_kept() {
    let mut s = spec(SweepKind::Sp, vec![4.0], 2);
    s.sp.tol = -1.0;
    let res = run_sweep(&s, 1, None).unwrap();
    assert_eq!(res.rows.len(), 2);
    assert!(res.rows.iter().all(|r| r.error.is_some()));
    assert_eq!(res.summary.per_alpha[0].failed, 2);
}

#[test]
fn empty_grid_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let s = spec(SweepKind::Bp, Vec::new(), 5);
    let res = run_sweep(&s, 1, Some(&path)).unwrap();
    assert!(res.rows.is_empty());
    assert!(res.summary.per_alpha.is_empty());
    assert_eq!(read_rows(&path).unwrap(), Vec::new());
}

fn plot_lines(result: &SweepResult, name: &str) -> Vec<Vec<String>> {
    let dir = tempfile::tempdir().unwrap();
    emit_plotdata(result, dir.path()).unwrap();
    fs::read_to_string(dir.path().join(format!("{name}.dat")))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(str::to_owned).collect())
        .collect()
}

#[test]
fn plotdata_single_seed_has_zero_error() {
    let res = run_sweep(&spec(SweepKind::Bp, vec![2.5], 1), 1, None).unwrap();
    let lines = plot_lines(&res, "entropy_density");
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0][2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(lines[0][3], "1");
    assert_eq!(lines[0][4], "ok");
}

#[test]
fn plotdata_error_is_standard_error_of_mean() {
    let res = run_sweep(&spec(SweepKind::Bp, vec![3.0], 10), 1, None).unwrap();
    let values: Vec<f64> = res.rows.iter().map(|r| r.entropy_density.unwrap()).collect();
    let mean = values.iter().sum::<f64>() / 10.0;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0;
    let lines = plot_lines(&res, "entropy_density");
    let yerr: f64 = lines[0][2].parse().unwrap();
    assert!((yerr - (var / 10.0).sqrt()).abs() < 1e-12);
    assert_eq!(yerr, stats::mean_sem(&values).1);
}

#[test]
fn plotdata_flags_missing_cells() {
    let mut res = run_sweep(&spec(SweepKind::Bp, vec![2.0, 2.5], 3), 1, None).unwrap();
    res.rows.retain(|r| !(r.alpha_index == 1 && r.replicate > 0));
    let lines = plot_lines(&res, "entropy_density");
    assert_eq!(lines[0][4], "ok");
    assert_eq!(lines[1][3], "1");
    assert_eq!(lines[1][4], "missing=2");
}
