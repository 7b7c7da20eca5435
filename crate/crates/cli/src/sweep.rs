//! Grids of single-instance runs over clause density and replicates.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ksat_core::bp::{bp_iterate, BpConfig};
use ksat_core::decimate::{run_sid, SidConfig, SidStatus};
use ksat_core::sp::{sp_iterate, SpConfig};
use ksat_core::{generate_random, rng, stats};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Bp,
    Sp,
    Sid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub alphas: Vec<f64>,
    pub n: usize,
    pub seeds: usize,
    pub base_seed: u64,
    pub bp: BpConfig,
    pub sp: SpConfig,
    pub sid: SidConfig,
}

impl SweepSpec {
    /// Seed of cell `(alpha_index, replicate)`, independent of grid shape.
    pub fn cell_seed(&self, alpha_index: usize, replicate: usize) -> u64 {
        rng::mix(rng::mix(self.base_seed, alpha_index as u64), replicate as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub alpha_index: usize,
    pub alpha: f64,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub converged: Option<bool>,
    /// BP sweeps: Bethe entropy per variable.
    pub entropy_density: Option<f64>,
    /// SP and SID sweeps: reduced complexity per variable (SID: of the
    /// first SP solve on the full formula).
    pub complexity_density: Option<f64>,
    pub sid_status: Option<SidStatus>,
    pub wall_time: f64,
    /// Set when the cell failed; the row is kept.
    pub error: Option<String>,
}

impl SweepRow {
    /// The observable this sweep kind reports.
    pub fn value(&self) -> Option<f64> {
        self.entropy_density.or(self.complexity_density)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub cells: usize,
    pub failed: usize,
    pub converged_fraction: f64,
    pub value_mean: Option<f64>,
    pub value_sem: Option<f64>,
    pub solved_fraction: Option<f64>,
    pub wall_time_median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub spec: SweepSpec,
    pub per_alpha: Vec<AlphaSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

fn run_cell(spec: &SweepSpec, alpha_index: usize, replicate: usize) -> SweepRow {
    let alpha = spec.alphas[alpha_index];
    let seed = spec.cell_seed(alpha_index, replicate);
    let mut row = SweepRow {
        schema_version: SCHEMA_VERSION,
        alpha_index,
        alpha,
        n: spec.n,
        replicate,
        seed,
        converged: None,
        entropy_density: None,
        complexity_density: None,
        sid_status: None,
        wall_time: 0.0,
        error: None,
    };
    let start = Instant::now();
    let algo_seed = rng::mix(seed, 1);
    let outcome = (|| -> ksat_core::Result<()> {
        let f = generate_random(spec.n, alpha, seed)?;
        match spec.kind {
            SweepKind::Bp => {
                let cfg = BpConfig {
                    rng_seed: algo_seed,
                    ..spec.bp.clone()
                };
                let r = bp_iterate(&f, &cfg, None)?;
                row.converged = Some(r.converged);
                row.entropy_density = r.entropy.map(|s| s / spec.n as f64);
            }
            SweepKind::Sp => {
                let cfg = SpConfig {
                    rng_seed: algo_seed,
                    ..spec.sp.clone()
                };
                let r = sp_iterate(&f, &cfg, None)?;
                row.converged = Some(r.converged);
                row.complexity_density = r.complexity_density;
            }
            SweepKind::Sid => {
                let cfg = SidConfig {
                    seed: algo_seed,
                    ..spec.sid.clone()
                };
                let r = run_sid(&f, &cfg)?;
                row.converged = Some(r.status != SidStatus::NonConvergence);
                row.sid_status = Some(r.status);
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row.wall_time = start.elapsed().as_secs_f64();
    row
}

/// Runs every `(alpha, replicate)` cell on `jobs` worker threads (0 = all
/// cores). Rows are appended to `csv_out` in grid order as soon as they and
/// their predecessors are done, so an interrupted sweep leaves a valid
/// prefix.
pub fn run_sweep(spec: &SweepSpec, jobs: usize, csv_out: Option<&Path>) -> Result<SweepResult> {
    let cells: Vec<(usize, usize)> = (0..spec.alphas.len())
        .flat_map(|a| (0..spec.seeds).map(move |r| (a, r)))
        .collect();
    let mut writer = match csv_out {
        Some(p) => Some(csv::Writer::from_writer(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        ))),
        None => None,
    };
    if let Some(w) = writer.as_mut() {
        write_header(w)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    let n_cells = cells.len();
    let (tx, rx) = mpsc::channel::<(usize, SweepRow)>();
    let rows = std::thread::scope(|scope| -> Result<Vec<SweepRow>> {
        let collector = scope.spawn(move || -> Result<Vec<SweepRow>> {
            let mut pending = BTreeMap::new();
            let mut rows = Vec::with_capacity(n_cells);
            for (k, row) in rx {
                pending.insert(k, row);
                while let Some(row) = pending.remove(&rows.len()) {
                    if let Some(w) = writer.as_mut() {
                        write_row(w, &row)?;
                        w.flush()?;
                    }
                    rows.push(row);
                }
            }
            Ok(rows)
        });
        pool.install(|| {
            cells
                .par_iter()
                .enumerate()
                .for_each_with(tx, |tx, (k, &(a, r))| {
                    // the collector only stops early on an I/O error
                    let _ = tx.send((k, run_cell(spec, a, r)));
                })
        });
        collector.join().expect("collector thread panicked")
    })?;
    let summary = summarize(spec, &rows);
    Ok(SweepResult { rows, summary })
}

const HEADER: [&str; 12] = [
    "schema_version",
    "alpha_index",
    "alpha",
    "n",
    "replicate",
    "seed",
    "converged",
    "entropy_density",
    "complexity_density",
    "sid_status",
    "wall_time",
    "error",
];

fn write_header<W: Write>(w: &mut csv::Writer<W>) -> Result<()> {
    w.write_record(HEADER)?;
    w.flush()?;
    Ok(())
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn write_row<W: Write>(w: &mut csv::Writer<W>, row: &SweepRow) -> Result<()> {
    let status = row.sid_status.map(|s| {
        serde_json::to_value(s)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    });
    w.write_record([
        row.schema_version.to_string(),
        row.alpha_index.to_string(),
        row.alpha.to_string(),
        row.n.to_string(),
        row.replicate.to_string(),
        row.seed.to_string(),
        opt(&row.converged),
        opt(&row.entropy_density),
        opt(&row.complexity_density),
        status.unwrap_or_default(),
        row.wall_time.to_string(),
        row.error.clone().unwrap_or_default(),
    ])?;
    Ok(())
}

/// Reads rows written by [`run_sweep`] back from CSV.
pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER) {
        bail!("unexpected header in {}", path.display());
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let opt_f = |k: usize| -> Result<Option<f64>> {
            let v = field(k);
            Ok(if v.is_empty() { None } else { Some(v.parse()?) })
        };
        let status = match field(9) {
            "" => None,
            s => Some(serde_json::from_value(serde_json::Value::String(s.to_owned()))?),
        };
        let row = SweepRow {
            schema_version: field(0).parse()?,
            alpha_index: field(1).parse()?,
            alpha: field(2).parse()?,
            n: field(3).parse()?,
            replicate: field(4).parse()?,
            seed: field(5).parse()?,
            converged: match field(6) {
                "" => None,
                v => Some(v.parse()?),
            },
            entropy_density: opt_f(7)?,
            complexity_density: opt_f(8)?,
            sid_status: status,
            wall_time: field(10).parse()?,
            error: Some(field(11)).filter(|e| !e.is_empty()).map(str::to_owned),
        };
        if row.schema_version != SCHEMA_VERSION {
            bail!("row {}: schema version {} is not {SCHEMA_VERSION}", line + 1, row.schema_version);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Per-alpha aggregates of a list of rows, in grid order.
pub fn summarize(spec: &SweepSpec, rows: &[SweepRow]) -> SweepSummary {
    let per_alpha = spec
        .alphas
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let cell: Vec<&SweepRow> = rows.iter().filter(|r| r.alpha_index == ai).collect();
            let ok: Vec<&&SweepRow> = cell.iter().filter(|r| r.error.is_none()).collect();
            let frac = |pred: &dyn Fn(&SweepRow) -> bool| {
                if ok.is_empty() {
                    0.0
                } else {
                    ok.iter().filter(|r| pred(r)).count() as f64 / ok.len() as f64
                }
            };
            let values: Vec<f64> = ok.iter().filter_map(|r| r.value()).collect();
            let (mean, sem) = if values.is_empty() {
                (None, None)
            } else {
                let (m, e) = stats::mean_sem(&values);
                (Some(m), Some(e))
            };
            let times: Vec<f64> = cell.iter().map(|r| r.wall_time).collect();
            AlphaSummary {
                alpha,
                cells: cell.len(),
                failed: cell.len() - ok.len(),
                converged_fraction: frac(&|r| r.converged == Some(true)),
                value_mean: mean,
                value_sem: sem,
                solved_fraction: (spec.kind == SweepKind::Sid).then(|| frac(&|r| r.sid_status == Some(SidStatus::Solved))),
                wall_time_median: if times.is_empty() { 0.0 } else { stats::median(&times) },
            }
        })
        .collect();
    SweepSummary {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        per_alpha,
    }
}

/// Writes one whitespace-separated file per observable into `dir`, with
/// columns `alpha mean yerr n flag`. Cells that failed or are missing from
/// the grid are counted in `flag` (`ok` or `missing=<k>`), never filled in.
pub fn emit_plotdata(result: &SweepResult, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let spec = &result.summary.spec;
    type Extract = fn(&SweepRow) -> Option<f64>;
    let mut observables: Vec<(&str, Extract)> = vec![
        ("converged_fraction", |r| r.converged.map(|c| c as u8 as f64)),
        ("wall_time", |r| Some(r.wall_time)),
    ];
    match spec.kind {
        SweepKind::Bp => observables.push(("entropy_density", |r| r.entropy_density)),
        SweepKind::Sp => observables.push(("complexity_density", |r| r.complexity_density)),
        SweepKind::Sid => observables.push(("solved_fraction", |r| {
            r.sid_status.map(|s| (s == SidStatus::Solved) as u8 as f64)
        })),
    }
    let mut written = Vec::new();
    for (name, extract) in observables {
        let path = dir.join(format!("{name}.dat"));
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "# schema_version {SCHEMA_VERSION}")?;
        writeln!(out, "# alpha mean yerr n flag")?;
        for (ai, &alpha) in spec.alphas.iter().enumerate() {
            let values: Vec<f64> = result
                .rows
                .iter()
                .filter(|r| r.alpha_index == ai && r.error.is_none())
                .filter_map(extract)
                .collect();
            let missing = spec.seeds - values.len().min(spec.seeds);
            let flag = if missing == 0 {
                "ok".to_string()
            } else {
                format!("missing={missing}")
            };
            if values.is_empty() {
                writeln!(out, "{alpha} nan nan 0 {flag}")?;
            } else {
                let (m, e) = stats::mean_sem(&values);
                writeln!(out, "{alpha} {m} {e} {} {flag}", values.len())?;
            }
        }
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}
