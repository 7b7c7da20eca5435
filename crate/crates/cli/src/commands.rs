use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ksat_core::bp::{bp_iterate, BpConfig};
use ksat_core::decimate::{run_sid, SelectionRule, SidConfig, SidStatus};
use ksat_core::instance::{parse_dimacs, write_dimacs};
use ksat_core::oracle::{decompose_clusters, enumerate, DEFAULT_CAP};
use ksat_core::popdyn::{
    estimate_complexity_density, estimate_with_population, find_alpha_b, find_alpha_c, find_alpha_d,
    find_alpha_u, write_checkpoint, EnsembleSpec, PopDynConfig, PopDynResult, PopMode, ThresholdConfig,
    ThresholdEstimate,
};
use ksat_core::sp::{sp_iterate, SpConfig};
use ksat_core::{generate_random, Formula};
use serde::Serialize;

use crate::output::{write_json, Histogram};
use crate::sweep::{emit_plotdata, run_sweep, SweepSpec};
use crate::{
    grid, BpArgs, DecimationArgs, GenArgs, IterArgs, Mode, OracleArgs, PopdynArgs, Selection, SidArgs, SpArgs,
    SweepArgs, Threshold, SCHEMA_VERSION,
};

const HISTOGRAM_BINS: usize = 20;

fn read_cnf(path: &Path) -> Result<Formula> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_dimacs(&text).with_context(|| format!("parsing {}", path.display()))
}

impl IterArgs {
    pub(crate) fn bp_config(&self, seed: u64) -> BpConfig {
        let d = BpConfig::default();
        BpConfig {
            damping: self.damping.unwrap_or(d.damping),
            tol: self.tol.unwrap_or(d.tol),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            rng_seed: seed,
            parallel: self.parallel,
            ..d
        }
    }

    pub(crate) fn sp_config(&self, seed: u64) -> SpConfig {
        let d = SpConfig::default();
        SpConfig {
            damping: self.damping.unwrap_or(d.damping),
            tol: self.tol.unwrap_or(d.tol),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            rng_seed: seed,
            parallel: self.parallel,
            ..d
        }
    }
}

impl DecimationArgs {
    pub(crate) fn sid_config(&self, sp: SpConfig, seed: u64) -> SidConfig {
        let d = SidConfig::default();
        SidConfig {
            sp,
            batch_fraction: self.batch_fraction.unwrap_or(d.batch_fraction),
            max_steps: self.max_steps.or(d.max_steps),
            selection: match self.selection {
                Some(Selection::MinDelta) => SelectionRule::MinDelta,
                Some(Selection::MaxBias) => SelectionRule::MaxBias,
                None => d.selection,
            },
            seed,
            ..d
        }
    }
}

pub fn gen(a: GenArgs) -> Result<()> {
    let f = generate_random(a.n, a.alpha, a.seed)?;
    let text = write_dimacs(&f);
    match a.out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct BpReport {
    schema_version: u32,
    n_vars: usize,
    n_clauses: usize,
    converged: bool,
    iters: usize,
    residual: f64,
    entropy: Option<f64>,
    entropy_density: Option<f64>,
    /// Distribution of `P(x_i = true)`.
    marginal_histogram: Histogram,
}

pub fn bp(a: BpArgs) -> Result<()> {
    let f = read_cnf(&a.cnf)?;
    let r = bp_iterate(&f, &a.iter.bp_config(a.seed), None)?;
    let report = BpReport {
        schema_version: SCHEMA_VERSION,
        n_vars: f.n_vars(),
        n_clauses: f.n_clauses(),
        converged: r.converged,
        iters: r.iters,
        residual: r.residual,
        entropy: r.entropy,
        entropy_density: r.entropy.map(|s| s / f.n_vars().max(1) as f64),
        marginal_histogram: Histogram::new(r.marginals.iter().map(|m| m.p_t), 0.0, 1.0, HISTOGRAM_BINS),
    };
    write_json(&report, a.json_out.as_deref())
}

#[derive(Serialize)]
struct SpReport {
    schema_version: u32,
    n_vars: usize,
    n_clauses: usize,
    converged: bool,
    trivial: bool,
    iters: usize,
    residual: f64,
    complexity: Option<f64>,
    complexity_density: Option<f64>,
    contradiction: Option<usize>,
    /// Distribution of `W_T - W_F`.
    polarization_histogram: Histogram,
}

pub fn sp(a: SpArgs) -> Result<()> {
    let f = read_cnf(&a.cnf)?;
    let r = sp_iterate(&f, &a.iter.sp_config(a.seed), None)?;
    let report = SpReport {
        schema_version: SCHEMA_VERSION,
        n_vars: f.n_vars(),
        n_clauses: f.n_clauses(),
        converged: r.converged,
        trivial: r.trivial,
        iters: r.iters,
        residual: r.residual,
        complexity: r.complexity,
        complexity_density: r.complexity_density,
        contradiction: r.contradiction,
        polarization_histogram: Histogram::new(r.polarization.iter().copied(), -1.0, 1.0, HISTOGRAM_BINS),
    };
    write_json(&report, a.json_out.as_deref())
}

#[derive(Serialize)]
struct SidReport {
    schema_version: u32,
    n_vars: usize,
    n_clauses: usize,
    status: SidStatus,
    steps: usize,
    fallback_used: bool,
    decimated: usize,
    residual_vars: usize,
    residual_clauses: usize,
    /// Signed DIMACS literals of the solution.
    assignment: Option<Vec<i64>>,
    delta_hat_histogram: Histogram,
}

pub fn sid(a: SidArgs) -> Result<()> {
    let f = read_cnf(&a.cnf)?;
    let cfg = a.decimation.sid_config(a.iter.sp_config(a.seed), a.seed);
    let out = run_sid(&f, &cfg)?;
    if let Some(p) = &a.trace_out {
        let mut w = csv::Writer::from_path(p).with_context(|| format!("creating {}", p.display()))?;
        w.write_record(["step", "var", "value", "delta_hat", "complexity_density", "n_residual"])?;
        for row in &out.trace {
            w.write_record([
                row.step.to_string(),
                (row.var + 1).to_string(),
                (row.value as u8).to_string(),
                row.delta_hat.to_string(),
                row.complexity_density.map(|c| c.to_string()).unwrap_or_default(),
                row.n_residual.to_string(),
            ])?;
        }
        w.flush()?;
    }
    let finite: Vec<f64> = out.trace.iter().map(|r| r.delta_hat).filter(|d| d.is_finite()).collect();
    let (lo, hi) = finite
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let report = SidReport {
        schema_version: SCHEMA_VERSION,
        n_vars: f.n_vars(),
        n_clauses: f.n_clauses(),
        status: out.status,
        steps: out.steps,
        fallback_used: out.fallback_used,
        decimated: out.decimated,
        residual_vars: out.residual_vars,
        residual_clauses: out.residual_clauses,
        assignment: out.assignment.as_ref().map(|v| {
            v.iter()
                .enumerate()
                .map(|(i, &b)| if b { i as i64 + 1 } else { -(i as i64 + 1) })
                .collect()
        }),
        delta_hat_histogram: Histogram::new(finite, lo, if hi > lo { hi } else { lo + 1.0 }, HISTOGRAM_BINS),
    };
    write_json(&report, a.json_out.as_deref())
}

fn popdyn_config(a: &PopdynArgs, base: PopDynConfig) -> PopDynConfig {
    PopDynConfig {
        pop_size: a.pop_size.unwrap_or(base.pop_size),
        burn_in: a.burn_in.unwrap_or(base.burn_in),
        measure_sweeps: a.measure_sweeps.unwrap_or(base.measure_sweeps),
        batches: a.batches.unwrap_or(base.batches),
        seed: a.seed,
        ..base
    }
}

#[derive(Serialize)]
struct ThresholdReport {
    schema_version: u32,
    threshold: &'static str,
    config: ThresholdConfig,
    estimate: ThresholdEstimate,
}

#[derive(Serialize)]
struct PopdynReport<'a> {
    schema_version: u32,
    config: &'a PopDynConfig,
    results: &'a [PopDynResult],
}

pub fn popdyn(a: PopdynArgs) -> Result<()> {
    if let Some(which) = a.find {
        let (name, preset, finder): (_, _, fn(&ThresholdConfig) -> ksat_core::Result<ThresholdEstimate>) = match which {
            Threshold::AlphaC => ("alpha_c", ThresholdConfig::alpha_c(), find_alpha_c),
            Threshold::AlphaD => ("alpha_d", ThresholdConfig::alpha_d(), find_alpha_d),
            Threshold::AlphaB => ("alpha_b", ThresholdConfig::alpha_b(), find_alpha_b),
            Threshold::AlphaU => ("alpha_u", ThresholdConfig::alpha_u(), find_alpha_u),
        };
        let mut cfg = ThresholdConfig {
            popdyn: popdyn_config(&a, preset.popdyn.clone()),
            width: a.width.unwrap_or(preset.width),
            ..preset
        };
        if let Some(b) = &a.bracket {
            (cfg.lo, cfg.hi) = grid::parse_bracket(b)?;
        }
        let estimate = finder(&cfg)?;
        return write_json(
            &ThresholdReport {
                schema_version: SCHEMA_VERSION,
                threshold: name,
                config: cfg,
                estimate,
            },
            a.json_out.as_deref(),
        );
    }
    let alphas = match (&a.scan, a.alpha) {
        (Some(s), _) => grid::parse_range(s)?,
        (None, Some(x)) => vec![x],
        (None, None) => bail!("one of --alpha, --scan or --find is required"),
    };
    let mode = match a.mode {
        Mode::Bp => PopMode::Bp,
        Mode::Sp => PopMode::Sp,
    };
    let cfg = popdyn_config(
        &a,
        PopDynConfig {
            mode,
            ..PopDynConfig::default()
        },
    );
    let mut csv = match &a.csv_out {
        Some(p) => {
            let mut w = csv::Writer::from_writer(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            ));
            w.write_record([
                "schema_version",
                "alpha",
                "mode",
                "complexity_density",
                "err",
                "frozen_fraction",
                "converged",
                "sweeps_used",
                "contradiction_rate",
            ])?;
            w.flush()?;
            Some(w)
        }
        None => None,
    };
    let mut results = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let spec = EnsembleSpec::new(alpha)?;
        let r = match &a.checkpoint_out {
            Some(p) => {
                let (r, pop) = estimate_with_population(&spec, &cfg)?;
                let w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
                write_checkpoint(w, &pop, alpha)?;
                r
            }
            None => estimate_complexity_density(&spec, &cfg)?,
        };
        if let Some(w) = csv.as_mut() {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                alpha.to_string(),
                match mode {
                    PopMode::Bp => "bp".into(),
                    PopMode::Sp => "sp".to_string(),
                },
                r.complexity_density.to_string(),
                r.err.to_string(),
                r.frozen_fraction.to_string(),
                r.converged.to_string(),
                r.sweeps_used.to_string(),
                r.contradiction_rate.to_string(),
            ])?;
            w.flush()?;
        }
        results.push(r);
    }
    write_json(
        &PopdynReport {
            schema_version: SCHEMA_VERSION,
            config: &cfg,
            results: &results,
        },
        a.json_out.as_deref(),
    )
}

#[derive(Serialize)]
struct ClusterReport {
    radius: usize,
    count: usize,
    sizes: Vec<usize>,
    /// Frozen variables per cluster.
    backbone_sizes: Vec<usize>,
}

#[derive(Serialize)]
struct OracleReport {
    schema_version: u32,
    n_vars: usize,
    n_clauses: usize,
    count: u64,
    entropy: f64,
    clusters: Option<ClusterReport>,
}

pub fn oracle(a: OracleArgs) -> Result<()> {
    let f = read_cnf(&a.cnf)?;
    let e = enumerate(&f, if a.clusters { DEFAULT_CAP } else { 0 })?;
    let clusters = if a.clusters {
        let Some(sols) = &e.solutions else {
            bail!("{} solutions exceed the cap of {DEFAULT_CAP} for clustering", e.count);
        };
        let d = decompose_clusters(sols, f.n_vars(), a.radius);
        Some(ClusterReport {
            radius: a.radius,
            count: d.len(),
            sizes: d.clusters.iter().map(Vec::len).collect(),
            backbone_sizes: d.backbones.iter().map(Vec::len).collect(),
        })
    } else {
        None
    };
    write_json(
        &OracleReport {
            schema_version: SCHEMA_VERSION,
            n_vars: f.n_vars(),
            n_clauses: f.n_clauses(),
            count: e.count,
            entropy: e.entropy,
            clusters,
        },
        a.json_out.as_deref(),
    )
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let sp = a.iter.sp_config(0);
    let spec = SweepSpec {
        kind: a.kind,
        alphas: grid::parse_range(&a.alpha)?,
        n: a.n,
        seeds: a.seeds,
        base_seed: a.base_seed,
        bp: a.iter.bp_config(0),
        sid: a.decimation.sid_config(sp.clone(), 0),
        sp,
    };
    let result = run_sweep(&spec, a.jobs, a.csv_out.as_deref())?;
    if let Some(dir) = &a.plotdata_dir {
        emit_plotdata(&result, dir)?;
    }
    write_json(&result.summary, a.json_out.as_deref())?;
    std::io::stdout().flush()?;
    Ok(())
}
