//! Entry points behind the `masa` subcommands. Each returns a summary value
//! so callers (CLI, Python, tests) can report without re-reading files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use csv::WriterBuilder;
use serde::Serialize;

use crate::driver::{MasaResult, MasaRunner};
use crate::error::{MasaError, Result};
use crate::io::{ingest_csv, read_assignment_csv, read_truth_csv, write_json, write_run_outputs, write_series_csv, write_truth_csv};
use crate::metrics::{evaluate, Metrics};
use crate::synth::{gen_synthetic, SynthConfig, MOTIF_STATES};
use crate::timeseries::{Hyperparameters, TimeSeries};

/// Candidate cap used for timing runs.
pub const BENCH_CANDIDATE_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub hyperparameters: Hyperparameters,
    /// z-score every column before fitting.
    pub standardize: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input.as_os_str().is_empty() || self.output.as_os_str().is_empty() {
            return Err(MasaError::InvalidInput("input and output paths must be non-empty".into()));
        }
        self.hyperparameters.validate()
    }
}

/// Ingests, runs MASA, writes the four result files.
pub fn cmd_run(cfg: &RunConfig) -> Result<MasaResult> {
    cfg.validate()?;
    let ts = ingest_csv(&cfg.input, cfg.standardize)?;
    run_on_series(&ts, &cfg.hyperparameters, &cfg.output)
}

pub fn run_on_series(ts: &TimeSeries, hp: &Hyperparameters, output: &Path) -> Result<MasaResult> {
    let started = Instant::now();
    let result = MasaRunner::new(ts, hp)?.run()?;
    write_run_outputs(output, &result, hp, started.elapsed().as_secs_f64())?;
    Ok(result)
}

/// Writes `data.csv` and `truth.csv` into `output`.
pub fn cmd_synth(cfg: &SynthConfig, output: &Path) -> Result<(TimeSeries, crate::synth::GroundTruth)> {
    let (ts, truth) = gen_synthetic(cfg)?;
    std::fs::create_dir_all(output)?;
    write_series_csv(&output.join("data.csv"), &ts)?;
    write_truth_csv(&output.join("truth.csv"), &truth)?;
    Ok((ts, truth))
}

/// Scores an `assignment.csv` against a `truth.csv` and writes
/// `metrics.json` when `output` is given.
pub fn cmd_eval(pred_path: &Path, truth_path: &Path, output: Option<&Path>) -> Result<Metrics> {
    let pred: Vec<usize> = read_assignment_csv(pred_path)?.into_iter().map(|r| r.state).collect();
    let truth = read_truth_csv(truth_path)?;
    let metrics = evaluate(&pred, &truth.labels, &truth.motif_mask, &MOTIF_STATES)?;
    if let Some(out) = output {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        write_json(out, &metrics)?;
    }
    Ok(metrics)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub t_len: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `None` when fewer than two sizes were timed.
    pub r_squared: Option<f64>,
}

/// Coefficient of determination of the least-squares line through the
/// points. Undefined for fewer than two distinct `x` values.
pub fn linear_fit_r_squared(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    if syy == 0.0 {
        return Some(1.0);
    }
    Some(sxy * sxy / (sxx * syy))
}

/// Times one MASA iteration per size on synthetic data truncated to `T`.
/// Initialisation is not timed. Writes `bench.csv` into `output` if given.
pub fn cmd_bench(sizes: &[usize], hp: &Hyperparameters, synth: &SynthConfig, output: Option<&Path>) -> Result<BenchReport> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(MasaError::InvalidInput("bench sizes must be ascending".into()));
    }
    let hp = Hyperparameters {
        candidate_cap: Some(BENCH_CANDIDATE_CAP),
        ..hp.clone()
    };
    let per_macro = synth.segs_per_macro() * synth.seg_len;
    let mut rows = Vec::with_capacity(sizes.len());
    for &t_len in sizes {
        let cfg = SynthConfig {
            n_macro: t_len.div_ceil(per_macro).max(1),
            ..synth.clone()
        };
        let (full, _) = gen_synthetic(&cfg)?;
        let n = full.n_dims();
        let ts = TimeSeries::new(full.as_slice()[..t_len * n].to_vec(), t_len, n)?;
        let mut runner = MasaRunner::new(&ts, &hp)?;
        let started = Instant::now();
        runner.step()?;
        rows.push(BenchRow {
            t_len,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.t_len as f64, r.seconds)).collect();
    let report = BenchReport {
        r_squared: linear_fit_r_squared(&points),
        rows,
    };
    if let Some(dir) = output {
        std::fs::create_dir_all(dir)?;
        let mut w = WriterBuilder::new().from_path(dir.join("bench.csv"))?;
        w.write_record(["T", "seconds"])?;
        for r in &report.rows {
            w.write_record([r.t_len.to_string(), format!("{:.16e}", r.seconds)])?;
        }
        w.flush()?;
    }
    Ok(report)
}
