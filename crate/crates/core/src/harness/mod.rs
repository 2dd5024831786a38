//! Seeded, parallel experiment runner.
//!
//! An experiment is a list of cells (one [`RunConfig`] each, seed ignored)
//! grouped into series for plotting. Every (cell, run) job gets its own seed
//! derived from the master seed, the cell's parameters and the run index, so
//! results do not depend on the number of workers.
//!
//! Output directory layout:
//!
//! - `runs.csv`: one row per run.
//! - `summary.tsv`: one row per cell.
//! - `<metric>-<series>.tsv`: `sweep_value, mean, std, median, count,
//!   stuck_proportion` for metrics `runtime`, `treesize`, `finOR`, `insOR`.
//! - `drift-<series>-<sweep>.tsv`: binned drift for cells recording traces.
//! - `meta.json`: parameters and conventions.

mod cli;
mod summary;

pub use cli::{parse_cli, Preset};
pub use summary::{summarize, RunRecord, Stat, SummaryRow};

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::drift::{binned_drift_from_traces, geometric_edges, write_drift_report, BinnedDrift};
use crate::engine::{run, EngineError, FitnessMode, RunConfig, RunResult, SizeLimit};
use crate::variation::DeletionVariant;

pub const DEFAULT_RUNS: usize = 500;

/// Training-set sizes of the sampled-mode sweeps: 2^4 … 2^16.
pub const SAMPLE_SIZE_SWEEP: [usize; 13] = [
    1 << 4,
    1 << 5,
    1 << 6,
    1 << 7,
    1 << 8,
    1 << 9,
    1 << 10,
    1 << 11,
    1 << 12,
    1 << 13,
    1 << 14,
    1 << 15,
    1 << 16,
];

pub const THRESHOLD_SWEEP: [u64; 4] = [0, 8, 16, 32];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot write to {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("cell {cell} ({key}), run {run}: {source}")]
    Run {
        cell: usize,
        key: String,
        run: u64,
        source: EngineError,
    },
    #[error("invalid cell {cell} ({key}): {source}")]
    Cell { cell: usize, key: String, source: EngineError },
    #[error("experiment needs at least one cell and one run")]
    Empty,
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub series: String,
    pub sweep_value: String,
    pub config: RunConfig,
}

impl Cell {
    /// Canonical text of the parameters that determine the run seeds.
    pub fn key(&self) -> String {
        let c = &self.config;
        let (s, a) = match c.mode {
            FitnessMode::CompleteTruthTable => (String::new(), String::new()),
            FitnessMode::SampledFresh { sample_size, threshold } => (sample_size.to_string(), threshold.to_string()),
        };
        format!(
            "n={} limit={} deletion={} mode={} s={} A={}",
            c.n,
            c.limit,
            c.deletion.name(),
            c.mode.name(),
            s,
            a
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub cells: Vec<Cell>,
    pub runs: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

impl ExperimentSpec {
    pub fn preset(preset: Preset) -> Self {
        ExperimentSpec {
            name: preset.name().to_string(),
            cells: preset_cells(preset),
            runs: DEFAULT_RUNS,
            seed: 0,
            workers: default_workers(),
            out: PathBuf::from("results"),
        }
    }

    pub fn single(config: RunConfig) -> Self {
        let sweep_value = match config.mode {
            FitnessMode::CompleteTruthTable => config.n.to_string(),
            FitnessMode::SampledFresh { sample_size, .. } => sample_size.to_string(),
        };
        ExperimentSpec {
            name: "custom".into(),
            cells: vec![Cell {
                series: "custom".into(),
                sweep_value,
                config,
            }],
            runs: DEFAULT_RUNS,
            seed: 0,
            workers: default_workers(),
            out: PathBuf::from("results"),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.cells.is_empty() || self.runs == 0 {
            return Err(HarnessError::Empty);
        }
        for (i, cell) in self.cells.iter().enumerate() {
            cell.config.validate().map_err(|source| HarnessError::Cell {
                cell: i,
                key: cell.key(),
                source,
            })?;
        }
        Ok(())
    }

    /// Distinct series names in first-appearance order.
    pub fn series(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.series.as_str()) {
                out.push(&c.series);
            }
        }
        out
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn preset_cells(preset: Preset) -> Vec<Cell> {
    match preset {
        Preset::Table1 => table_cells(DeletionVariant::LeafOnly),
        Preset::Table2 => table_cells(DeletionVariant::Subtree),
        Preset::Fig2 | Preset::Fig3 => THRESHOLD_SWEEP
            .iter()
            .flat_map(|&a| {
                SAMPLE_SIZE_SWEEP.iter().map(move |&s| Cell {
                    series: format!("A{a}"),
                    sweep_value: s.to_string(),
                    config: RunConfig::sampled(50, SizeLimit::Unbounded, DeletionVariant::Subtree, s, a),
                })
            })
            .collect(),
        Preset::DriftReport => vec![Cell {
            series: "drift".into(),
            sweep_value: "12".into(),
            config: RunConfig::ctt(12, SizeLimit::Leaves(24), DeletionVariant::Subtree).with_drift(true),
        }],
    }
}

/// Grid rows are n ∈ {4, 8, 12, 16}; columns are ℓ ∈ {n, n+1, 2n, ∞}.
fn table_cells(deletion: DeletionVariant) -> Vec<Cell> {
    type LimitRule = fn(usize) -> SizeLimit;
    let columns: [(&str, LimitRule); 4] = [
        ("limit_n", |n| SizeLimit::Leaves(n)),
        ("limit_n+1", |n| SizeLimit::Leaves(n + 1)),
        ("limit_2n", |n| SizeLimit::Leaves(2 * n)),
        ("limit_inf", |_| SizeLimit::Unbounded),
    ];
    columns
        .iter()
        .flat_map(|&(series, rule)| {
            [4u32, 8, 12, 16].into_iter().map(move |n| Cell {
                series: series.to_string(),
                sweep_value: n.to_string(),
                config: RunConfig::ctt(n, rule(n as usize), deletion),
            })
        })
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

/// Seed of run `run` in the cell with key `cell_key`.
pub fn run_seed(master: u64, cell_key: &str, run: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(cell_key)).wrapping_add(run))
}

/// Results of one cell, in run order.
#[derive(Debug, Clone)]
pub struct CellResults {
    pub seeds: Vec<u64>,
    pub results: Vec<RunResult>,
}

impl CellResults {
    pub fn records(&self, cell_index: usize, cell: &Cell) -> Vec<RunRecord> {
        self.results
            .iter()
            .zip(&self.seeds)
            .enumerate()
            .map(|(i, (r, &seed))| RunRecord::new(cell_index, cell, i as u64, seed, r))
            .collect()
    }

    /// Drift binned at half-powers of n, over non-full transitions, when
    /// traces were recorded.
    pub fn binned_drift(&self, config: &RunConfig) -> Option<BinnedDrift> {
        let traces: Vec<&[_]> = self
            .results
            .iter()
            .map(|r| r.drift_trace.as_deref())
            .collect::<Option<_>>()?;
        let max = match config.mode {
            FitnessMode::CompleteTruthTable => 1u64 << config.n,
            FitnessMode::SampledFresh { sample_size, .. } => sample_size as u64,
        };
        let edges = geometric_edges(config.n, max);
        binned_drift_from_traces(traces, &edges, true).ok()
    }
}

/// Runs every job of `spec` on a pool of `spec.workers` threads.
pub fn execute(spec: &ExperimentSpec) -> Result<Vec<CellResults>, HarnessError> {
    spec.validate()?;
    let jobs: Vec<(usize, u64, u64)> = spec
        .cells
        .iter()
        .enumerate()
        .flat_map(|(ci, cell)| {
            let key = cell.key();
            (0..spec.runs as u64).map(move |r| (ci, r, run_seed(spec.seed, &key, r)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let outcomes: Vec<Result<RunResult, HarnessError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(ci, r, seed)| {
                let cell = &spec.cells[ci];
                run(&cell.config.clone().with_seed(seed)).map_err(|source| HarnessError::Run {
                    cell: ci,
                    key: cell.key(),
                    run: r,
                    source,
                })
            })
            .collect()
    });
    let mut cells: Vec<CellResults> = spec
        .cells
        .iter()
        .map(|_| CellResults {
            seeds: Vec::with_capacity(spec.runs),
            results: Vec::with_capacity(spec.runs),
        })
        .collect();
    for (&(ci, _, seed), outcome) in jobs.iter().zip(outcomes) {
        cells[ci].seeds.push(seed);
        cells[ci].results.push(outcome?);
    }
    Ok(cells)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Output {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates the output directory and checks that files can be written there.
pub fn prepare_output(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let probe = dir.join(".write-test");
    File::create(&probe).map_err(io_err(&probe))?;
    fs::remove_file(&probe).map_err(io_err(&probe))?;
    Ok(())
}

/// Runs the experiment and writes every output file. The output directory
/// is checked before any run starts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>, HarnessError> {
    spec.validate()?;
    prepare_output(&spec.out)?;
    let results = execute(spec)?;
    write_outputs(spec, &results)
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn write_outputs(spec: &ExperimentSpec, results: &[CellResults]) -> Result<Vec<SummaryRow>, HarnessError> {
    let dir = &spec.out;

    let runs_path = dir.join("runs.csv");
    let mut csv_out = csv::Writer::from_writer(create(&runs_path)?);
    let mut summaries = Vec::with_capacity(spec.cells.len());
    for (ci, (cell, res)) in spec.cells.iter().zip(results).enumerate() {
        let records = res.records(ci, cell);
        for r in &records {
            csv_out.serialize(r)?;
        }
        summaries.push(summarize(&records));
    }
    csv_out.flush().map_err(io_err(&runs_path))?;

    let path = dir.join("summary.tsv");
    let mut w = create(&path)?;
    let write_summary = |w: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(
            w,
            "series\tsweep_value\tn\tlimit\tdeletion\tmode\ts\tA\truns\tstuck\tbudget_exhausted\tstuck_proportion\t\
             runtime_mean\truntime_std\tsize_mean\tsize_std\tfinal_or_mean\tfinal_or_std\tor_inserted_mean\tor_inserted_std\tlow_sample"
        )?;
        for (cell, s) in spec.cells.iter().zip(&summaries) {
            let c = &cell.config;
            let (ss, a) = match c.mode {
                FitnessMode::CompleteTruthTable => (String::new(), String::new()),
                FitnessMode::SampledFresh { sample_size, threshold } => {
                    (sample_size.to_string(), threshold.to_string())
                }
            };
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                cell.series,
                cell.sweep_value,
                c.n,
                c.limit,
                c.deletion.name(),
                c.mode.name(),
                ss,
                a,
                s.runs,
                s.stuck,
                s.budget_exhausted,
                s.stuck_proportion,
                na(s.runtime.mean),
                na(s.runtime.std),
                na(s.size.mean),
                na(s.size.std),
                na(s.or_final.mean),
                na(s.or_final.std),
                na(s.or_inserted.mean),
                na(s.or_inserted.std),
                s.low_sample
            )?;
        }
        w.flush()
    };
    write_summary(&mut w).map_err(io_err(&path))?;

    let metrics: [(&str, fn(&SummaryRow) -> Stat); 4] = [
        ("runtime", |s| s.runtime),
        ("treesize", |s| s.size),
        ("finOR", |s| s.or_final),
        ("insOR", |s| s.or_inserted),
    ];
    for series in spec.series() {
        for (metric, pick) in metrics {
            let path = dir.join(format!("{metric}-{series}.tsv"));
            let mut w = create(&path)?;
            let mut body = || -> io::Result<()> {
                writeln!(w, "sweep_value\tmean\tstd\tmedian\tcount\tstuck_proportion")?;
                for (cell, s) in spec.cells.iter().zip(&summaries).filter(|(c, _)| c.series == series) {
                    let st = pick(s);
                    writeln!(
                        w,
                        "{}\t{}\t{}\t{}\t{}\t{}",
                        cell.sweep_value,
                        na(st.mean),
                        na(st.std),
                        na(st.median),
                        st.count,
                        s.stuck_proportion
                    )?;
                }
                w.flush()
            };
            body().map_err(io_err(&path))?;
        }
    }

    for (cell, res) in spec.cells.iter().zip(results) {
        let Some(binned) = res.binned_drift(&cell.config) else {
            continue;
        };
        let path = dir.join(format!("drift-{}-{}.tsv", cell.series, cell.sweep_value));
        let mut w = create(&path)?;
        write_drift_report(&mut w, &binned, cell.config.n, cell.config.limit.as_option())
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
    }

    let meta = json!({
        "experiment": spec.name,
        "runs_per_cell": spec.runs,
        "master_seed": spec.seed,
        "seed_derivation": "splitmix64(splitmix64(master ^ fnv1a(cell key)) + run index)",
        "sampling": "rows drawn uniformly with replacement, fresh every iteration",
        "stuck_detection": "when the tree is at the size limit and the error has not improved for the stagnation \
                            window, test whether any tree reachable through accepted equal-error moves has a \
                            strictly better accepted neighbour; if none does, stop with StuckDetected",
        "stuck_proportion": "(StuckDetected + BudgetExhausted) / runs; summary statistics cover successful runs only",
        "cells": spec.cells.iter().map(|c| json!({
            "series": c.series,
            "sweep_value": c.sweep_value,
            "key": c.key(),
            "max_iterations": c.config.max_iterations,
            "stagnation_window": c.config.stuck_window,
            "record_drift": c.config.record_drift,
        })).collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let path = dir.join("meta.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(&path))?;

    Ok(summaries)
}
