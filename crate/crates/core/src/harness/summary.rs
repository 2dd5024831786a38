use serde::{Deserialize, Serialize};

use super::Cell;
use crate::engine::{FitnessMode, RunResult, Termination};

/// One row of the raw per-run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: usize,
    pub run_id: u64,
    pub seed: u64,
    pub n: u32,
    pub limit: String,
    pub deletion: String,
    pub mode: String,
    pub s: Option<usize>,
    #[serde(rename = "A")]
    pub a: Option<u64>,
    pub iterations: u64,
    pub termination: String,
    pub final_leaves: usize,
    pub final_distinct_vars: usize,
    pub final_or_count: usize,
    pub or_insertions_accepted: u64,
    pub gen_error: Option<f64>,
    pub gen_error_is_estimate: Option<bool>,
    pub full_iterations: u64,
}

impl RunRecord {
    pub fn new(cell_index: usize, cell: &Cell, run_id: u64, seed: u64, result: &RunResult) -> Self {
        let config = &cell.config;
        let (s, a) = match config.mode {
            FitnessMode::CompleteTruthTable => (None, None),
            FitnessMode::SampledFresh { sample_size, threshold } => (Some(sample_size), Some(threshold)),
        };
        RunRecord {
            cell: cell_index,
            run_id,
            seed,
            n: config.n,
            limit: config.limit.to_string(),
            deletion: config.deletion.name().to_string(),
            mode: config.mode.name().to_string(),
            s,
            a,
            iterations: result.iterations,
            termination: result.termination.name().to_string(),
            final_leaves: result.final_leaf_count,
            final_distinct_vars: result.final_distinct_vars,
            final_or_count: result.final_or_count,
            or_insertions_accepted: result.or_insertions_accepted,
            gen_error: result.final_generalisation_error.as_ref().map(|g| g.value()),
            gen_error_is_estimate: result.final_generalisation_error.as_ref().map(|g| g.is_estimate()),
            full_iterations: result.full_iterations,
        }
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination.parse().ok()
    }

    fn succeeded(&self) -> bool {
        self.termination().is_some_and(Termination::is_success)
    }
}

/// Mean, sample standard deviation and median of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub median: Option<f64>,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let count = values.len();
        if count == 0 {
            return Stat::default();
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64).sqrt()
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if count % 2 == 1 {
            sorted[count / 2]
        } else {
            (sorted[count / 2 - 1] + sorted[count / 2]) / 2.0
        };
        Stat {
            mean: Some(mean),
            std: Some(std),
            median: Some(median),
            count,
        }
    }
}

/// Per-cell aggregates. Runtime, size and OR statistics cover successful
/// runs only; `stuck_proportion` counts both trapped and budget-exhausted
/// runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub runs: usize,
    pub stuck: usize,
    pub budget_exhausted: usize,
    pub stuck_proportion: f64,
    pub runtime: Stat,
    pub size: Stat,
    pub or_final: Stat,
    pub or_inserted: Stat,
    /// Fewer than two successful runs, so the standard deviations are 0 by
    /// convention.
    pub low_sample: bool,
}

/// Aggregates the records of one cell.
pub fn summarize(records: &[RunRecord]) -> SummaryRow {
    let runs = records.len();
    let stuck = records
        .iter()
        .filter(|r| r.termination() == Some(Termination::StuckDetected))
        .count();
    let budget_exhausted = records
        .iter()
        .filter(|r| r.termination() == Some(Termination::BudgetExhausted))
        .count();
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.succeeded()).collect();
    let column = |f: fn(&RunRecord) -> f64| Stat::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    SummaryRow {
        runs,
        stuck,
        budget_exhausted,
        stuck_proportion: if runs == 0 {
            0.0
        } else {
            (runs - ok.len()) as f64 / runs as f64
        },
        runtime: column(|r| r.iterations as f64),
        size: column(|r| r.final_leaves as f64),
        or_final: column(|r| r.final_or_count as f64),
        or_inserted: column(|r| r.or_insertions_accepted as f64),
        low_sample: ok.len() < 2,
    }
}
