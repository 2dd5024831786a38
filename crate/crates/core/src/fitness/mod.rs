//! Error of candidate trees against the target AND_n.
//!
//! Rows are encoded so that variable `x_j` reads bit `j - 1` of the row
//! index. AND_n is true only on the all-ones row.

mod bitslice;
mod ctt;
mod onset;
mod sample;

pub use ctt::{conjunction_ctt_error, ctt_error, eval_on_row, InputRow, MAX_CTT_VARIABLES};
pub use onset::{
    estimate_generalisation_error, exact_generalisation_error,
    exact_generalisation_error_with_limit, on_set_count, GeneralisationError, DEFAULT_MAX_ONSET_VARIABLES,
    ESTIMATE_SAMPLES,
};
pub use sample::{sample_rows, sampled_error, Sample};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FitnessError {
    #[error("complete truth table limited to n <= {MAX_CTT_VARIABLES} (got {0}); use sampled mode")]
    TooManyVariables(u32),
    #[error("leaf x{var} exceeds problem size n = {n}")]
    VariableOutOfRange { var: u32, n: u32 },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("conjunction size {a} invalid for n = {n}")]
    InvalidConjunction { a: u32, n: u32 },
    #[error("tree has {0} distinct variables; exact counting is capped at {1}, use Monte Carlo estimate")]
    TooManyDistinct(usize, usize),
    #[error("the empty tree has no defined output")]
    EmptyTree,
    #[error("row has {row} variables but the problem has n = {n}")]
    RowWidth { row: u32, n: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMode {
    CompleteTruthTable,
    Sampled,
}

/// Number of rows on which a tree disagrees with AND_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorCount {
    pub count: u64,
    pub mode: EvalMode,
}

fn check_variables(tree: &crate::tree::SyntaxTree, n: u32) -> Result<(), FitnessError> {
    let max = tree.max_variable();
    if max > n {
        return Err(FitnessError::VariableOutOfRange { var: max, n });
    }
    Ok(())
}
