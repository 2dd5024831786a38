//! The elitist RLS-GP loop with a leaf-count limit.
//!
//! Starting from the empty tree, each iteration mutates the current solution
//! once with HVL-Prime and keeps the offspring if it respects the size limit
//! and its error is no larger than the parent's.

mod absorbing;

pub use absorbing::{
    construct_theorem1_tree, is_absorbing, is_absorbing_with_cap, known_local_optima, KnownOptimum,
    DEFAULT_CLOSURE_CAP,
};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::drift::DriftStep;
use crate::fitness::{
    ctt_error, estimate_generalisation_error, exact_generalisation_error, sample_rows, sampled_error,
    FitnessError, GeneralisationError, Sample, ESTIMATE_SAMPLES,
    MAX_CTT_VARIABLES,
};
use crate::tree::SyntaxTree;
use crate::variation::{hvl_prime, DeletionVariant, VariationError};

pub const DEFAULT_CTT_BUDGET: u64 = 10_000_000;
pub const DEFAULT_SAMPLED_BUDGET: u64 = 100_000;
pub const DEFAULT_STAGNATION_WINDOW: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error("neutral closure exceeded {0} trees")]
    ClosureTooLarge(usize),
    #[error("invalid construction: {0}")]
    Construction(String),
}

/// Maximum number of leaves an accepted solution may have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SizeLimit {
    Leaves(usize),
    Unbounded,
}

impl SizeLimit {
    pub fn admits(self, leaves: usize) -> bool {
        match self {
            SizeLimit::Leaves(l) => leaves <= l,
            SizeLimit::Unbounded => true,
        }
    }

    pub fn is_full(self, leaves: usize) -> bool {
        matches!(self, SizeLimit::Leaves(l) if leaves == l)
    }

    pub fn as_option(self) -> Option<usize> {
        match self {
            SizeLimit::Leaves(l) => Some(l),
            SizeLimit::Unbounded => None,
        }
    }
}

impl fmt::Display for SizeLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeLimit::Leaves(l) => write!(f, "{l}"),
            SizeLimit::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for SizeLimit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(SizeLimit::Unbounded),
            t => match t.parse::<usize>() {
                Ok(0) => Err("size limit must be at least 1".into()),
                Ok(l) => Ok(SizeLimit::Leaves(l)),
                Err(_) => Err(format!("expected a positive integer or 'inf', got '{t}'")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitnessMode {
    /// Error over all 2^n rows; the run stops at error 0.
    CompleteTruthTable,
    /// Error on `sample_size` rows drawn afresh every iteration; the run stops
    /// once the surviving solution's error on that sample is at most `threshold`.
    SampledFresh { sample_size: usize, threshold: u64 },
}

impl FitnessMode {
    pub fn name(&self) -> &'static str {
        match self {
            FitnessMode::CompleteTruthTable => "ctt",
            FitnessMode::SampledFresh { .. } => "sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RunConfig {
    pub n: u32,
    pub limit: SizeLimit,
    pub deletion: DeletionVariant,
    pub mode: FitnessMode,
    pub max_iterations: u64,
    /// Stagnation window after which a full tree is tested for being trapped;
    /// `None` disables the test.
    pub stuck_window: Option<u64>,
    pub seed: u64,
    pub record_drift: bool,
}

impl RunConfig {
    /// Complete-truth-table run with default budget and trap detection.
    pub fn ctt(n: u32, limit: SizeLimit, deletion: DeletionVariant) -> Self {
        RunConfig {
            n,
            limit,
            deletion,
            mode: FitnessMode::CompleteTruthTable,
            max_iterations: DEFAULT_CTT_BUDGET,
            stuck_window: Some(DEFAULT_STAGNATION_WINDOW),
            seed: 0,
            record_drift: false,
        }
    }

    pub fn sampled(n: u32, limit: SizeLimit, deletion: DeletionVariant, sample_size: usize, threshold: u64) -> Self {
        RunConfig {
            n,
            limit,
            deletion,
            mode: FitnessMode::SampledFresh { sample_size, threshold },
            max_iterations: DEFAULT_SAMPLED_BUDGET,
            stuck_window: None,
            seed: 0,
            record_drift: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: u64) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_drift(mut self, record: bool) -> Self {
        self.record_drift = record;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.limit == SizeLimit::Leaves(0) {
            return bad("size limit must be at least 1".into());
        }
        if self.max_iterations == 0 {
            return bad("iteration budget must be at least 1".into());
        }
        if self.stuck_window == Some(0) {
            return bad("stagnation window must be at least 1".into());
        }
        match self.mode {
            FitnessMode::CompleteTruthTable if self.n > MAX_CTT_VARIABLES => bad(format!(
                "complete truth table needs n <= {MAX_CTT_VARIABLES}, got {}",
                self.n
            )),
            FitnessMode::SampledFresh { sample_size: 0, .. } => bad("sample size must be at least 1".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    ExactOptimum,
    ThresholdMet,
    StuckDetected,
    BudgetExhausted,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::ExactOptimum => "ExactOptimum",
            Termination::ThresholdMet => "ThresholdMet",
            Termination::StuckDetected => "StuckDetected",
            Termination::BudgetExhausted => "BudgetExhausted",
        }
    }

    pub fn is_success(self) -> bool {
        matches!(self, Termination::ExactOptimum | Termination::ThresholdMet)
    }
}

impl FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Termination::ExactOptimum,
            Termination::ThresholdMet,
            Termination::StuckDetected,
            Termination::BudgetExhausted,
        ]
        .into_iter()
        .find(|t| t.name() == s)
        .ok_or_else(|| format!("unknown termination '{s}'"))
    }
}

/// Generalisation error of a final solution.
#[derive(Debug, Clone, PartialEq)]
pub enum FinalError {
    Exact(GeneralisationError),
    /// Monte Carlo estimate, used when the tree has too many distinct
    /// variables for exact counting.
    Estimate(f64),
}

impl FinalError {
    pub fn value(&self) -> f64 {
        match self {
            FinalError::Exact(g) => g.value(),
            FinalError::Estimate(v) => *v,
        }
    }

    pub fn is_estimate(&self) -> bool {
        matches!(self, FinalError::Estimate(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub iterations: u64,
    pub termination: Termination,
    pub final_tree: SyntaxTree,
    pub final_leaf_count: usize,
    pub final_distinct_vars: usize,
    pub final_or_count: usize,
    pub or_insertions_accepted: u64,
    /// Iterations that started from a tree at the size limit.
    pub full_iterations: u64,
    /// `None` only for an empty final tree.
    pub final_generalisation_error: Option<FinalError>,
    pub drift_trace: Option<Vec<DriftStep>>,
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct RunState {
    config: RunConfig,
    tree: SyntaxTree,
    /// CTT error of `tree`; unused in sampled mode.
    error: u64,
    sample: Option<Sample>,
    iterations: u64,
    or_insertions_accepted: u64,
    full_iterations: u64,
    last_improvement: u64,
    last_check: Option<u64>,
    drift: Option<Vec<DriftStep>>,
}

impl RunState {
    pub fn new(config: RunConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let tree = SyntaxTree::empty();
        let (error, sample) = match config.mode {
            FitnessMode::CompleteTruthTable => (ctt_error(&tree, config.n)?.count, None),
            FitnessMode::SampledFresh { sample_size, .. } => {
                // placeholder rows; every step redraws them
                let mut seedless = Xoshiro256PlusPlus::seed_from_u64(0);
                (0, Some(sample_rows(config.n, sample_size, &mut seedless)?))
            }
        };
        let drift = config.record_drift.then(Vec::new);
        Ok(RunState {
            config,
            tree,
            error,
            sample,
            iterations: 0,
            or_insertions_accepted: 0,
            full_iterations: 0,
            last_improvement: 0,
            last_check: None,
            drift,
        })
    }

    pub fn tree(&self) -> &SyntaxTree {
        &self.tree
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// CTT error of the current solution (CTT mode only).
    pub fn error(&self) -> u64 {
        self.error
    }

    pub fn or_insertions_accepted(&self) -> u64 {
        self.or_insertions_accepted
    }

    /// One iteration. Returns the termination reached by the surviving
    /// solution, if any.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<Termination>, EngineError> {
        let n = self.config.n;
        let parent_full = self.config.limit.is_full(self.tree.leaf_count());
        if let Some(sample) = self.sample.as_mut() {
            sample.resample(rng);
        }
        let outcome = hvl_prime(&self.tree, self.config.deletion, n, rng);
        let fits = self.config.limit.admits(outcome.offspring.leaf_count());
        let same = outcome.offspring == self.tree;

        let (parent_error, offspring_error) = match &self.sample {
            None => {
                let off = if !fits {
                    None
                } else if same {
                    Some(self.error)
                } else {
                    Some(ctt_error(&outcome.offspring, n)?.count)
                };
                (self.error, off)
            }
            Some(sample) => {
                let parent = sampled_error(&self.tree, sample)?.count;
                let off = if !fits {
                    None
                } else if same {
                    Some(parent)
                } else {
                    Some(sampled_error(&outcome.offspring, sample)?.count)
                };
                (parent, off)
            }
        };

        let accepted = matches!(offspring_error, Some(e) if e <= parent_error);
        let survivor_error = if accepted {
            offspring_error.expect("accepted offspring was evaluated")
        } else {
            parent_error
        };

        self.iterations += 1;
        if parent_full {
            self.full_iterations += 1;
        }
        if let Some(trace) = self.drift.as_mut() {
            trace.push(DriftStep {
                parent_error,
                next_error: survivor_error,
                parent_full,
            });
        }
        if accepted {
            if survivor_error < parent_error {
                self.last_improvement = self.iterations;
            }
            if outcome.inserts_or() {
                self.or_insertions_accepted += 1;
            }
            if !same {
                self.tree = outcome.offspring;
            }
            if self.sample.is_none() {
                self.error = survivor_error;
            }
        }

        Ok(match self.config.mode {
            FitnessMode::CompleteTruthTable if self.error == 0 => Some(Termination::ExactOptimum),
            FitnessMode::SampledFresh { threshold, .. } if survivor_error <= threshold => {
                Some(Termination::ThresholdMet)
            }
            _ => None,
        })
    }

    /// Whether the trap test is due: CTT mode, a full tree, and no
    /// improvement for a whole window since the later of the last improvement
    /// and the last test.
    fn stuck_check_due(&self) -> Option<u64> {
        let window = self.config.stuck_window?;
        if self.config.mode != FitnessMode::CompleteTruthTable {
            return None;
        }
        if !self.config.limit.is_full(self.tree.leaf_count()) {
            return None;
        }
        let since = self.last_improvement.max(self.last_check.unwrap_or(0));
        (self.iterations - since >= window).then_some(window)
    }

    fn is_trapped(&mut self) -> bool {
        self.last_check = Some(self.iterations);
        let limit = self.config.limit.as_option().expect("full implies a finite limit");
        // a closure too large to explore counts as not trapped; the budget
        // still bounds the run
        is_absorbing(&self.tree, self.config.deletion, self.config.n, limit).unwrap_or(false)
    }

    fn finish<R: Rng + ?Sized>(self, termination: Termination, rng: &mut R) -> Result<RunResult, EngineError> {
        let tree = self.tree;
        let final_generalisation_error = if tree.is_empty() {
            None
        } else {
            Some(
                match exact_generalisation_error(&tree, self.config.n) {
                    Ok(g) => FinalError::Exact(g),
                    Err(FitnessError::TooManyDistinct(..)) => FinalError::Estimate(estimate_generalisation_error(
                        &tree,
                        self.config.n,
                        ESTIMATE_SAMPLES,
                        rng,
                    )?),
                    Err(e) => return Err(e.into()),
                },
            )
        };
        Ok(RunResult {
            iterations: self.iterations,
            termination,
            final_leaf_count: tree.leaf_count(),
            final_distinct_vars: tree.distinct_variables().len(),
            final_or_count: tree.or_count(),
            or_insertions_accepted: self.or_insertions_accepted,
            full_iterations: self.full_iterations,
            final_generalisation_error,
            drift_trace: self.drift,
            final_tree: tree,
        })
    }
}

/// Runs RLS-GP with a generator seeded from `config.seed`.
pub fn run(config: &RunConfig) -> Result<RunResult, EngineError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    run_with_rng(config, &mut rng)
}

/// Runs RLS-GP drawing all randomness from `rng`.
pub fn run_with_rng<R: Rng + ?Sized>(config: &RunConfig, rng: &mut R) -> Result<RunResult, EngineError> {
    let mut state = RunState::new(config.clone())?;
    loop {
        if let Some(t) = state.step(rng)? {
            return state.finish(t, rng);
        }
        if state.stuck_check_due().is_some() && state.is_trapped() {
            return state.finish(Termination::StuckDetected, rng);
        }
        if state.iterations >= config.max_iterations {
            return state.finish(Termination::BudgetExhausted, rng);
        }
    }
}
