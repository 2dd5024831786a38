//! Drift analysis: closed-form hitting-time bounds, synthetic processes that
//! satisfy the super-multiplicative drift condition, and empirical drift of
//! RLS-GP fitness traces.
//!
//! Under the condition `E[X_t − X_{t+1} | X_t = x] ≥ (log_γ(x) + 1)·δ·x` on
//! the state space `{0} ∪ [1, ∞)`, the time to hit zero from `X_0` is at most
//!
//! ```text
//! 3/δ + 2·(2 + log₂ log_γ max{γ, X_0})·ln γ / δ
//! ```
//!
//! compared with `(1 + ln X_0)/δ` from plain multiplicative drift.

use std::io::{self, Write};

use rand::Rng;
use thiserror::Error;

/// Steps after which a synthetic process is declared stuck.
pub const HITTING_TIME_CAP: u64 = 10_000_000;

/// Bins with fewer transitions get no confidence interval.
pub const MIN_BIN_COUNT: u64 = 100;

/// Two-sided 95% normal quantile.
pub const Z_TWO_SIDED_95: f64 = 1.959_963_984_540_054;

/// One-sided 95% normal quantile.
pub const Z_ONE_SIDED_95: f64 = 1.644_853_626_951_472_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriftError {
    #[error("gamma must exceed 1 (got {0})")]
    Gamma(f64),
    #[error("delta must be positive (got {0})")]
    Delta(f64),
    #[error("initial value must be 0 or at least 1 (got {0})")]
    InitialValue(f64),
    #[error("process did not hit 0 within {0} steps")]
    DidNotHit(u64),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("drift bound needs x >= 1, n >= 2 and limit >= n (got x = {x}, n = {n}, limit = {limit})")]
    BoundDomain { x: f64, n: u32, limit: usize },
    #[error("bin edges must be strictly increasing and at least two")]
    BadEdges,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmdParams {
    gamma: f64,
    delta: f64,
    x0: f64,
}

impl SmdParams {
    pub fn new(gamma: f64, delta: f64, x0: f64) -> Result<Self, DriftError> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(DriftError::Gamma(gamma));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(DriftError::Delta(delta));
        }
        check_state(x0)?;
        Ok(SmdParams { gamma, delta, x0 })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
}

fn check_state(x: f64) -> Result<(), DriftError> {
    if x == 0.0 || (x >= 1.0 && x.is_finite()) {
        Ok(())
    } else {
        Err(DriftError::InitialValue(x))
    }
}

/// Expected hitting-time bound under super-multiplicative drift.
pub fn smd_time_bound(params: &SmdParams) -> f64 {
    let SmdParams { gamma, delta, x0 } = *params;
    if x0 == 0.0 {
        return 0.0;
    }
    let doubly_log = (x0.max(gamma).ln() / gamma.ln()).log2();
    3.0 / delta + 2.0 * (2.0 + doubly_log) * gamma.ln() / delta
}

/// Expected hitting-time bound under multiplicative drift δ·x.
pub fn md_time_bound(delta: f64, x0: f64) -> Result<f64, DriftError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(DriftError::Delta(delta));
    }
    check_state(x0)?;
    if x0 == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + x0.ln()) / delta)
}

/// Lower bound on the one-step expected fitness decrease of RLS-GP on AND_n
/// from a non-full tree with error `x`: `(log_n(x) + 1)·x / (36·ℓ·n)`.
pub fn gp_drift_lower_bound(x: f64, n: u32, limit: usize) -> Result<f64, DriftError> {
    if !(x >= 1.0) || n < 2 || limit < n as usize {
        return Err(DriftError::BoundDomain { x, n, limit });
    }
    let n_f = n as f64;
    Ok((x.ln() / n_f.ln() + 1.0) * x / (36.0 * limit as f64 * n_f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    /// `X' = X·(1 − (log_γ X + 1)·δ)`: meets the condition with equality.
    ExactDeterministic,
    /// Drops by a fraction `q = min(1, 4r)` with probability `min(1, 2r/q)`,
    /// giving twice the required expected decrease (capped at the whole state).
    DoubledRandomized,
    /// Deterministic above γ², randomized with doubled drift at or below it.
    MixedRegime,
}

impl ProcessKind {
    pub const ALL: [ProcessKind; 3] = [
        ProcessKind::ExactDeterministic,
        ProcessKind::DoubledRandomized,
        ProcessKind::MixedRegime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::ExactDeterministic => "exact-deterministic",
            ProcessKind::DoubledRandomized => "doubled-randomized",
            ProcessKind::MixedRegime => "mixed-regime",
        }
    }
}

/// A Markov process on `{0} ∪ [1, ∞)` built to satisfy the drift condition
/// for its (γ, δ). Where the condition asks for more than the whole state,
/// the process jumps straight to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticProcessSpec {
    pub kind: ProcessKind,
    pub gamma: f64,
    pub delta: f64,
}

impl SyntheticProcessSpec {
    pub fn new(kind: ProcessKind, gamma: f64, delta: f64) -> Result<Self, DriftError> {
        SmdParams::new(gamma, delta, 0.0)?;
        Ok(SyntheticProcessSpec { kind, gamma, delta })
    }

    /// Required fractional decrease `(log_γ x + 1)·δ` at state `x ≥ 1`.
    pub fn required_fraction(&self, x: f64) -> f64 {
        (x.ln() / self.gamma.ln() + 1.0) * self.delta
    }

    /// Required expected decrease at `x`, capped at `x` itself.
    pub fn required_drift(&self, x: f64) -> f64 {
        self.required_fraction(x).min(1.0) * x
    }

    pub fn step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let r = self.required_fraction(x);
        if r >= 1.0 {
            return 0.0;
        }
        let next = match self.kind {
            ProcessKind::ExactDeterministic => x * (1.0 - r),
            ProcessKind::DoubledRandomized => doubled_step(x, r, rng),
            ProcessKind::MixedRegime => {
                if x > self.gamma * self.gamma {
                    x * (1.0 - r)
                } else {
                    doubled_step(x, r, rng)
                }
            }
        };
        clamp_state(next)
    }
}

fn doubled_step<R: Rng + ?Sized>(x: f64, r: f64, rng: &mut R) -> f64 {
    let q = (4.0 * r).min(1.0);
    let p = (2.0 * r / q).min(1.0);
    if rng.gen_bool(p) {
        x * (1.0 - q)
    } else {
        x
    }
}

/// Values below 1 collapse to 0.
#[inline]
fn clamp_state(x: f64) -> f64 {
    if x < 1.0 {
        0.0
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingTime {
    pub mean: f64,
    /// Two-sided 95% normal-approximation half-width.
    pub half_width: f64,
    pub trials: u64,
}

/// Empirical mean of `min{t : X_t = 0}` over independent trials.
pub fn simulate_hitting_time<R: Rng + ?Sized>(
    spec: &SyntheticProcessSpec,
    x0: f64,
    trials: u64,
    rng: &mut R,
) -> Result<HittingTime, DriftError> {
    check_state(x0)?;
    if trials == 0 {
        return Err(DriftError::NoTrials);
    }
    let mut stats = RunningStats::default();
    for _ in 0..trials {
        let mut x = x0;
        let mut t = 0u64;
        while x != 0.0 {
            if t >= HITTING_TIME_CAP {
                return Err(DriftError::DidNotHit(HITTING_TIME_CAP));
            }
            x = spec.step(x, rng);
            t += 1;
        }
        stats.push(t as f64);
    }
    Ok(HittingTime {
        mean: stats.mean(),
        half_width: Z_TWO_SIDED_95 * stats.std_error(),
        trials,
    })
}

/// Welford accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let d = value - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (value - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation; 0 for fewer than two values.
    pub fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std_dev() / (self.count as f64).sqrt()
        }
    }
}

/// One RLS-GP iteration seen through the fitness potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftStep {
    pub parent_error: u64,
    /// Error of the solution kept after selection.
    pub next_error: u64,
    /// Whether the parent had reached the leaf-count limit.
    pub parent_full: bool,
}

impl DriftStep {
    pub fn decrease(&self) -> f64 {
        self.parent_error as f64 - self.next_error as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftBin {
    pub lo: f64,
    pub hi: f64,
    stats: RunningStats,
}

impl DriftBin {
    pub fn mid(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }

    pub fn count(&self) -> u64 {
        self.stats.count()
    }

    /// Mean one-step decrease; `None` when the bin saw no transitions.
    pub fn mean(&self) -> Option<f64> {
        (self.stats.count() > 0).then(|| self.stats.mean())
    }

    /// Half-width of the interval `mean ± z·se`, given only for bins with at
    /// least [`MIN_BIN_COUNT`] transitions.
    pub fn half_width(&self, z: f64) -> Option<f64> {
        (self.stats.count() >= MIN_BIN_COUNT).then(|| z * self.stats.std_error())
    }

    /// One-sided lower confidence bound `mean − z·se`.
    pub fn lower_confidence_bound(&self, z: f64) -> Option<f64> {
        self.half_width(z).map(|h| self.stats.mean() - h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDrift {
    pub bins: Vec<DriftBin>,
    pub restricted_to_nonfull: bool,
    /// Transitions whose parent error fell outside every bin.
    pub uncovered: u64,
}

/// Edges at `n^(k/2)` for k = 0, 1, …, closed off at `max_fitness + 1`.
pub fn geometric_edges(n: u32, max_fitness: u64) -> Vec<f64> {
    let top = max_fitness as f64 + 1.0;
    let root = (n as f64).sqrt();
    let mut edges = vec![1.0];
    let mut e = root;
    while e < top {
        edges.push(e);
        e *= root;
    }
    edges.push(top);
    edges
}

/// Mean one-step fitness decrease per parent-fitness bin `[edges[i], edges[i+1])`.
pub fn binned_drift_from_traces<'a, I>(
    traces: I,
    edges: &[f64],
    restrict_to_nonfull: bool,
) -> Result<BinnedDrift, DriftError>
where
    I: IntoIterator<Item = &'a [DriftStep]>,
{
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(DriftError::BadEdges);
    }
    let mut bins: Vec<DriftBin> = edges
        .windows(2)
        .map(|w| DriftBin {
            lo: w[0],
            hi: w[1],
            stats: RunningStats::default(),
        })
        .collect();
    let mut uncovered = 0;
    for step in traces.into_iter().flatten() {
        if restrict_to_nonfull && step.parent_full {
            continue;
        }
        let x = step.parent_error as f64;
        // first edge strictly greater than x, minus one
        let idx = edges.partition_point(|&e| e <= x);
        if idx == 0 || idx == edges.len() {
            uncovered += 1;
            continue;
        }
        bins[idx - 1].stats.push(step.decrease());
    }
    Ok(BinnedDrift {
        bins,
        restricted_to_nonfull: restrict_to_nonfull,
        uncovered,
    })
}

/// Writes `bin_mid, count, mean_drift, ci_halfwidth, lower_bound` as TSV.
/// Missing values, including the bound when there is no size limit, are
/// written as `NA`.
pub fn write_drift_report<W: Write>(
    mut out: W,
    binned: &BinnedDrift,
    n: u32,
    limit: Option<usize>,
) -> io::Result<()> {
    writeln!(out, "bin_mid\tcount\tmean_drift\tci_halfwidth\tlower_bound")?;
    let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
    for bin in &binned.bins {
        let bound = limit.and_then(|l| gp_drift_lower_bound(bin.mid(), n, l).ok());
        writeln!(
            out,
            "{:.3}\t{}\t{}\t{}\t{}",
            bin.mid(),
            bin.count(),
            na(bin.mean()),
            na(bin.half_width(Z_TWO_SIDED_95)),
            na(bound)
        )?;
    }
    Ok(())
}
