//! Exact generalisation error through on-set counting.
//!
//! Trees over {AND, OR} are monotone, so they are true on the all-ones row,
//! which is the only row where AND_n is true. The error probability is
//! therefore `|on-set| / 2^d − 2^−n` where the on-set is counted over the d
//! distinct variables of the tree. Counting uses Shannon expansion over a
//! hash-consed formula DAG with memoised cofactors.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use rand::Rng;

use super::sample::{sample_rows, sampled_error};
use super::{check_variables, FitnessError};
use crate::tree::{FunctionKind, Node, SyntaxTree};

pub const DEFAULT_MAX_ONSET_VARIABLES: usize = 30;

/// Rows drawn for the Monte Carlo fallback.
pub const ESTIMATE_SAMPLES: usize = 1_000_000;

/// An error probability held exactly as `numerator / 2^denominator_log2`.
#[derive(Debug, Clone)]
pub struct GeneralisationError {
    numerator: BigUint,
    denominator_log2: u32,
    approx: f64,
}

impl GeneralisationError {
    /// `count / 2^n`.
    pub fn from_count(count: u64, n: u32) -> Self {
        let approx = count as f64 * 2f64.powi(-(n as i32));
        GeneralisationError {
            numerator: BigUint::from(count),
            denominator_log2: n,
            approx,
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn denominator_log2(&self) -> u32 {
        self.denominator_log2
    }

    pub fn value(&self) -> f64 {
        self.approx
    }

    /// Whether this equals `count / 2^n` exactly.
    pub fn equals_count(&self, count: u64, n: u32) -> bool {
        *self == Self::from_count(count, n)
    }
}

impl PartialEq for GeneralisationError {
    fn eq(&self, other: &Self) -> bool {
        let shift = self.denominator_log2.max(other.denominator_log2);
        (&self.numerator << (shift - self.denominator_log2))
            == (&other.numerator << (shift - other.denominator_log2))
    }
}

impl Eq for GeneralisationError {}

impl fmt::Display for GeneralisationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.approx)
    }
}

const FALSE: u32 = 0;
const TRUE: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Term {
    False,
    True,
    Var(u32),
    And(u32, u32),
    Or(u32, u32),
}

struct Counter {
    terms: Vec<Term>,
    interned: HashMap<Term, u32>,
    cofactors: HashMap<(u32, u32, bool), u32>,
    counts: HashMap<(u32, u32), u64>,
    levels: u32,
}

impl Counter {
    fn new(levels: u32) -> Self {
        let mut c = Counter {
            terms: Vec::new(),
            interned: HashMap::new(),
            cofactors: HashMap::new(),
            counts: HashMap::new(),
            levels,
        };
        c.intern(Term::False);
        c.intern(Term::True);
        c
    }

    fn intern(&mut self, term: Term) -> u32 {
        if let Some(&id) = self.interned.get(&term) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(term);
        self.interned.insert(term, id);
        id
    }

    fn join(&mut self, kind: FunctionKind, a: u32, b: u32) -> u32 {
        let (a, b) = (a.min(b), a.max(b));
        match kind {
            FunctionKind::And => match (a, b) {
                (FALSE, _) => FALSE,
                (TRUE, x) => x,
                (x, y) if x == y => x,
                _ => self.intern(Term::And(a, b)),
            },
            FunctionKind::Or => match (a, b) {
                (TRUE, _) => TRUE,
                (FALSE, x) => x,
                (x, y) if x == y => x,
                _ => self.intern(Term::Or(a, b)),
            },
        }
    }

    fn cofactor(&mut self, f: u32, level: u32, value: bool) -> u32 {
        if let Some(&r) = self.cofactors.get(&(f, level, value)) {
            return r;
        }
        let r = match self.terms[f as usize] {
            Term::False | Term::True => f,
            Term::Var(l) if l == level => {
                if value {
                    TRUE
                } else {
                    FALSE
                }
            }
            Term::Var(_) => f,
            Term::And(a, b) => {
                let (a, b) = (self.cofactor(a, level, value), self.cofactor(b, level, value));
                self.join(FunctionKind::And, a, b)
            }
            Term::Or(a, b) => {
                let (a, b) = (self.cofactor(a, level, value), self.cofactor(b, level, value));
                self.join(FunctionKind::Or, a, b)
            }
        };
        self.cofactors.insert((f, level, value), r);
        r
    }

    /// Satisfying assignments of `f` over the variables at `level..levels`.
    fn count(&mut self, f: u32, level: u32) -> u64 {
        match f {
            FALSE => return 0,
            TRUE => return 1u64 << (self.levels - level),
            _ => {}
        }
        if let Some(&c) = self.counts.get(&(f, level)) {
            return c;
        }
        let low = self.cofactor(f, level, false);
        let high = self.cofactor(f, level, true);
        let c = self.count(low, level + 1) + self.count(high, level + 1);
        self.counts.insert((f, level), c);
        c
    }
}

/// Number of assignments to the tree's distinct variables that make it true,
/// together with the number of those variables.
pub fn on_set_count(tree: &SyntaxTree, max_distinct: usize) -> Result<(u64, u32), FitnessError> {
    if tree.is_empty() {
        return Err(FitnessError::EmptyTree);
    }
    let vars: Vec<u32> = tree.distinct_variables().iter().map(|v| v.index()).collect();
    if vars.len() > max_distinct || vars.len() > 62 {
        return Err(FitnessError::TooManyDistinct(vars.len(), max_distinct.min(62)));
    }
    let level_of: HashMap<u32, u32> = vars.iter().enumerate().map(|(l, &v)| (v, l as u32)).collect();
    let mut counter = Counter::new(vars.len() as u32);
    let mut stack: Vec<u32> = Vec::with_capacity(tree.leaf_count());
    for node in tree.nodes().iter().rev() {
        match *node {
            Node::Leaf(v) => {
                let id = counter.intern(Term::Var(level_of[&v.index()]));
                stack.push(id);
            }
            Node::Func(kind) => {
                let left = stack.pop().expect("well-formed");
                let right = stack.pop().expect("well-formed");
                let id = counter.join(kind, left, right);
                stack.push(id);
            }
        }
    }
    let root = stack[0];
    Ok((counter.count(root, 0), vars.len() as u32))
}

/// Exact probability that `tree` disagrees with AND_n on a uniform row.
pub fn exact_generalisation_error(tree: &SyntaxTree, n: u32) -> Result<GeneralisationError, FitnessError> {
    exact_generalisation_error_with_limit(tree, n, DEFAULT_MAX_ONSET_VARIABLES)
}

pub fn exact_generalisation_error_with_limit(
    tree: &SyntaxTree,
    n: u32,
    max_distinct: usize,
) -> Result<GeneralisationError, FitnessError> {
    check_variables(tree, n)?;
    let (count, d) = on_set_count(tree, max_distinct)?;
    // (count / 2^d) − 2^−n  =  (count · 2^(n−d) − 1) / 2^n
    let numerator = (BigUint::from(count) << (n - d)) - 1u32;
    let approx = count as f64 * 2f64.powi(-(d as i32)) - 2f64.powi(-(n as i32));
    Ok(GeneralisationError {
        numerator,
        denominator_log2: n,
        approx,
    })
}

/// Monte Carlo estimate of the generalisation error from `samples` fresh rows.
pub fn estimate_generalisation_error<R: Rng + ?Sized>(
    tree: &SyntaxTree,
    n: u32,
    samples: usize,
    rng: &mut R,
) -> Result<f64, FitnessError> {
    if tree.is_empty() {
        return Err(FitnessError::EmptyTree);
    }
    if samples == 0 {
        return Err(FitnessError::EmptySample);
    }
    const BATCH: usize = 1 << 16;
    let mut wrong = 0u64;
    let mut left = samples;
    while left > 0 {
        let size = left.min(BATCH);
        let batch = sample_rows(n, size, rng)?;
        wrong += sampled_error(tree, &batch)?.count;
        left -= size;
    }
    Ok(wrong as f64 / samples as f64)
}
