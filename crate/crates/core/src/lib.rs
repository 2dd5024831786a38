//! Runtime-analysis laboratory for RLS-GP evolving the conjunction AND_n
//! from the function set {AND, OR}.
//!
//! - [`tree`]: immutable binary syntax trees with preorder addressing and an
//!   s-expression text form.
//! - [`variation`]: the HVL-Prime mutation with leaf-only or subtree deletion,
//!   and exact neighbourhood enumeration.
//! - [`fitness`]: complete-truth-table and sampled error against AND_n, and
//!   exact generalisation error by on-set counting.
//! - [`engine`]: the elitist RLS-GP loop, trap detection and known local optima.
//! - [`drift`]: drift bounds, synthetic processes and empirical drift.
//! - [`harness`]: seeded parallel experiment runner with CSV/TSV output.

pub mod tree;

pub use tree::{FunctionKind, Node, NodeRef, Step, SyntaxTree, TreeError, VarId};
pub mod fitness;
pub mod variation;
pub mod drift;
pub mod engine;
pub mod harness;
