//! HVL-Prime mutation with a selectable deletion sub-operation.
//!
//! Every call draws the operation, the variable and the function up front
//! (uniform over {INS, DEL, SUB}, x_1..x_n and {AND, OR}), then the node and,
//! for insertions, the child order. An empty parent always becomes the single
//! leaf of the drawn variable.

use rand::Rng;
use thiserror::Error;

use crate::tree::{FunctionKind, NodeRef, SyntaxTree, VarId};

/// Default cap on the number of outcomes `enumerate_neighbors` will produce.
pub const DEFAULT_NEIGHBORHOOD_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VariationError {
    #[error("neighborhood too large: {outcomes} outcomes exceed cap {cap}")]
    NeighborhoodTooLarge { outcomes: usize, cap: usize },
    #[error("neighborhood of the empty tree is not enumerated")]
    EmptyParent,
    #[error("problem size must be at least 1")]
    ZeroVariables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeletionVariant {
    /// Deletes a uniformly chosen leaf together with its parent.
    LeafOnly,
    /// Deletes the subtree of a uniformly chosen node by replacing its parent
    /// with its sibling.
    Subtree,
}

impl DeletionVariant {
    pub fn name(self) -> &'static str {
        match self {
            DeletionVariant::LeafOnly => "leaf",
            DeletionVariant::Subtree => "subtree",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationOp {
    Insert,
    Delete,
    Substitute,
}

impl MutationOp {
    const ALL: [MutationOp; 3] = [MutationOp::Insert, MutationOp::Delete, MutationOp::Substitute];
}

/// A fully specified HVL-Prime move on a particular parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    /// The parent was empty: the drawn variable becomes the root.
    Seed { op: MutationOp, variable: VarId },
    Insert {
        at: NodeRef,
        function: FunctionKind,
        variable: VarId,
        /// Whether the new leaf is the left child of the inserted function.
        leaf_first: bool,
    },
    Delete { at: NodeRef },
    Substitute { at: NodeRef, variable: VarId },
}

impl Move {
    pub fn op(&self) -> MutationOp {
        match *self {
            Move::Seed { op, .. } => op,
            Move::Insert { .. } => MutationOp::Insert,
            Move::Delete { .. } => MutationOp::Delete,
            Move::Substitute { .. } => MutationOp::Substitute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationOutcome {
    pub offspring: SyntaxTree,
    pub op: MutationOp,
    pub inserted_function: Option<FunctionKind>,
    pub inserted_variable: Option<VarId>,
    pub leaves_removed: usize,
    pub applied: Move,
}

impl MutationOutcome {
    /// True for an accepted-able insertion of an OR node into a nonempty tree.
    pub fn inserts_or(&self) -> bool {
        self.inserted_function == Some(FunctionKind::Or)
    }
}

/// Applies a move to `parent`. The move must have been drawn for this parent.
pub fn apply_move(parent: &SyntaxTree, mv: Move) -> MutationOutcome {
    match mv {
        Move::Seed { op, variable } => MutationOutcome {
            offspring: SyntaxTree::leaf(variable),
            op,
            inserted_function: None,
            inserted_variable: Some(variable),
            leaves_removed: 0,
            applied: mv,
        },
        Move::Insert {
            at,
            function,
            variable,
            leaf_first,
        } => {
            let displaced = parent.subtree(at).expect("move drawn for this parent");
            let leaf = SyntaxTree::leaf(variable);
            let joined = if leaf_first {
                SyntaxTree::join(function, &leaf, &displaced)
            } else {
                SyntaxTree::join(function, &displaced, &leaf)
            };
            MutationOutcome {
                offspring: parent.replace_subtree(at, &joined).expect("valid splice"),
                op: MutationOp::Insert,
                inserted_function: Some(function),
                inserted_variable: Some(variable),
                leaves_removed: 0,
                applied: mv,
            }
        }
        Move::Delete { at } => {
            let removed = parent.subtree_leaf_count(at).expect("move drawn for this parent");
            let offspring = match parent.parent(at).expect("valid ref") {
                None => SyntaxTree::empty(),
                Some((up, _)) => {
                    let sibling = parent.sibling(at).expect("valid ref").expect("non-root");
                    let kept = parent.subtree(sibling).expect("valid ref");
                    parent.replace_subtree(up, &kept).expect("valid splice")
                }
            };
            MutationOutcome {
                offspring,
                op: MutationOp::Delete,
                inserted_function: None,
                inserted_variable: None,
                leaves_removed: removed,
                applied: mv,
            }
        }
        Move::Substitute { at, variable } => {
            let offspring = parent
                .replace_subtree(at, &SyntaxTree::leaf(variable))
                .expect("valid splice");
            MutationOutcome {
                offspring,
                op: MutationOp::Substitute,
                inserted_function: None,
                inserted_variable: Some(variable),
                leaves_removed: 0,
                applied: mv,
            }
        }
    }
}

/// Draws a move for `parent` with the HVL-Prime distribution.
pub fn draw_move<R: Rng + ?Sized>(
    parent: &SyntaxTree,
    variant: DeletionVariant,
    n: u32,
    rng: &mut R,
) -> Move {
    assert!(n >= 1, "problem size must be at least 1");
    let op = MutationOp::ALL[rng.gen_range(0..3)];
    let variable = VarId::new(rng.gen_range(1..=n)).expect("n within range");
    let function = FunctionKind::ALL[rng.gen_range(0..2)];
    if parent.is_empty() {
        return Move::Seed { op, variable };
    }
    match op {
        MutationOp::Insert => Move::Insert {
            at: parent.uniform_random_node(rng).expect("nonempty"),
            function,
            variable,
            leaf_first: rng.gen_bool(0.5),
        },
        MutationOp::Delete => Move::Delete {
            at: match variant {
                DeletionVariant::LeafOnly => parent.uniform_random_leaf(rng),
                DeletionVariant::Subtree => parent.uniform_random_node(rng),
            }
            .expect("nonempty"),
        },
        MutationOp::Substitute => Move::Substitute {
            at: parent.uniform_random_leaf(rng).expect("nonempty"),
            variable,
        },
    }
}

/// One HVL-Prime mutation of `parent` over variables x_1..x_n.
pub fn hvl_prime<R: Rng + ?Sized>(
    parent: &SyntaxTree,
    variant: DeletionVariant,
    n: u32,
    rng: &mut R,
) -> MutationOutcome {
    let mv = draw_move(parent, variant, n, rng);
    apply_move(parent, mv)
}

/// Number of distinct moves of a nonempty parent.
pub fn neighborhood_size(parent: &SyntaxTree, variant: DeletionVariant, n: u32) -> usize {
    let nodes = parent.node_count();
    let leaves = parent.leaf_count();
    let n = n as usize;
    let deletions = match variant {
        DeletionVariant::LeafOnly => leaves,
        DeletionVariant::Subtree => nodes,
    };
    4 * nodes * n + deletions + leaves * n
}

/// Calls `visit` with every distinct move of a nonempty parent and its exact
/// probability. Insertions are skipped when `with_inserts` is false; the
/// remaining probabilities are unchanged.
pub fn visit_moves<F: FnMut(Move, f64)>(
    parent: &SyntaxTree,
    variant: DeletionVariant,
    n: u32,
    with_inserts: bool,
    mut visit: F,
) {
    let nodes = parent.node_count() as f64;
    let leaves = parent.leaf_count() as f64;
    let nf = n as f64;
    let vars = (1..=n).map(|i| VarId::new(i).expect("n within range"));

    if with_inserts {
        let p = 1.0 / (3.0 * nodes * nf * 2.0 * 2.0);
        for at in (0..parent.node_count()).map(NodeRef::from_preorder) {
            for function in FunctionKind::ALL {
                for variable in vars.clone() {
                    for leaf_first in [false, true] {
                        visit(
                            Move::Insert {
                                at,
                                function,
                                variable,
                                leaf_first,
                            },
                            p,
                        );
                    }
                }
            }
        }
    }

    match variant {
        DeletionVariant::LeafOnly => {
            let p = 1.0 / (3.0 * leaves);
            for (at, _) in parent.leaves() {
                visit(Move::Delete { at }, p);
            }
        }
        DeletionVariant::Subtree => {
            let p = 1.0 / (3.0 * nodes);
            for i in 0..parent.node_count() {
                visit(Move::Delete { at: NodeRef::from_preorder(i) }, p);
            }
        }
    }

    let p = 1.0 / (3.0 * leaves * nf);
    for (at, _) in parent.leaves() {
        for variable in vars.clone() {
            visit(Move::Substitute { at, variable }, p);
        }
    }
}

/// An outcome of one HVL-Prime mutation with its probability.
#[derive(Debug, Clone)]
pub struct Neighbor {
    pub outcome: MutationOutcome,
    pub probability: f64,
    /// Whether the offspring respects the leaf-count limit.
    pub within_limit: bool,
}

/// Every distinct (op, node, variable, function, order) outcome of HVL-Prime
/// on a nonempty parent, with exact probabilities.
///
/// Draws that cannot influence the result (the function for DEL and SUB, the
/// variable for DEL) are summed into a single outcome.
pub fn enumerate_neighbors(
    parent: &SyntaxTree,
    variant: DeletionVariant,
    n: u32,
    limit: Option<usize>,
    cap: usize,
) -> Result<Vec<Neighbor>, VariationError> {
    if n == 0 {
        return Err(VariationError::ZeroVariables);
    }
    if parent.is_empty() {
        return Err(VariationError::EmptyParent);
    }
    let outcomes = neighborhood_size(parent, variant, n);
    if outcomes > cap {
        return Err(VariationError::NeighborhoodTooLarge { outcomes, cap });
    }
    let mut out = Vec::with_capacity(outcomes);
    visit_moves(parent, variant, n, true, |mv, probability| {
        let outcome = apply_move(parent, mv);
        let within_limit = limit.map_or(true, |l| outcome.offspring.leaf_count() <= l);
        out.push(Neighbor {
            outcome,
            probability,
            within_limit,
        });
    });
    Ok(out)
}

/// Outcome distribution from an empty parent: x_k with probability 1/n each.
pub fn seed_distribution(n: u32) -> Vec<(SyntaxTree, f64)> {
    (1..=n)
        .map(|i| (SyntaxTree::leaf(VarId::new(i).expect("n within range")), 1.0 / n as f64))
        .collect()
}
