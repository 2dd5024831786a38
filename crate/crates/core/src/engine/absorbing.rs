//! Detection and construction of trap states under the CTT fitness.
//!
//! A tree is absorbing when RLS-GP can never again improve on it. Neutral
//! moves (variable renamings, equal-error deletions) may still be accepted,
//! so the test explores every tree reachable through accepted equal-error
//! moves and fails as soon as one of them has a strictly better accepted
//! neighbour.
//!
//! AND_n and HVL-Prime are both symmetric under permutations of the
//! variables, so the search runs over trees relabelled by first appearance.

use std::collections::{HashMap, HashSet, VecDeque};

use super::EngineError;
use crate::fitness::ctt_error;
use crate::tree::{Node, SyntaxTree, VarId};
use crate::variation::{
    apply_move, neighborhood_size, visit_moves, DeletionVariant, VariationError, DEFAULT_NEIGHBORHOOD_CAP,
};

/// Largest neutral closure [`is_absorbing`] explores before giving up.
pub const DEFAULT_CLOSURE_CAP: usize = 20_000;

/// Whether RLS-GP with size limit `limit` can never improve on `tree`.
///
/// The empty tree and optimal trees are never absorbing.
pub fn is_absorbing(tree: &SyntaxTree, variant: DeletionVariant, n: u32, limit: usize) -> Result<bool, EngineError> {
    is_absorbing_with_cap(tree, variant, n, limit, DEFAULT_CLOSURE_CAP)
}

pub fn is_absorbing_with_cap(
    tree: &SyntaxTree,
    variant: DeletionVariant,
    n: u32,
    limit: usize,
    closure_cap: usize,
) -> Result<bool, EngineError> {
    if tree.leaf_count() > limit {
        return Err(EngineError::Config(format!(
            "tree has {} leaves, above the limit {limit}",
            tree.leaf_count()
        )));
    }
    let level = ctt_error(tree, n)?.count;
    if tree.is_empty() || level == 0 {
        return Ok(false);
    }

    let start = relabel_by_first_appearance(tree);
    let mut members: HashSet<SyntaxTree> = HashSet::from([start.clone()]);
    let mut worse: HashSet<SyntaxTree> = HashSet::new();
    let mut queue = VecDeque::from([start]);
    let mut moves = Vec::new();
    while let Some(current) = queue.pop_front() {
        let outcomes = neighborhood_size(&current, variant, n);
        if outcomes > DEFAULT_NEIGHBORHOOD_CAP {
            return Err(VariationError::NeighborhoodTooLarge {
                outcomes,
                cap: DEFAULT_NEIGHBORHOOD_CAP,
            }
            .into());
        }
        let room = current.leaf_count() < limit;
        moves.clear();
        visit_moves(&current, variant, n, room, |mv, _| moves.push(mv));
        for &mv in &moves {
            let offspring = apply_move(&current, mv).offspring;
            if offspring.leaf_count() > limit {
                continue;
            }
            let offspring = relabel_by_first_appearance(&offspring);
            if members.contains(&offspring) || worse.contains(&offspring) {
                continue;
            }
            let e = ctt_error(&offspring, n)?.count;
            if e < level {
                return Ok(false);
            }
            if e > level {
                worse.insert(offspring);
                continue;
            }
            if members.len() >= closure_cap {
                return Err(EngineError::ClosureTooLarge(closure_cap));
            }
            members.insert(offspring.clone());
            queue.push_back(offspring);
        }
    }
    Ok(true)
}

/// Renames variables to x1, x2, … in preorder order of first occurrence.
/// Two trees get the same result exactly when one is a variable renaming of
/// the other.
fn relabel_by_first_appearance(tree: &SyntaxTree) -> SyntaxTree {
    let mut names: HashMap<VarId, VarId> = HashMap::new();
    let nodes = tree
        .nodes()
        .iter()
        .map(|node| match *node {
            Node::Leaf(v) => {
                let next = names.len() as u32 + 1;
                Node::Leaf(*names.entry(v).or_insert_with(|| VarId::new(next).expect("small index")))
            }
            func => func,
        })
        .collect();
    SyntaxTree::from_preorder(nodes).expect("relabelling keeps the shape")
}

/// An OR-chain of `limit / 2` copies of `x1 ∧ x2`: full, suboptimal for
/// `n >= 3`, and absorbing under leaf-only deletion.
pub fn construct_theorem1_tree(n: u32, limit: usize) -> Result<SyntaxTree, EngineError> {
    if limit < 4 || limit % 2 != 0 {
        return Err(EngineError::Construction(format!(
            "limit must be even and at least 4, got {limit}"
        )));
    }
    if n < 3 {
        return Err(EngineError::Construction(format!("n must be at least 3, got {n}")));
    }
    let x = |i| SyntaxTree::leaf(VarId::new(i).expect("small index"));
    let pair = SyntaxTree::and(&x(1), &x(2));
    let mut tree = pair.clone();
    for _ in 1..limit / 2 {
        tree = SyntaxTree::or(&tree, &pair);
    }
    Ok(tree)
}

/// A locally optimal tree observed under leaf-only deletion, with a problem
/// size and limit at which it is absorbing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownOptimum {
    pub tree: SyntaxTree,
    pub n: u32,
    pub limit: usize,
}

pub fn known_local_optima() -> Vec<KnownOptimum> {
    [
        ("(or (and x3 x2) (and x2 x3))", 4, 4),
        ("(and (or (and (and x2 x3) x5) (and x2 (and x3 x5))) x1)", 6, 7),
        (
            "(and (or (and x3 (and x5 x7)) (and x3 (and x7 x5))) (and x2 (and x8 x4)))",
            8,
            9,
        ),
    ]
    .into_iter()
    .map(|(text, n, limit)| KnownOptimum {
        tree: text.parse().expect("valid literal"),
        n,
        limit,
    })
    .collect()
}
