//! Binary syntax trees over the function set {AND, OR} and variable leaves.
//!
//! A tree is stored as its preorder node sequence. Every internal node is
//! followed by its left subtree and then its right subtree, so a subtree is
//! always a contiguous slice and node addresses are preorder indices.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// Largest variable index accepted by tree operations.
pub const MAX_VARIABLES: u32 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("variable index {0} out of range 1..={MAX_VARIABLES}")]
    VariableOutOfRange(u64),
    #[error("no nodes: the tree is empty")]
    NoNodes,
    #[error("node reference {0} does not resolve in a tree of {1} nodes")]
    InvalidNodeRef(usize, usize),
    #[error("path does not resolve: step {0} descends from a leaf")]
    InvalidPath(usize),
    #[error("node sequence is not a well-formed preorder binary tree")]
    Malformed,
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
}

/// A leaf variable `x_k`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(u32);

impl VarId {
    pub fn new(index: u32) -> Result<Self, TreeError> {
        if index == 0 || index > MAX_VARIABLES {
            return Err(TreeError::VariableOutOfRange(index as u64));
        }
        Ok(VarId(index))
    }

    #[inline]
    pub fn index(self) -> u32 {
        self.0
    }

    /// Zero-based bit position of this variable in an input row.
    #[inline]
    pub fn bit(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionKind {
    And,
    Or,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 2] = [FunctionKind::And, FunctionKind::Or];

    #[inline]
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            FunctionKind::And => a && b,
            FunctionKind::Or => a || b,
        }
    }

    #[inline]
    pub fn apply_word(self, a: u64, b: u64) -> u64 {
        match self {
            FunctionKind::And => a & b,
            FunctionKind::Or => a | b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::And => "and",
            FunctionKind::Or => "or",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Func(FunctionKind),
    Leaf(VarId),
}

impl Node {
    #[inline]
    pub fn is_leaf(self) -> bool {
        matches!(self, Node::Leaf(_))
    }
}

/// One step of a root-to-node path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Left,
    Right,
}

/// Address of a node: its preorder index in one particular tree.
///
/// A `NodeRef` is only meaningful for the tree it was obtained from; any
/// structural change invalidates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef(usize);

impl NodeRef {
    pub const ROOT: NodeRef = NodeRef(0);

    #[inline]
    pub fn preorder_index(self) -> usize {
        self.0
    }

    /// Callers must pass an index below the node count of the tree it is used with.
    #[inline]
    pub(crate) fn from_preorder(index: usize) -> NodeRef {
        NodeRef(index)
    }

    /// Follows `steps` from the root of `tree`.
    pub fn from_path(tree: &SyntaxTree, steps: &[Step]) -> Result<NodeRef, TreeError> {
        if tree.is_empty() {
            return Err(TreeError::NoNodes);
        }
        let mut at = 0;
        for (k, step) in steps.iter().enumerate() {
            match tree.nodes[at] {
                Node::Leaf(_) => return Err(TreeError::InvalidPath(k)),
                Node::Func(_) => {
                    at = match step {
                        Step::Left => at + 1,
                        Step::Right => tree.subtree_end(at + 1),
                    }
                }
            }
        }
        Ok(NodeRef(at))
    }

    /// The root-to-node path of this reference within `tree`.
    pub fn path(self, tree: &SyntaxTree) -> Result<Vec<Step>, TreeError> {
        tree.check_ref(self)?;
        let mut steps = Vec::new();
        let mut at = 0;
        while at != self.0 {
            let left = at + 1;
            let right = tree.subtree_end(left);
            if self.0 < right {
                steps.push(Step::Left);
                at = left;
            } else {
                steps.push(Step::Right);
                at = right;
            }
        }
        Ok(steps)
    }
}

/// A strict binary tree of AND/OR nodes over variable leaves; possibly empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SyntaxTree {
    nodes: Vec<Node>,
}

impl SyntaxTree {
    pub fn empty() -> Self {
        SyntaxTree { nodes: Vec::new() }
    }

    pub fn leaf(var: VarId) -> Self {
        SyntaxTree {
            nodes: vec![Node::Leaf(var)],
        }
    }

    /// Panics if either operand is empty.
    pub fn join(kind: FunctionKind, left: &SyntaxTree, right: &SyntaxTree) -> Self {
        assert!(
            !left.is_empty() && !right.is_empty(),
            "cannot join an empty tree"
        );
        let mut nodes = Vec::with_capacity(1 + left.nodes.len() + right.nodes.len());
        nodes.push(Node::Func(kind));
        nodes.extend_from_slice(&left.nodes);
        nodes.extend_from_slice(&right.nodes);
        SyntaxTree { nodes }
    }

    pub fn and(left: &SyntaxTree, right: &SyntaxTree) -> Self {
        Self::join(FunctionKind::And, left, right)
    }

    pub fn or(left: &SyntaxTree, right: &SyntaxTree) -> Self {
        Self::join(FunctionKind::Or, left, right)
    }

    /// Left-deep conjunction of the given variables; empty input gives the
    /// empty tree.
    pub fn conjunction<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        vars.into_iter()
            .map(SyntaxTree::leaf)
            .reduce(|acc, leaf| SyntaxTree::and(&acc, &leaf))
            .unwrap_or_default()
    }

    /// Conjunction x_1 ∧ … ∧ x_n.
    pub fn target_conjunction(n: u32) -> Self {
        Self::conjunction((1..=n).map(|i| VarId::new(i).expect("n within MAX_VARIABLES")))
    }

    /// Builds a tree from a preorder node sequence, validating its shape.
    pub fn from_preorder(nodes: Vec<Node>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Ok(SyntaxTree::empty());
        }
        let mut need: usize = 1;
        for (i, node) in nodes.iter().enumerate() {
            if need == 0 {
                return Err(TreeError::Malformed);
            }
            match node {
                Node::Func(_) => need += 1,
                Node::Leaf(_) => need -= 1,
            }
            if need == 0 && i + 1 != nodes.len() {
                return Err(TreeError::Malformed);
            }
        }
        if need != 0 {
            return Err(TreeError::Malformed);
        }
        Ok(SyntaxTree { nodes })
    }

    #[inline]
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn leaf_count(&self) -> usize {
        // strict binary: nodes = 2 * leaves - 1
        (self.nodes.len() + 1) / 2
    }

    pub fn or_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Func(FunctionKind::Or)))
            .count()
    }

    pub fn distinct_variables(&self) -> BTreeSet<VarId> {
        self.leaves().map(|(_, v)| v).collect()
    }

    /// Largest variable index appearing in a leaf, 0 for the empty tree.
    pub fn max_variable(&self) -> u32 {
        self.leaves().map(|(_, v)| v.index()).max().unwrap_or(0)
    }

    /// Leaves in preorder together with their addresses.
    pub fn leaves(&self) -> impl Iterator<Item = (NodeRef, VarId)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Leaf(v) => Some((NodeRef(i), *v)),
            Node::Func(_) => None,
        })
    }

    pub fn node(&self, at: NodeRef) -> Result<Node, TreeError> {
        self.check_ref(at)?;
        Ok(self.nodes[at.0])
    }

    fn check_ref(&self, at: NodeRef) -> Result<(), TreeError> {
        if at.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(TreeError::InvalidNodeRef(at.0, self.nodes.len()))
        }
    }

    /// One past the last preorder index of the subtree rooted at `start`.
    pub(crate) fn subtree_end(&self, start: usize) -> usize {
        let mut need: usize = 1;
        let mut i = start;
        while need > 0 {
            match self.nodes[i] {
                Node::Func(_) => need += 1,
                Node::Leaf(_) => need -= 1,
            }
            i += 1;
        }
        i
    }

    pub fn subtree(&self, at: NodeRef) -> Result<SyntaxTree, TreeError> {
        self.check_ref(at)?;
        let end = self.subtree_end(at.0);
        Ok(SyntaxTree {
            nodes: self.nodes[at.0..end].to_vec(),
        })
    }

    /// Number of leaves in the subtree rooted at `at`.
    pub fn subtree_leaf_count(&self, at: NodeRef) -> Result<usize, TreeError> {
        self.check_ref(at)?;
        let end = self.subtree_end(at.0);
        Ok((end - at.0 + 1) / 2)
    }

    /// Parent address and whether `at` is the left child. `None` for the root.
    pub fn parent(&self, at: NodeRef) -> Result<Option<(NodeRef, Step)>, TreeError> {
        self.check_ref(at)?;
        if at.0 == 0 {
            return Ok(None);
        }
        let mut cur = 0;
        loop {
            let left = cur + 1;
            let right = self.subtree_end(left);
            if at.0 == left {
                return Ok(Some((NodeRef(cur), Step::Left)));
            }
            if at.0 == right {
                return Ok(Some((NodeRef(cur), Step::Right)));
            }
            cur = if at.0 < right { left } else { right };
        }
    }

    /// Sibling address of a non-root node.
    pub fn sibling(&self, at: NodeRef) -> Result<Option<NodeRef>, TreeError> {
        Ok(self.parent(at)?.map(|(p, side)| {
            let left = p.0 + 1;
            match side {
                Step::Left => NodeRef(self.subtree_end(left)),
                Step::Right => NodeRef(left),
            }
        }))
    }

    /// Returns a copy of this tree with the subtree at `at` replaced.
    pub fn replace_subtree(&self, at: NodeRef, with: &SyntaxTree) -> Result<SyntaxTree, TreeError> {
        self.check_ref(at)?;
        let end = self.subtree_end(at.0);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - at.0) + with.nodes.len());
        nodes.extend_from_slice(&self.nodes[..at.0]);
        nodes.extend_from_slice(&with.nodes);
        nodes.extend_from_slice(&self.nodes[end..]);
        // Splicing an empty tree anywhere but the root would break the shape.
        if with.is_empty() && !(at.0 == 0 && end == self.nodes.len()) {
            return Err(TreeError::Malformed);
        }
        Ok(SyntaxTree { nodes })
    }

    /// Address of the `k`-th leaf in preorder.
    pub fn nth_leaf(&self, k: usize) -> Result<NodeRef, TreeError> {
        self.leaves()
            .nth(k)
            .map(|(r, _)| r)
            .ok_or(TreeError::InvalidNodeRef(k, self.leaf_count()))
    }

    /// Each of the `2·leaf_count − 1` nodes with equal probability.
    pub fn uniform_random_node<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NodeRef, TreeError> {
        if self.is_empty() {
            return Err(TreeError::NoNodes);
        }
        Ok(NodeRef(rng.gen_range(0..self.nodes.len())))
    }

    /// Each leaf with equal probability.
    pub fn uniform_random_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NodeRef, TreeError> {
        if self.is_empty() {
            return Err(TreeError::NoNodes);
        }
        let k = rng.gen_range(0..self.leaf_count());
        self.nth_leaf(k)
    }
}

impl fmt::Display for SyntaxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nodes.is_empty() {
            return f.write_str("()");
        }
        // Pending close-parens per open function node, counted in children left.
        let mut open: Vec<u8> = Vec::new();
        for node in &self.nodes {
            if !open.is_empty() {
                f.write_str(" ")?;
            }
            match node {
                Node::Func(kind) => {
                    write!(f, "({}", kind.name())?;
                    open.push(2);
                    continue;
                }
                Node::Leaf(v) => write!(f, "{v}")?,
            }
            while let Some(top) = open.last_mut() {
                *top -= 1;
                if *top > 0 {
                    break;
                }
                f.write_str(")")?;
                open.pop();
            }
        }
        Ok(())
    }
}

impl FromStr for SyntaxTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Parser::new(s).parse_tree()
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> TreeError {
        TreeError::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn parse_tree(mut self) -> Result<SyntaxTree, TreeError> {
        self.skip_ws();
        let start = self.pos;
        if self.src[self.pos..].starts_with('(') {
            self.pos += 1;
            self.skip_ws();
            if self.peek() == Some(b')') {
                self.pos += 1;
                self.finish()?;
                return Ok(SyntaxTree::empty());
            }
            self.pos = start;
        }
        let mut nodes = Vec::new();
        self.parse_expr(&mut nodes)?;
        self.finish()?;
        Ok(SyntaxTree { nodes })
    }

    fn finish(&mut self) -> Result<(), TreeError> {
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.err("trailing input"));
        }
        Ok(())
    }

    fn word(&mut self) -> &'a str {
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn parse_expr(&mut self, nodes: &mut Vec<Node>) -> Result<(), TreeError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let at = self.pos;
                let kind = match self.word() {
                    "and" => FunctionKind::And,
                    "or" => FunctionKind::Or,
                    "" => return Err(self.err("expected `and` or `or`")),
                    other => {
                        self.pos = at;
                        return Err(self.err(format!("unknown function `{other}`")));
                    }
                };
                nodes.push(Node::Func(kind));
                self.parse_expr(nodes)?;
                self.parse_expr(nodes)?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(())
            }
            Some(b')') => Err(self.err("unexpected `)`")),
            Some(_) => {
                let at = self.pos;
                let word = self.word();
                let index = word
                    .strip_prefix('x')
                    .and_then(|digits| digits.parse::<u64>().ok())
                    .ok_or_else(|| TreeError::Parse {
                        position: at,
                        message: format!("expected variable `x<k>`, found `{word}`"),
                    })?;
                let var = u32::try_from(index)
                    .ok()
                    .and_then(|i| VarId::new(i).ok())
                    .ok_or(TreeError::Parse {
                        position: at,
                        message: format!("variable index {index} out of range"),
                    })?;
                nodes.push(Node::Leaf(var));
                Ok(())
            }
        }
    }
}


#[cfg(test)]
mod tests {
    use super::testing::arb_tree;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn x(i: u32) -> SyntaxTree {
        SyntaxTree::leaf(VarId::new(i).unwrap())
    }

    fn first_stuck_tree() -> SyntaxTree {
        SyntaxTree::or(&SyntaxTree::and(&x(3), &x(2)), &SyntaxTree::and(&x(2), &x(3)))
    }

    fn vars(ix: &[u32]) -> BTreeSet<VarId> {
        ix.iter().map(|&i| VarId::new(i).unwrap()).collect()
    }

    #[test]
    fn counts_on_small_trees() {
        let empty = SyntaxTree::empty();
        assert_eq!(empty.leaf_count(), 0);
        assert_eq!(empty.node_count(), 0);
        assert!(empty.distinct_variables().is_empty());
        assert_eq!(x(1).leaf_count(), 1);

        let t = first_stuck_tree();
        assert_eq!(t.leaf_count(), 4);
        assert_eq!(t.distinct_variables(), vars(&[2, 3]));
        assert_eq!(t.or_count(), 1);

        let conj = SyntaxTree::target_conjunction(6);
        assert_eq!(conj.distinct_variables(), vars(&[1, 2, 3, 4, 5, 6]));
        assert_eq!(conj.or_count(), 0);
    }

    #[test]
    fn or_count_of_nested_or_branch() {
        let t: SyntaxTree = "(and (or (and x3 (and x5 x7)) (and x3 (and x7 x5))) (and x2 (and x8 x4)))"
            .parse()
            .unwrap();
        assert_eq!(t.or_count(), 1);
        assert_eq!(t.leaf_count(), 9);
    }

    #[test]
    fn var_id_bounds() {
        assert!(VarId::new(0).is_err());
        assert!(VarId::new(MAX_VARIABLES).is_ok());
        assert!(VarId::new(MAX_VARIABLES + 1).is_err());
    }

    #[test]
    fn serialize_and_parse_examples() {
        assert_eq!(SyntaxTree::and(&x(1), &x(2)).to_string(), "(and x1 x2)");
        assert_eq!(SyntaxTree::empty().to_string(), "()");
        assert_eq!("()".parse::<SyntaxTree>().unwrap(), SyntaxTree::empty());
        assert_eq!(" ( ) ".parse::<SyntaxTree>().unwrap(), SyntaxTree::empty());
        assert_eq!(
            "(or (and x3 x2) (and x2 x3))".parse::<SyntaxTree>().unwrap(),
            first_stuck_tree()
        );
        assert_eq!(x(17).to_string(), "x17");
    }

    #[test]
    fn parse_errors_report_position() {
        let cases = [
            ("(and x1)", 7),
            ("(xor x1 x2)", 1),
            ("(and x1 x2", 10),
            ("x0", 0),
            ("(and x1 x2) x3", 12),
            ("y1", 0),
            ("", 0),
        ];
        for (src, pos) in cases {
            match src.parse::<SyntaxTree>() {
                Err(TreeError::Parse { position, .. }) => assert_eq!(position, pos, "{src:?}"),
                other => panic!("{src:?} parsed to {other:?}"),
            }
        }
    }

    #[test]
    fn from_preorder_validates_shape() {
        let a = Node::Func(FunctionKind::And);
        let l = Node::Leaf(VarId::new(1).unwrap());
        assert!(SyntaxTree::from_preorder(vec![a, l, l]).is_ok());
        assert_eq!(SyntaxTree::from_preorder(vec![a, l]), Err(TreeError::Malformed));
        assert_eq!(SyntaxTree::from_preorder(vec![l, l]), Err(TreeError::Malformed));
        assert_eq!(SyntaxTree::from_preorder(vec![]), Ok(SyntaxTree::empty()));
    }

    #[test]
    fn paths_resolve_and_round_trip() {
        let t: SyntaxTree = "(and x1 (or x2 x3))".parse().unwrap();
        let or = NodeRef::from_path(&t, &[Step::Right]).unwrap();
        assert_eq!(or.preorder_index(), 2);
        assert_eq!(t.node(or).unwrap(), Node::Func(FunctionKind::Or));
        let x3 = NodeRef::from_path(&t, &[Step::Right, Step::Right]).unwrap();
        assert_eq!(t.node(x3).unwrap(), Node::Leaf(VarId::new(3).unwrap()));
        assert_eq!(x3.path(&t).unwrap(), vec![Step::Right, Step::Right]);
        assert_eq!(NodeRef::ROOT.path(&t).unwrap(), vec![]);
        assert_eq!(
            NodeRef::from_path(&t, &[Step::Left, Step::Left]),
            Err(TreeError::InvalidPath(1))
        );
        assert!(t.node(NodeRef(5)).is_err());
        assert_eq!(t.parent(or).unwrap(), Some((NodeRef::ROOT, Step::Right)));
        assert_eq!(t.sibling(or).unwrap(), Some(NodeRef(1)));
        assert_eq!(t.parent(NodeRef::ROOT).unwrap(), None);
    }

    #[test]
    fn random_choice_on_empty_tree_fails() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        assert_eq!(SyntaxTree::empty().uniform_random_node(&mut rng), Err(TreeError::NoNodes));
        assert_eq!(SyntaxTree::empty().uniform_random_leaf(&mut rng), Err(TreeError::NoNodes));
        assert_eq!(x(4).uniform_random_node(&mut rng), Ok(NodeRef::ROOT));
        assert_eq!(x(4).uniform_random_leaf(&mut rng), Ok(NodeRef::ROOT));
    }

    fn chi_square_p(counts: &[u64]) -> f64 {
        let total: u64 = counts.iter().sum();
        let expected = total as f64 / counts.len() as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
        1.0 - dist.cdf(stat)
    }

    #[test]
    fn uniform_node_choice_passes_chi_square() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let t = SyntaxTree::and(&x(1), &x(2));
        let mut counts = [0u64; 3];
        for _ in 0..100_000 {
            counts[t.uniform_random_node(&mut rng).unwrap().preorder_index()] += 1;
        }
        assert!(chi_square_p(&counts) > 1e-3, "{counts:?}");
        let root_freq = counts[0] as f64 / 1e5;
        assert!((root_freq - 1.0 / 3.0).abs() < 3.0 * (2.0f64 / 9.0 / 1e5).sqrt());
    }

    #[test]
    fn uniform_leaf_choice_passes_chi_square() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
        let t = first_stuck_tree();
        let mut counts = [0u64; 7];
        for _ in 0..100_000 {
            let r = t.uniform_random_leaf(&mut rng).unwrap();
            assert!(t.node(r).unwrap().is_leaf());
            counts[r.preorder_index()] += 1;
        }
        let leaf_counts: Vec<u64> = t.leaves().map(|(r, _)| counts[r.preorder_index()]).collect();
        assert_eq!(leaf_counts.iter().sum::<u64>(), 100_000);
        assert!(chi_square_p(&leaf_counts) > 1e-3, "{leaf_counts:?}");

        let chain: SyntaxTree = "(and (and x1 x2) x3)".parse().unwrap();
        let mut hits = 0;
        for _ in 0..100_000 {
            let r = chain.uniform_random_leaf(&mut rng).unwrap();
            if chain.node(r).unwrap() == Node::Leaf(VarId::new(3).unwrap()) {
                hits += 1;
            }
        }
        let freq = hits as f64 / 1e5;
        assert!((freq - 1.0 / 3.0).abs() < 3.0 * (2.0f64 / 9.0 / 1e5).sqrt());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn node_count_is_twice_leaves_minus_one(t in arb_tree(16, 64)) {
            let leaves = t.nodes().iter().filter(|n| n.is_leaf()).count();
            prop_assert_eq!(t.leaf_count(), leaves);
            prop_assert_eq!(t.node_count(), 2 * leaves - 1);
        }

        #[test]
        fn serialize_parse_round_trip(t in arb_tree(16, 64)) {
            let text = t.to_string();
            let back: SyntaxTree = text.parse().unwrap();
            prop_assert_eq!(back, t);
        }
    }

    proptest! {
        #[test]
        fn path_and_index_agree(t in arb_tree(8, 20), pick in any::<prop::sample::Index>()) {
            let at = NodeRef(pick.index(t.node_count()));
            let path = at.path(&t).unwrap();
            prop_assert_eq!(NodeRef::from_path(&t, &path).unwrap(), at);
            if let Some(sib) = t.sibling(at).unwrap() {
                prop_assert_eq!(t.sibling(sib).unwrap(), Some(at));
            }
        }
    }
}
