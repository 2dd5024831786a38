use super::bitslice::eval_blocks;
use super::{check_variables, ErrorCount, EvalMode, FitnessError};
use crate::tree::{Node, SyntaxTree, VarId};

/// Largest n for which the complete truth table is enumerated.
pub const MAX_CTT_VARIABLES: u32 = 25;

/// Within one 64-row block, variable bit `b < 6` follows a fixed pattern.
const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

#[inline]
fn table_word(bit: usize, word: usize) -> u64 {
    if bit < 6 {
        LOW_PATTERNS[bit]
    } else if (word >> (bit - 6)) & 1 == 1 {
        u64::MAX
    } else {
        0
    }
}

/// One assignment to x_1..x_n.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputRow {
    n: u32,
    bits: Vec<u64>,
}

impl InputRow {
    /// Row with index `index` of the truth table over `n <= 64` variables.
    pub fn from_index(n: u32, index: u64) -> Self {
        assert!(n <= 64, "row index encoding limited to 64 variables");
        let masked = if n == 64 { index } else { index & ((1u64 << n) - 1) };
        InputRow {
            n,
            bits: vec![masked],
        }
    }

    pub fn from_bools(values: &[bool]) -> Self {
        let mut bits = vec![0u64; values.len().div_ceil(64).max(1)];
        for (j, &b) in values.iter().enumerate() {
            if b {
                bits[j / 64] |= 1 << (j % 64);
            }
        }
        InputRow {
            n: values.len() as u32,
            bits,
        }
    }

    pub fn all_ones(n: u32) -> Self {
        Self::from_bools(&vec![true; n as usize])
    }

    pub(crate) fn from_words(n: u32, bits: Vec<u64>) -> Self {
        InputRow { n, bits }
    }

    pub fn width(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn get(&self, var: VarId) -> bool {
        let b = var.bit();
        (self.bits[b / 64] >> (b % 64)) & 1 == 1
    }

    pub fn is_all_ones(&self) -> bool {
        (1..=self.n).all(|i| self.get(VarId::new(i).expect("row width within range")))
    }
}

/// Output of a nonempty tree on one row.
pub fn eval_on_row(tree: &SyntaxTree, row: &InputRow) -> Result<bool, FitnessError> {
    if tree.is_empty() {
        return Err(FitnessError::EmptyTree);
    }
    check_variables(tree, row.n)?;
    let mut stack: Vec<bool> = Vec::with_capacity(tree.leaf_count());
    for node in tree.nodes().iter().rev() {
        match *node {
            Node::Leaf(v) => stack.push(row.get(v)),
            Node::Func(kind) => {
                let left = stack.pop().expect("well-formed");
                let right = stack.pop().expect("well-formed");
                stack.push(kind.apply(left, right));
            }
        }
    }
    Ok(stack[0])
}

/// Exact number of the 2^n rows where `tree` differs from AND_n.
///
/// The empty tree scores 2^n.
pub fn ctt_error(tree: &SyntaxTree, n: u32) -> Result<ErrorCount, FitnessError> {
    if n > MAX_CTT_VARIABLES {
        return Err(FitnessError::TooManyVariables(n));
    }
    check_variables(tree, n)?;
    let rows: u64 = 1 << n;
    let count = if tree.is_empty() {
        rows
    } else {
        let words = (rows as usize).div_ceil(64);
        let last_mask = if rows < 64 { (1u64 << rows) - 1 } else { u64::MAX };
        let target_word = ((rows - 1) / 64) as usize;
        let target_bit = 1u64 << ((rows - 1) % 64);
        let mut count = 0u64;
        eval_blocks(tree, words, table_word, |w, out| {
            let target = if w == target_word { target_bit } else { 0 };
            let mask = if w + 1 == words { last_mask } else { u64::MAX };
            count += ((out ^ target) & mask).count_ones() as u64;
        });
        count
    };
    Ok(ErrorCount {
        count,
        mode: EvalMode::CompleteTruthTable,
    })
}

/// CTT error of a conjunction of `a` distinct variables: 2^(n−a) − 1.
pub fn conjunction_ctt_error(a: u32, n: u32) -> Result<u128, FitnessError> {
    if a == 0 || a > n || n - a >= 128 {
        return Err(FitnessError::InvalidConjunction { a, n });
    }
    Ok((1u128 << (n - a)) - 1)
}
