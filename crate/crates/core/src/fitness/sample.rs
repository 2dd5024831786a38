use rand::Rng;

use super::bitslice::eval_blocks;
use super::ctt::InputRow;
use super::{check_variables, ErrorCount, EvalMode, FitnessError};
use crate::tree::SyntaxTree;

/// `size` rows drawn i.i.d. uniformly (with replacement) over {0,1}^n.
///
/// Stored column-wise: each variable owns `size` bits packed into words, and
/// the AND_n target column is kept alongside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    n: u32,
    size: usize,
    words: usize,
    columns: Vec<u64>,
    target: Vec<u64>,
}

impl Sample {
    fn with_shape(n: u32, size: usize) -> Result<Self, FitnessError> {
        if size == 0 {
            return Err(FitnessError::EmptySample);
        }
        let words = size.div_ceil(64);
        Ok(Sample {
            n,
            size,
            words,
            columns: vec![0; n as usize * words],
            target: vec![0; words],
        })
    }

    fn last_mask(&self) -> u64 {
        match self.size % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }

    fn finish(&mut self) {
        let mask = self.last_mask();
        let words = self.words;
        for col in self.columns.chunks_mut(words) {
            col[words - 1] &= mask;
        }
        self.target.iter_mut().for_each(|w| *w = u64::MAX);
        for col in self.columns.chunks(words) {
            for (t, c) in self.target.iter_mut().zip(col) {
                *t &= c;
            }
        }
        self.target[words - 1] &= mask;
    }

    /// Builds a sample from explicit rows.
    pub fn from_rows(n: u32, rows: &[InputRow]) -> Result<Self, FitnessError> {
        let mut sample = Self::with_shape(n, rows.len())?;
        for (i, row) in rows.iter().enumerate() {
            if row.width() != n {
                return Err(FitnessError::RowWidth { row: row.width(), n });
            }
            for j in 1..=n {
                let var = crate::tree::VarId::new(j).expect("n within range");
                if row.get(var) {
                    sample.columns[var.bit() * sample.words + i / 64] |= 1 << (i % 64);
                }
            }
        }
        sample.finish();
        Ok(sample)
    }

    /// Redraws every row in place.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for w in self.columns.iter_mut() {
            *w = rng.next_u64();
        }
        self.finish();
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn row(&self, i: usize) -> InputRow {
        assert!(i < self.size, "row {i} out of range");
        let mut bits = vec![0u64; (self.n as usize).div_ceil(64).max(1)];
        for j in 0..self.n as usize {
            if (self.columns[j * self.words + i / 64] >> (i % 64)) & 1 == 1 {
                bits[j / 64] |= 1 << (j % 64);
            }
        }
        InputRow::from_words(self.n, bits)
    }

    pub fn rows(&self) -> impl Iterator<Item = InputRow> + '_ {
        (0..self.size).map(|i| self.row(i))
    }

    #[inline]
    fn column_word(&self, bit: usize, word: usize) -> u64 {
        self.columns[bit * self.words + word]
    }
}

/// Draws `size` fresh uniform rows over `n` variables.
pub fn sample_rows<R: Rng + ?Sized>(n: u32, size: usize, rng: &mut R) -> Result<Sample, FitnessError> {
    let mut sample = Sample::with_shape(n, size)?;
    sample.resample(rng);
    Ok(sample)
}

/// Number of sample rows on which `tree` differs from AND_n. The empty tree
/// scores the sample size.
pub fn sampled_error(tree: &SyntaxTree, sample: &Sample) -> Result<ErrorCount, FitnessError> {
    check_variables(tree, sample.n)?;
    let count = if tree.is_empty() {
        sample.size as u64
    } else {
        let mask = sample.last_mask();
        let words = sample.words;
        let mut count = 0u64;
        eval_blocks(
            tree,
            words,
            |bit, w| sample.column_word(bit, w),
            |w, out| {
                let m = if w + 1 == words { mask } else { u64::MAX };
                count += ((out ^ sample.target[w]) & m).count_ones() as u64;
            },
        );
        count
    };
    Ok(ErrorCount {
        count,
        mode: EvalMode::Sampled,
    })
}
