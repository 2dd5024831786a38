use crate::tree::{Node, SyntaxTree};

const CHUNK: usize = 32;

/// Evaluates a nonempty tree over `words` packed 64-row blocks.
///
/// `var_word(bit, w)` yields the 64 values of the variable with zero-based
/// bit `bit` on block `w`; `sink(w, out)` receives the tree's output block.
pub(crate) fn eval_blocks<V, S>(tree: &SyntaxTree, words: usize, var_word: V, mut sink: S)
where
    V: Fn(usize, usize) -> u64,
    S: FnMut(usize, u64),
{
    debug_assert!(!tree.is_empty());
    let nodes = tree.nodes();
    let mut stack: Vec<[u64; CHUNK]> = vec![[0; CHUNK]; tree.leaf_count()];
    let mut base = 0;
    while base < words {
        let len = CHUNK.min(words - base);
        let mut sp = 0;
        for node in nodes.iter().rev() {
            match *node {
                Node::Leaf(v) => {
                    let bit = v.bit();
                    let slot = &mut stack[sp];
                    for (k, word) in slot[..len].iter_mut().enumerate() {
                        *word = var_word(bit, base + k);
                    }
                    sp += 1;
                }
                Node::Func(kind) => {
                    // preorder reversed: the left operand sits on top
                    sp -= 1;
                    let (lower, upper) = stack.split_at_mut(sp);
                    let right = &mut lower[sp - 1];
                    let left = &upper[0];
                    for k in 0..len {
                        right[k] = kind.apply_word(left[k], right[k]);
                    }
                }
            }
        }
        debug_assert_eq!(sp, 1);
        for k in 0..len {
            sink(base + k, stack[0][k]);
        }
        base += len;
    }
}
