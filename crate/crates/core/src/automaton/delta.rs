use std::sync::OnceLock;

use parking_lot::Mutex;
use rayon::prelude::*;

use super::{Automaton, LetterId, SubsetMask};

/// Tables are materialized up to `2^TABLE_LOG2` entries.
const TABLE_LOG2: u32 = 26;
const MEMO_SHARDS: usize = 64;
const MEMO_SLOTS_PER_SHARD: usize = 1 << 12;

type MemoSlot = Option<(u64, u64, LetterId, u64)>;

/// Storage for Δ: a dense table for small automata, a direct-mapped memo otherwise.
#[derive(Debug)]
pub enum DeltaTable {
    Dense { letters: usize, width: usize, table: OnceLock<Vec<u16>> },
    Memo { shards: Vec<Mutex<Vec<MemoSlot>>> },
}

pub(super) fn evaluate(aut: &Automaton, left: SubsetMask, letter: LetterId, right: SubsetMask) -> SubsetMask {
    let mut out = SubsetMask::EMPTY;
    for q in 0..aut.num_states() {
        if aut.transition(q, letter).eval(left, right) {
            out = out.with(q);
        }
    }
    out
}

fn ceil_log2(n: usize) -> u32 {
    n.next_power_of_two().trailing_zeros()
}

impl DeltaTable {
    pub(super) fn for_automaton(aut: &Automaton) -> Self {
        let width = aut.num_states();
        let letters = aut.num_letters();
        if 2 * width as u32 + ceil_log2(letters) <= TABLE_LOG2 {
            DeltaTable::Dense { letters, width, table: OnceLock::new() }
        } else {
            let shards = (0..MEMO_SHARDS).map(|_| Mutex::new(vec![None; MEMO_SLOTS_PER_SHARD])).collect();
            DeltaTable::Memo { shards }
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, DeltaTable::Dense { .. })
    }

    fn dense<'a>(aut: &Automaton, letters: usize, width: usize, table: &'a OnceLock<Vec<u16>>) -> &'a [u16] {
        table.get_or_init(|| {
            let k = 1usize << width;
            let mut out = vec![0u16; k * letters * k];
            out.par_chunks_mut(k).enumerate().for_each(|(row, chunk)| {
                let left = SubsetMask((row / letters) as u64);
                let letter = row % letters;
                for (right, slot) in chunk.iter_mut().enumerate() {
                    *slot = evaluate(aut, left, letter, SubsetMask(right as u64)).0 as u16;
                }
            });
            out
        })
    }

    /// The row `R ↦ Δ(left, letter, R)` when the dense table is in use.
    pub fn row(&self, aut: &Automaton, left: SubsetMask, letter: LetterId) -> Option<&[u16]> {
        match self {
            DeltaTable::Dense { letters, width, table } => {
                let k = 1usize << width;
                let start = (left.index() * letters + letter) * k;
                Some(&Self::dense(aut, *letters, *width, table)[start..start + k])
            }
            DeltaTable::Memo { .. } => None,
        }
    }

    pub(super) fn get(&self, aut: &Automaton, left: SubsetMask, letter: LetterId, right: SubsetMask) -> SubsetMask {
        match self {
            DeltaTable::Dense { letters, width, table } => {
                let k = 1usize << width;
                let t = Self::dense(aut, *letters, *width, table);
                SubsetMask(t[(left.index() * letters + letter) * k + right.index()] as u64)
            }
            DeltaTable::Memo { shards } => {
                let h = hash(left.0, letter as u64, right.0);
                let shard = &shards[(h as usize) % MEMO_SHARDS];
                let slot = (h >> 32) as usize % MEMO_SLOTS_PER_SHARD;
                if let Some((l, r, a, v)) = shard.lock()[slot] {
                    if l == left.0 && r == right.0 && a == letter {
                        return SubsetMask(v);
                    }
                }
                let value = evaluate(aut, left, letter, right);
                shard.lock()[slot] = Some((left.0, right.0, letter, value.0));
                value
            }
        }
    }
}

fn hash(a: u64, b: u64, c: u64) -> u64 {
    let mut h = a.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= b.wrapping_add(0x632B_E59B_D9B4_E019).rotate_left(17);
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= c.wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

#[cfg(test)]
mod tests {
    use super::super::{parse_automaton, Automaton, Direction, TransitionFormula, WeakAutomaton};
    use super::*;

    #[test]
    fn dense_and_direct_agree() {
        let aut = parse_automaton(
            "alphabet: a b\nstates: x y\ninitial: x\npriority: x 1 y 0\n\
             delta: x a = (L y) | (R x) & (L x)\ndelta: x b = (R y)\n\
             delta: y a = (L y) & (R y)\ndelta: y b = (L y) | (R y)\n",
        )
        .unwrap();
        assert!(aut.delta_table().is_dense());
        for l in 0..4 {
            for r in 0..4 {
                for a in 0..2 {
                    let (l, r) = (SubsetMask(l), SubsetMask(r));
                    assert_eq!(aut.delta(l, a, r), aut.delta_uncached(l, a, r));
                }
            }
        }
    }

    #[test]
    fn memo_path_for_wide_automata() {
        let n = 20;
        let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let delta = (0..n)
            .map(|q| {
                vec![TransitionFormula::atom(Direction::L, (q + 1) % n).or(TransitionFormula::atom(Direction::R, q))]
            })
            .collect();
        let aut = Automaton::new(vec!["a".into()], names, 0, vec![0; n], delta).unwrap();
        let aut = WeakAutomaton::new(aut).unwrap();
        assert!(!aut.delta_table().is_dense());
        let left = SubsetMask(0b1010_1010);
        let right = SubsetMask(0b1);
        let first = aut.delta(left, 0, right);
        assert_eq!(first, aut.delta(left, 0, right));
        assert_eq!(first, aut.delta_uncached(left, 0, right));
        assert_eq!(first, SubsetMask::from_states([0, 2, 4, 6]));
    }
}
