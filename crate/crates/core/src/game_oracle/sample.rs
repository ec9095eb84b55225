use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::TreePrefix;
use crate::automaton::{BranchingProcess, LetterId};

/// Draws trees from a branching process. Each categorical draw consumes one
/// `u64` and picks the first outcome whose cumulative threshold
/// `⌊(p_1 + … + p_i)·2^64⌋` exceeds it. The root is drawn first, then the
/// child pair of every node in breadth-first order.
#[derive(Debug, Clone)]
pub struct Sampler {
    init: Vec<u128>,
    branch: Vec<Vec<u128>>,
    pairs: Vec<(LetterId, LetterId)>,
}

fn thresholds(probs: &[BigRational]) -> Vec<u128> {
    let scale = BigInt::from(1u128 << 64);
    let mut acc = BigRational::default();
    probs
        .iter()
        .map(|p| {
            acc += p;
            (acc.numer() * &scale).div_floor(acc.denom()).to_u128().expect("cumulative probability is at most 1")
        })
        .collect()
}

fn pick(thresholds: &[u128], x: u64) -> usize {
    thresholds.partition_point(|&t| t <= x as u128).min(thresholds.len() - 1)
}

impl Sampler {
    pub fn new(process: &BranchingProcess) -> Self {
        let letters = process.num_letters();
        Sampler {
            pairs: (0..letters * letters).map(|k| (k / letters, k % letters)).collect(),
            init: thresholds(process.init_distribution()),
            branch: (0..letters).map(|a| thresholds(process.branch_row(a))).collect(),
        }
    }

    /// A tree of depth `depth` from the PRNG stream `(seed, stream)`.
    pub fn sample(&self, depth: usize, seed: u64, stream: u64) -> TreePrefix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let count = TreePrefix::node_count(depth);
        let mut labels: Vec<LetterId> = Vec::with_capacity(count);
        labels.push(pick(&self.init, rng.next_u64()));
        let interior = TreePrefix::node_count(depth) >> 1;
        for node in 0..interior {
            let (left, right) = self.pairs[pick(&self.branch[labels[node]], rng.next_u64())];
            labels.push(left);
            labels.push(right);
        }
        TreePrefix::from_labels(depth, labels)
    }
}

/// `sample_tree_stream(process, depth, seed, 0)`.
pub fn sample_tree(process: &BranchingProcess, depth: usize, seed: u64) -> TreePrefix {
    sample_tree_stream(process, depth, seed, 0)
}

pub fn sample_tree_stream(process: &BranchingProcess, depth: usize, seed: u64, stream: u64) -> TreePrefix {
    Sampler::new(process).sample(depth, seed, stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn dirac_process_is_constant() {
        let p = BranchingProcess::dirac(&ab(), 0);
        for seed in 0..5 {
            assert_eq!(sample_tree(&p, 2, seed), TreePrefix::constant(2, 0));
        }
    }

    #[test]
    fn reproducible_and_extending() {
        let p = BranchingProcess::uniform(&ab());
        let s = Sampler::new(&p);
        assert_eq!(s.sample(4, 7, 3), s.sample(4, 7, 3));
        assert_eq!(s.sample(5, 7, 3).truncate(4), s.sample(4, 7, 3));
        let distinct = (0..100).map(|seed| s.sample(2, seed, 0)).collect::<std::collections::HashSet<_>>();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn thresholds_are_cumulative() {
        let half = BigRational::new(1.into(), 2.into());
        let t = thresholds(&[half.clone(), BigRational::default(), half]);
        assert_eq!(t, vec![1u128 << 63, 1u128 << 63, 1u128 << 64]);
        assert_eq!(pick(&t, u64::MAX), 2);
        assert_eq!(pick(&t, 0), 0);
        assert_eq!(pick(&t, 1 << 63), 2);
    }
}
