use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::OracleError;
use crate::automaton::{Automaton, LetterId, SubsetMask};
use crate::distribution::StateSetDistribution;

/// Deepest unrolling `enum_stage_distribution` accepts.
pub const MAX_ENUM_STEPS: usize = 3;

/// Default cap on the number of (labelling, leaf assignment) pairs.
pub const DEFAULT_WORK_BOUND: u128 = 50_000_000;

fn support(base: &[BigRational]) -> Vec<usize> {
    (0..base.len()).filter(|&p| !base[p].is_zero()).collect()
}

/// Number of pairs of a labelling of the `2^i − 1` interior nodes and an
/// assignment of base-supported subsets to the `2^i` leaves.
pub fn enumeration_work(letters: usize, support: usize, i: usize) -> u128 {
    let interior = (1u32 << i) - 1;
    let leaves = 1u32 << i;
    (letters as u128).saturating_pow(interior).saturating_mul((support as u128).saturating_pow(leaves))
}

fn delta(aut: &Automaton, left: SubsetMask, letter: LetterId, right: SubsetMask) -> SubsetMask {
    SubsetMask::from_states((0..aut.num_states()).filter(|&q| aut.transition(q, letter).eval(left, right)))
}

/// `i` steps of the coin-flipping recurrence computed by listing every
/// labelled prefix of depth `i` and every choice of leaf subsets.
pub fn enum_stage_distribution(
    aut: &Automaton,
    base: &StateSetDistribution,
    i: usize,
    work_bound: u128,
) -> Result<StateSetDistribution, OracleError> {
    if i > MAX_ENUM_STEPS {
        return Err(OracleError::TooManySteps { steps: i, max: MAX_ENUM_STEPS });
    }
    if base.width() != aut.num_states() || base.blocks() != 1 {
        return Err(OracleError::Width { expected: aut.num_states(), got: base.width() });
    }
    let masses = base.to_rationals().ok_or(OracleError::FloatBase)?;
    let supported = support(&masses);
    let letters = aut.num_letters();
    let work = enumeration_work(letters, supported.len(), i);
    if work > work_bound {
        return Err(OracleError::WorkBound { work, bound: work_bound });
    }
    if i == 0 {
        return Ok(base.clone());
    }
    let interior = (1usize << i) - 1;
    let leaves = 1usize << i;
    let k = masses.len();
    let mut result = vec![BigRational::zero(); k];
    let mut sets = vec![SubsetMask::EMPTY; interior + leaves];
    let mut labels = vec![0usize; interior];
    let mut choice = vec![0usize; leaves];
    let labelings = letters.pow(interior as u32);
    loop {
        let mut weight = BigRational::from_integer(BigInt::from(1));
        for (slot, &c) in choice.iter().enumerate() {
            sets[interior + slot] = SubsetMask(supported[c] as u64);
            weight *= &masses[supported[c]];
        }
        let mut counts = vec![0u64; k];
        for code in 0..labelings {
            let mut c = code;
            for l in labels.iter_mut() {
                *l = c % letters;
                c /= letters;
            }
            for v in (0..interior).rev() {
                sets[v] = delta(aut, sets[2 * v + 1], labels[v], sets[2 * v + 2]);
            }
            counts[sets[0].index()] += 1;
        }
        let scale = BigRational::new(BigInt::from(1), BigInt::from(labelings));
        for (p, &c) in counts.iter().enumerate() {
            if c > 0 {
                result[p] += &weight * &scale * BigInt::from(c);
            }
        }
        // next leaf assignment
        let mut slot = 0;
        while slot < leaves {
            choice[slot] += 1;
            if choice[slot] < supported.len() {
                break;
            }
            choice[slot] = 0;
            slot += 1;
        }
        if slot == leaves {
            break;
        }
    }
    Ok(StateSetDistribution::from_rationals(aut.num_states(), &result).expect("enumeration yields a distribution"))
}
