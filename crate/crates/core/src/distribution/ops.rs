use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::exact::{to_biguint, Denominator, ExactVec};
use super::{StateSetDistribution, Values};
use crate::automaton::{BranchingProcess, LetterId, SubsetMask, WeakAutomaton};

const CHUNK: usize = 16;

/// One summand of an output block: letter `letter` at the node, children
/// drawn from input blocks `left` and `right`, with integer weight `weight`
/// over the operator's common denominator.
struct Term {
    letter: LetterId,
    left: usize,
    right: usize,
    weight: BigUint,
}

/// The one-step operator `𝓕` for the coin-flipping measure, or its lift
/// `𝓕_𝒫` to a branching process acting on letter-indexed families.
#[derive(Clone, Copy)]
pub enum Operator<'a> {
    Uniform(&'a WeakAutomaton),
    Branching(&'a WeakAutomaton, &'a BranchingProcess),
}

impl<'a> Operator<'a> {
    pub fn automaton(&self) -> &'a WeakAutomaton {
        match self {
            Operator::Uniform(a) | Operator::Branching(a, _) => a,
        }
    }

    /// Number of blocks in the distributions this operator acts on.
    pub fn blocks(&self) -> usize {
        match self {
            Operator::Uniform(_) => 1,
            Operator::Branching(a, _) => a.num_letters(),
        }
    }

    pub fn apply(&self, beta: &StateSetDistribution) -> StateSetDistribution {
        match self {
            Operator::Uniform(a) => apply_f(beta, a),
            Operator::Branching(a, p) => apply_f_branching(beta, a, p),
        }
    }

    // Terms per output block and the common denominator of all weights.
    fn terms(&self) -> (Vec<Vec<Term>>, BigUint) {
        match self {
            Operator::Uniform(aut) => {
                let terms = (0..aut.num_letters())
                    .map(|letter| Term { letter, left: 0, right: 0, weight: BigUint::one() })
                    .collect();
                (vec![terms], BigUint::from(aut.num_letters()))
            }
            Operator::Branching(aut, process) => {
                let n = aut.num_letters();
                let common = process.common_denominator();
                let terms = (0..n)
                    .map(|letter| {
                        process
                            .branch_row(letter)
                            .iter()
                            .enumerate()
                            .filter(|(_, p)| !p.is_zero())
                            .map(|(k, p)| Term {
                                letter,
                                left: k / n,
                                right: k % n,
                                weight: to_biguint(&(p.numer() * (&common / p.denom()))),
                            })
                            .collect()
                    })
                    .collect();
                (terms, to_biguint(&common))
            }
        }
    }
}

/// `𝓕(β)(P) = |A|⁻¹ · ∑_{Δ(P_L,a,P_R) = P} β(P_L)·β(P_R)`.
pub fn apply_f(beta: &StateSetDistribution, automaton: &WeakAutomaton) -> StateSetDistribution {
    assert_eq!(beta.blocks(), 1, "apply_f expects a single distribution");
    transform(beta, automaton, Operator::Uniform(automaton))
}

/// `𝓕_𝒫(β)(a)(P) = ∑_{a_L,a_R} τ(a)(a_L,a_R) · ∑_{Δ(P_L,a,P_R) = P} β_{a_L}(P_L)·β_{a_R}(P_R)`.
pub fn apply_f_branching(
    beta: &StateSetDistribution,
    automaton: &WeakAutomaton,
    process: &BranchingProcess,
) -> StateSetDistribution {
    assert_eq!(process.alphabet(), automaton.alphabet(), "process alphabet differs from automaton alphabet");
    assert_eq!(beta.blocks(), automaton.num_letters(), "expected one block per letter");
    transform(beta, automaton, Operator::Branching(automaton, process))
}

fn transform(beta: &StateSetDistribution, aut: &WeakAutomaton, op: Operator<'_>) -> StateSetDistribution {
    assert_eq!(beta.width(), aut.num_states(), "distribution width differs from |Q|");
    let k = beta.k();
    let (terms, common) = op.terms();
    let delta_row = |left: usize, letter: LetterId| -> Vec<u64> {
        match aut.delta_table().row(aut.automaton(), SubsetMask(left as u64), letter) {
            Some(row) => row.iter().map(|&x| x as u64).collect(),
            None => (0..k).map(|r| aut.delta(SubsetMask(left as u64), letter, SubsetMask(r as u64)).0).collect(),
        }
    };
    let values = match beta.values() {
        Values::Exact(v) => Values::Exact(transform_exact(v, k, &terms, &common, &delta_row)),
        Values::Float(v) => Values::Float(transform_float(v, k, &terms, &common, &delta_row)),
    };
    StateSetDistribution::from_values(beta.width(), terms.len(), values)
}

fn transform_exact(
    v: &ExactVec,
    k: usize,
    terms: &[Vec<Term>],
    common: &BigUint,
    delta_row: &(dyn Fn(usize, LetterId) -> Vec<u64> + Sync),
) -> ExactVec {
    let blocks_in = v.nums.len() / k;
    let support: Vec<Vec<usize>> =
        (0..blocks_in).map(|b| (0..k).filter(|&p| !v.nums[b * k + p].is_zero()).collect()).collect();
    let den = v.den.square().mul(&Denominator::from_biguint(common));
    let total = den.value();
    let mut nums = vec![BigUint::zero(); terms.len() * k];
    for (o, block_terms) in terms.iter().enumerate() {
        // rows of Δ needed, keyed by (left subset, letter)
        let lefts: Vec<(usize, usize)> = {
            let mut ls: Vec<(usize, usize)> =
                block_terms.iter().flat_map(|t| support[t.left].iter().map(move |&p| (t.left, p))).collect();
            ls.sort_unstable();
            ls.dedup();
            ls
        };
        // The output entry with the most product terms is recovered from the block total.
        let mut counts = vec![0usize; k];
        for t in block_terms {
            for &pl in &support[t.left] {
                let row = delta_row(pl, t.letter);
                for &pr in &support[t.right] {
                    counts[row[pr] as usize] += 1;
                }
            }
        }
        let skip = (0..k).max_by_key(|&p| (counts[p], std::cmp::Reverse(p))).unwrap_or(0);
        let chunks: Vec<Vec<(usize, BigUint)>> = lefts
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut out = Vec::new();
                let mut sums: Vec<BigUint> = vec![BigUint::zero(); k];
                let mut touched: Vec<usize> = Vec::new();
                for &(lb, pl) in chunk {
                    for t in block_terms.iter().filter(|t| t.left == lb) {
                        let row = delta_row(pl, t.letter);
                        for &pr in &support[t.right] {
                            let target = row[pr] as usize;
                            if target == skip {
                                continue;
                            }
                            let n = &v.nums[t.right * k + pr];
                            if sums[target].is_zero() {
                                touched.push(target);
                            }
                            if t.weight.is_one() {
                                sums[target] += n;
                            } else {
                                sums[target] += n * &t.weight;
                            }
                        }
                    }
                    let nl = &v.nums[lb * k + pl];
                    touched.sort_unstable();
                    for &target in &touched {
                        let s = std::mem::take(&mut sums[target]);
                        out.push((target, nl * s));
                    }
                    touched.clear();
                }
                out
            })
            .collect();
        let block = &mut nums[o * k..(o + 1) * k];
        for (target, value) in chunks.into_iter().flatten() {
            block[target] += value;
        }
        let rest: BigUint = block.iter().sum();
        block[skip] = &total - rest;
    }
    let mut out = ExactVec { nums, den };
    out.reduce();
    out
}

fn transform_float(
    v: &[f64],
    k: usize,
    terms: &[Vec<Term>],
    common: &BigUint,
    delta_row: &(dyn Fn(usize, LetterId) -> Vec<u64> + Sync),
) -> Vec<f64> {
    let common = common.to_f64().unwrap_or(f64::INFINITY);
    let mut out = vec![0.0; terms.len() * k];
    for (o, block_terms) in terms.iter().enumerate() {
        let parts: Vec<Vec<f64>> = (0..k)
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; k];
                for &pl in chunk {
                    for t in block_terms {
                        let bl = v[t.left * k + pl];
                        if bl == 0.0 {
                            continue;
                        }
                        let w = t.weight.to_f64().unwrap_or(0.0) / common;
                        let row = delta_row(pl, t.letter);
                        for pr in 0..k {
                            let br = v[t.right * k + pr];
                            if br != 0.0 {
                                acc[row[pr] as usize] += w * bl * br;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let block = &mut out[o * k..(o + 1) * k];
        for part in parts {
            for (b, x) in block.iter_mut().zip(part) {
                *b += x;
            }
        }
        // the total mass is squared by each step, so its rounding error would compound
        let mass: f64 = block.iter().sum();
        for b in block.iter_mut() {
            *b /= mass;
        }
    }
    out
}

fn pushforward(beta: &StateSetDistribution, map: impl Fn(usize) -> usize) -> StateSetDistribution {
    let k = beta.k();
    let values = match beta.values() {
        Values::Exact(v) => {
            let mut nums = vec![BigUint::zero(); v.nums.len()];
            for (i, n) in v.nums.iter().enumerate() {
                let (b, p) = (i / k, i % k);
                nums[b * k + map(p)] += n;
            }
            let mut out = ExactVec { nums, den: v.den.clone() };
            out.reduce();
            Values::Exact(out)
        }
        Values::Float(v) => {
            let mut out = vec![0.0; v.len()];
            for (i, x) in v.iter().enumerate() {
                out[(i / k) * k + map(i % k)] += x;
            }
            Values::Float(out)
        }
    };
    StateSetDistribution::from_values(beta.width(), beta.blocks(), values)
}

/// Pushforward along `P ↦ P ∩ Q_{<n}`, block by block.
pub fn apply_q_lt(beta: &StateSetDistribution, automaton: &WeakAutomaton, n: u32) -> StateSetDistribution {
    let keep = automaton.states_below(n).0 as usize;
    pushforward(beta, |p| p & keep)
}

/// Pushforward along `P ↦ P ∪ Q_{≥n}`, block by block.
pub fn apply_q_geq(beta: &StateSetDistribution, automaton: &WeakAutomaton, n: u32) -> StateSetDistribution {
    let add = automaton.states_at_least(n).0 as usize;
    pushforward(beta, |p| p | add)
}
