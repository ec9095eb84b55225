//! Probability distributions over subsets of states, the stochastic order,
//! and the one-step operators of the measure pipeline.

pub(crate) mod exact;
mod iterate;
mod ops;
mod order;
mod upset;

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::automaton::{Automaton, StateId, SubsetMask};
use exact::{cmp_rational, ExactVec};

pub use exact::rational_to_f64;
pub use iterate::{iterate, iterate_unchecked, ChainDirection, IterateOptions, IterationResult, StopReason};
pub use ops::{apply_f, apply_f_branching, apply_q_geq, apply_q_lt, Operator};
pub use order::{leq, leq_bruteforce, leq_coupling, BRUTEFORCE_MAX_STATES};
pub use upset::{enumerate_upsets, UpSetMask};

/// Tolerance on the total mass of a float distribution.
pub const FLOAT_MASS_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistributionError {
    #[error("expected {expected} entries, got {got}")]
    Length { expected: usize, got: usize },
    #[error("entry {0} is outside [0,1]")]
    OutOfRange(String),
    #[error("entries sum to {0}, not 1")]
    NotNormalized(String),
    #[error("cannot mix exact and float distributions")]
    ModeMismatch,
    #[error("distributions have different shapes")]
    ShapeMismatch,
    #[error("brute-force order check supports at most {max} states, got {got}")]
    TooManyStates { max: usize, got: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// Arithmetic used for distribution entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        })
    }
}

/// A number produced by the engine: an exact rational or a labelled float.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

/// Exact rationals whose denominators exceed this many bits are shown in decimal only.
const DISPLAY_MAX_BITS: u64 = 256;

impl Scalar {
    pub fn zero(mode: Mode) -> Self {
        match mode {
            Mode::Exact => Scalar::Exact(BigRational::zero()),
            Mode::Float => Scalar::Float(0.0),
        }
    }

    pub fn one(mode: Mode) -> Self {
        match mode {
            Mode::Exact => Scalar::Exact(BigRational::one()),
            Mode::Float => Scalar::Float(1.0),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Compares against an exact rational; float values compare by conversion.
    pub fn cmp_rational(&self, q: &BigRational) -> std::cmp::Ordering {
        match self {
            Scalar::Exact(r) => cmp_rational(r, q),
            Scalar::Float(x) => x.partial_cmp(&rational_to_f64(q)).unwrap_or(std::cmp::Ordering::Equal),
        }
    }

    /// Compares two scalars of the same kind.
    pub fn cmp_scalar(&self, other: &Scalar) -> std::cmp::Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => cmp_rational(a, b),
            _ => self.to_f64().partial_cmp(&other.to_f64()).unwrap_or(std::cmp::Ordering::Equal),
        }
    }

    /// Decimal rendering with 12 significant digits.
    pub fn decimal(&self) -> String {
        format_decimal(self.to_f64())
    }

    /// `num/den` when exact and small enough to print, otherwise `None`.
    pub fn exact_text(&self) -> Option<String> {
        match self {
            Scalar::Exact(r) if r.denom().bits() <= DISPLAY_MAX_BITS => Some(r.to_string()),
            _ => None,
        }
    }

    /// Denominator size in bits (0 for floats).
    pub fn denominator_bits(&self) -> u64 {
        match self {
            Scalar::Exact(r) => r.denom().bits(),
            Scalar::Float(_) => 0,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact_text() {
            Some(t) => f.write_str(&t),
            None => f.write_str(&self.decimal()),
        }
    }
}

/// Formats `x` with 12 significant digits, trimming trailing zeros.
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Values {
    Exact(ExactVec),
    Float(Vec<f64>),
}

/// A probability vector over `𝖯(Q)` indexed by subset mask, or a
/// letter-indexed family of such vectors (one block per letter).
#[derive(Debug, Clone)]
pub struct StateSetDistribution {
    width: usize,
    blocks: usize,
    values: Values,
}

impl PartialEq for StateSetDistribution {
    fn eq(&self, other: &Self) -> bool {
        if self.width != other.width || self.blocks != other.blocks {
            return false;
        }
        match (&self.values, &other.values) {
            (Values::Exact(a), Values::Exact(b)) => a.same_values(b),
            (Values::Float(a), Values::Float(b)) => a == b,
            _ => false,
        }
    }
}

impl StateSetDistribution {
    /// Mass 1 on `set`, over `width` states.
    pub fn dirac(width: usize, set: SubsetMask) -> Self {
        Self::dirac_family(width, 1, set, Mode::Exact)
    }

    /// Mass 1 on `set` in every one of `blocks` blocks.
    pub fn dirac_family(width: usize, blocks: usize, set: SubsetMask, mode: Mode) -> Self {
        let k = 1usize << width;
        assert!(set.index() < k, "subset outside the state space");
        let values = match mode {
            Mode::Exact => Values::Exact(ExactVec::dirac(blocks, k, set.index())),
            Mode::Float => {
                let mut v = vec![0.0; blocks * k];
                for b in 0..blocks {
                    v[b * k + set.index()] = 1.0;
                }
                Values::Float(v)
            }
        };
        StateSetDistribution { width, blocks, values }
    }

    /// Builds an exact distribution from `2^width` rationals in mask order.
    pub fn from_rationals(width: usize, values: &[BigRational]) -> Result<Self, DistributionError> {
        Self::family_from_rationals(width, 1, values)
    }

    /// Builds an exact family of `blocks` distributions stored back to back.
    pub fn family_from_rationals(
        width: usize,
        blocks: usize,
        values: &[BigRational],
    ) -> Result<Self, DistributionError> {
        let k = 1usize << width;
        if values.len() != k * blocks {
            return Err(DistributionError::Length { expected: k * blocks, got: values.len() });
        }
        for v in values {
            if v.is_negative() || v > &BigRational::one() {
                return Err(DistributionError::OutOfRange(v.to_string()));
            }
        }
        for block in values.chunks(k) {
            let sum: BigRational = block.iter().sum();
            if !sum.is_one() {
                return Err(DistributionError::NotNormalized(sum.to_string()));
            }
        }
        Ok(StateSetDistribution { width, blocks, values: Values::Exact(ExactVec::from_rationals(values)) })
    }

    /// Builds a float distribution from `2^width` entries in mask order.
    pub fn from_f64(width: usize, values: &[f64]) -> Result<Self, DistributionError> {
        Self::family_from_f64(width, 1, values)
    }

    pub fn family_from_f64(width: usize, blocks: usize, values: &[f64]) -> Result<Self, DistributionError> {
        let k = 1usize << width;
        if values.len() != k * blocks {
            return Err(DistributionError::Length { expected: k * blocks, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DistributionError::OutOfRange(v.to_string()));
        }
        for block in values.chunks(k) {
            let sum: f64 = block.iter().sum();
            if (sum - 1.0).abs() > FLOAT_MASS_TOLERANCE {
                return Err(DistributionError::NotNormalized(sum.to_string()));
            }
        }
        Ok(StateSetDistribution { width, blocks, values: Values::Float(values.to_vec()) })
    }

    /// Stacks single distributions into a letter-indexed family.
    pub fn family(parts: &[StateSetDistribution]) -> Result<Self, DistributionError> {
        let first = parts.first().ok_or(DistributionError::ShapeMismatch)?;
        if parts.iter().any(|p| p.width != first.width || p.blocks != 1 || p.mode() != first.mode()) {
            return Err(DistributionError::ShapeMismatch);
        }
        match first.mode() {
            Mode::Exact => {
                let vals: Vec<BigRational> = parts.iter().flat_map(|p| p.to_rationals().unwrap()).collect();
                Self::family_from_rationals(first.width, parts.len(), &vals)
            }
            Mode::Float => {
                let vals: Vec<f64> = parts.iter().flat_map(|p| p.to_f64_vec()).collect();
                Ok(StateSetDistribution { width: first.width, blocks: parts.len(), values: Values::Float(vals) })
            }
        }
    }

    pub(crate) fn from_values(width: usize, blocks: usize, values: Values) -> Self {
        StateSetDistribution { width, blocks, values }
    }

    pub(crate) fn values(&self) -> &Values {
        &self.values
    }

    /// Number of states `|Q|`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of subsets `K = 2^|Q|`.
    pub fn k(&self) -> usize {
        1 << self.width
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn mode(&self) -> Mode {
        match self.values {
            Values::Exact(_) => Mode::Exact,
            Values::Float(_) => Mode::Float,
        }
    }

    /// Block `b` as a standalone distribution.
    pub fn block(&self, b: usize) -> StateSetDistribution {
        let k = self.k();
        let values = match &self.values {
            Values::Exact(v) => {
                let mut part = ExactVec { nums: v.nums[b * k..(b + 1) * k].to_vec(), den: v.den.clone() };
                part.reduce();
                Values::Exact(part)
            }
            Values::Float(v) => Values::Float(v[b * k..(b + 1) * k].to_vec()),
        };
        StateSetDistribution { width: self.width, blocks: 1, values }
    }

    /// Probability of `set` in block 0.
    pub fn get(&self, set: SubsetMask) -> Scalar {
        self.entry(0, set)
    }

    pub fn entry(&self, block: usize, set: SubsetMask) -> Scalar {
        let i = block * self.k() + set.index();
        match &self.values {
            Values::Exact(v) => Scalar::Exact(v.entry(i)),
            Values::Float(v) => Scalar::Float(v[i]),
        }
    }

    pub fn to_rationals(&self) -> Option<Vec<BigRational>> {
        match &self.values {
            Values::Exact(v) => Some(v.to_rationals()),
            Values::Float(_) => None,
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.values {
            Values::Exact(v) => (0..v.nums.len()).map(|i| v.to_f64(i)).collect(),
            Values::Float(v) => v.clone(),
        }
    }

    /// Same values in float arithmetic.
    pub fn to_float(&self) -> StateSetDistribution {
        StateSetDistribution { width: self.width, blocks: self.blocks, values: Values::Float(self.to_f64_vec()) }
    }

    /// `∑_{P ∈ U} β(P)` for block `block`.
    pub fn upset_sum(&self, block: usize, upset: &UpSetMask) -> Scalar {
        let k = self.k();
        let members = (0..k).filter(|&p| upset.contains(SubsetMask(p as u64))).map(|p| block * k + p);
        self.sum_indices(members)
    }

    /// `∑_{P ∋ state} β(P)` for block `block`.
    pub fn containing_sum(&self, block: usize, state: StateId) -> Scalar {
        let k = self.k();
        self.sum_indices((0..k).filter(|&p| p >> state & 1 == 1).map(|p| block * k + p))
    }

    fn sum_indices(&self, indices: impl Iterator<Item = usize>) -> Scalar {
        match &self.values {
            Values::Exact(v) => Scalar::Exact(v.sum_over(indices)),
            Values::Float(v) => Scalar::Float(indices.map(|i| v[i]).sum()),
        }
    }

    /// `∑_b w_b · ∑_{P ∋ state} β_b(P)`.
    pub fn weighted_containing_sum(&self, weights: &[BigRational], state: StateId) -> Scalar {
        assert_eq!(weights.len(), self.blocks);
        let k = self.k();
        match &self.values {
            Values::Exact(v) => {
                let common = weights.iter().fold(BigInt::one(), |acc, w| num_integer::Integer::lcm(&acc, w.denom()));
                let mut total = BigUint::zero();
                for (b, w) in weights.iter().enumerate() {
                    let scale = exact::to_biguint(&(w.numer() * (&common / w.denom())));
                    if scale.is_zero() {
                        continue;
                    }
                    let mut s = BigUint::zero();
                    for p in (0..k).filter(|&p| p >> state & 1 == 1) {
                        s += &v.nums[b * k + p];
                    }
                    total += s * scale;
                }
                let den = v.den.mul(&exact::Denominator::from_biguint(&exact::to_biguint(&common)));
                let (n, d) = den.reduce_scalar(&total);
                Scalar::Exact(BigRational::new_raw(n.into(), d.into()))
            }
            Values::Float(v) => Scalar::Float(
                weights
                    .iter()
                    .enumerate()
                    .map(|(b, w)| {
                        rational_to_f64(w) * (0..k).filter(|&p| p >> state & 1 == 1).map(|p| v[b * k + p]).sum::<f64>()
                    })
                    .sum(),
            ),
        }
    }

    /// Largest absolute entry-wise difference, in floats.
    pub fn max_abs_diff(&self, other: &StateSetDistribution) -> f64 {
        self.to_f64_vec().iter().zip(other.to_f64_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Size in bits of the shared denominator (0 in float mode).
    pub fn denominator_bits(&self) -> u64 {
        match &self.values {
            Values::Exact(v) => v.den.bits(),
            Values::Float(_) => 0,
        }
    }

    /// Rounds exact values outward onto the grid `2^-bits`: mass lost by
    /// rounding down goes to `Q` when `upward`, to `∅` otherwise, so the
    /// result dominates (resp. is dominated by) the input.
    pub fn round_outward(&mut self, bits: u64, upward: bool) -> bool {
        let k = self.k();
        let sink = if upward { k - 1 } else { 0 };
        match &mut self.values {
            Values::Exact(v) => v.round_to_grid(k, bits, sink),
            Values::Float(_) => false,
        }
    }

    /// One line per subset in mask order: `P={q0,q1} 3/8`.
    pub fn dump(&self, automaton: &Automaton) -> String {
        let k = self.k();
        let mut out = String::new();
        for b in 0..self.blocks {
            for p in 0..k {
                let set = SubsetMask(p as u64);
                if self.blocks > 1 {
                    out.push_str(&format!("[{}] ", automaton.alphabet()[b]));
                }
                out.push_str(&format!("P={} {}\n", automaton.format_subset(set), self.entry(b, set)));
            }
        }
        out
    }
}
