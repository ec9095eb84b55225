//! Probability vectors with big-integer numerators over one shared,
//! factored denominator.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

const TRIAL_LIMIT: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Base {
    Small(u64),
    Big(BigUint),
}

impl Base {
    fn divides(&self, n: &BigUint) -> bool {
        match self {
            Base::Small(p) => (n % *p).is_zero(),
            Base::Big(b) => (n % b).is_zero(),
        }
    }

    fn divide(&self, n: &BigUint) -> BigUint {
        match self {
            Base::Small(p) => n / *p,
            Base::Big(b) => n / b,
        }
    }
}

/// A positive integer kept as `odd_value · 2^twos`, with the odd part factored
/// over pairwise coprime bases.
#[derive(Clone, Debug)]
pub(crate) struct Denominator {
    twos: u64,
    odd: Vec<(Base, u64)>,
    odd_value: BigUint,
    // false when some base could not be proven prime
    canonical: bool,
}

impl PartialEq for Denominator {
    fn eq(&self, other: &Self) -> bool {
        self.twos == other.twos && self.odd_value == other.odd_value
    }
}

impl Denominator {
    pub(crate) fn one() -> Self {
        Denominator { twos: 0, odd: Vec::new(), odd_value: BigUint::one(), canonical: true }
    }

    pub(crate) fn power_of_two(bits: u64) -> Self {
        Denominator { twos: bits, ..Self::one() }
    }

    /// Factors `d` by trial division.
    pub(crate) fn from_biguint(d: &BigUint) -> Self {
        assert!(!d.is_zero(), "zero denominator");
        let twos = d.trailing_zeros().unwrap_or(0);
        let mut rest = d >> twos;
        let mut odd = Vec::new();
        let mut p = 3u64;
        while p < TRIAL_LIMIT && BigUint::from(p * p) <= rest {
            let mut e = 0;
            while (&rest % p).is_zero() {
                rest /= p;
                e += 1;
            }
            if e > 0 {
                odd.push((Base::Small(p), e));
            }
            p += 2;
        }
        let mut canonical = true;
        if !rest.is_one() {
            match rest.to_u64() {
                Some(r) if r < TRIAL_LIMIT * TRIAL_LIMIT => odd.push((Base::Small(r), 1)),
                _ => {
                    canonical = false;
                    odd.push((Base::Big(rest), 1));
                }
            }
        }
        let odd_value = d >> twos;
        Denominator { twos, odd, odd_value, canonical }
    }

    pub(crate) fn value(&self) -> BigUint {
        &self.odd_value << self.twos
    }

    pub(crate) fn bits(&self) -> u64 {
        self.odd_value.bits() + self.twos
    }

    #[cfg(test)]
    pub(crate) fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub(crate) fn mul(&self, other: &Denominator) -> Denominator {
        let mut odd = self.odd.clone();
        let mut canonical = self.canonical && other.canonical;
        for (base, e) in &other.odd {
            match odd.iter_mut().find(|(b, _)| b == base) {
                Some((_, mine)) => *mine += e,
                None => {
                    if matches!(base, Base::Big(_)) || odd.iter().any(|(b, _)| matches!(b, Base::Big(_))) {
                        canonical = false;
                    }
                    odd.push((base.clone(), *e));
                }
            }
        }
        Denominator {
            twos: self.twos + other.twos,
            odd,
            odd_value: &self.odd_value * &other.odd_value,
            canonical,
        }
    }

    pub(crate) fn square(&self) -> Denominator {
        Denominator {
            twos: 2 * self.twos,
            odd: self.odd.iter().map(|(b, e)| (b.clone(), 2 * e)).collect(),
            odd_value: if self.odd_value.is_one() { BigUint::one() } else { &self.odd_value * &self.odd_value },
            canonical: self.canonical,
        }
    }

    /// Divides every entry of `nums` and this denominator by their common
    /// factors among the tracked bases.
    fn reduce(&mut self, nums: &mut [BigUint]) {
        let nonzero = || nums.iter().filter(|n| !n.is_zero());
        let tz = nonzero().map(|n| n.trailing_zeros().unwrap_or(0)).min().unwrap_or(self.twos);
        let shift = tz.min(self.twos);
        if shift > 0 {
            for n in nums.iter_mut() {
                *n >>= shift;
            }
            self.twos -= shift;
        }
        for (base, e) in &mut self.odd {
            let mut removed = 0u64;
            while *e > 0 && nums.iter().filter(|n| !n.is_zero()).all(|n| base.divides(n)) {
                for n in nums.iter_mut() {
                    if !n.is_zero() {
                        *n = base.divide(n);
                    }
                }
                *e -= 1;
                removed += 1;
            }
            for _ in 0..removed {
                self.odd_value = base.divide(&self.odd_value);
            }
        }
        self.odd.retain(|(_, e)| *e > 0);
    }

    /// Numerator and denominator of `num / self` in lowest terms.
    pub(crate) fn reduce_scalar(&self, num: &BigUint) -> (BigUint, BigUint) {
        let mut d = self.clone();
        let mut n = [num.clone()];
        if n[0].is_zero() {
            return (BigUint::zero(), BigUint::one());
        }
        d.reduce(&mut n);
        let [n] = n;
        if d.canonical {
            (n, d.value())
        } else {
            let dv = d.value();
            let g = n.gcd(&dv);
            (n / &g, dv / g)
        }
    }
}

/// Dense blocks of `k` numerators each, all over one denominator; every
/// block sums to the denominator.
#[derive(Clone, Debug)]
pub(crate) struct ExactVec {
    pub(crate) nums: Vec<BigUint>,
    pub(crate) den: Denominator,
}

pub(crate) fn to_biguint(n: &BigInt) -> BigUint {
    assert!(n.sign() != Sign::Minus, "negative probability");
    n.magnitude().clone()
}

impl ExactVec {
    pub(crate) fn dirac(blocks: usize, k: usize, index: usize) -> Self {
        let mut nums = vec![BigUint::zero(); blocks * k];
        for b in 0..blocks {
            nums[b * k + index] = BigUint::one();
        }
        ExactVec { nums, den: Denominator::one() }
    }

    pub(crate) fn from_rationals(values: &[BigRational]) -> Self {
        let den = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let nums = values.iter().map(|v| to_biguint(&(v.numer() * (&den / v.denom())))).collect();
        let mut out = ExactVec { nums, den: Denominator::from_biguint(&to_biguint(&den)) };
        out.reduce();
        out
    }

    pub(crate) fn reduce(&mut self) {
        self.den.reduce(&mut self.nums);
    }

    pub(crate) fn entry(&self, i: usize) -> BigRational {
        self.ratio(&self.nums[i])
    }

    pub(crate) fn ratio(&self, num: &BigUint) -> BigRational {
        let (n, d) = self.den.reduce_scalar(num);
        BigRational::new_raw(BigInt::from(n), BigInt::from(d))
    }

    pub(crate) fn to_rationals(&self) -> Vec<BigRational> {
        (0..self.nums.len()).map(|i| self.entry(i)).collect()
    }

    pub(crate) fn sum_over(&self, indices: impl Iterator<Item = usize>) -> BigRational {
        let mut s = BigUint::zero();
        for i in indices {
            s += &self.nums[i];
        }
        self.ratio(&s)
    }

    pub(crate) fn to_f64(&self, i: usize) -> f64 {
        ratio_to_f64(&self.nums[i], &self.den.value())
    }

    /// Exact equality of the represented rationals.
    pub(crate) fn same_values(&self, other: &ExactVec) -> bool {
        if self.nums.len() != other.nums.len() {
            return false;
        }
        if self.den.canonical && other.den.canonical {
            return self.den == other.den && self.nums == other.nums;
        }
        let (d1, d2) = (self.den.value(), other.den.value());
        self.nums.iter().zip(&other.nums).all(|(a, b)| a * &d2 == b * &d1)
    }

    /// Re-expresses the values on the grid `2^-bits` when the denominator is
    /// larger than that. Entries are rounded down and each block's lost mass
    /// goes to `sink` (index within the block). Returns whether rounding happened.
    pub(crate) fn round_to_grid(&mut self, k: usize, bits: u64, sink: usize) -> bool {
        if self.den.bits() <= bits || (self.den.odd_value.is_one() && self.den.twos <= bits) {
            return false;
        }
        let d = self.den.value();
        let shift = d.bits().saturating_sub(bits + 64);
        let d_small = if shift > 0 { (&d >> shift) + 1u32 } else { d };
        let unit = BigUint::one() << bits;
        for block in self.nums.chunks_mut(k) {
            let mut total = BigUint::zero();
            for n in block.iter_mut() {
                let scaled = ((&*n >> shift) << bits) / &d_small;
                total += &scaled;
                *n = scaled;
            }
            block[sink] += &unit - total;
        }
        self.den = Denominator::power_of_two(bits);
        self.reduce();
        true
    }
}

/// `n / d` as a float, using only the leading bits of both.
pub(crate) fn ratio_to_f64(n: &BigUint, d: &BigUint) -> f64 {
    let shift = n.bits().max(d.bits()).saturating_sub(120);
    let n = (n >> shift).to_f64().unwrap_or(0.0);
    let d = (d >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Compares two non-negative rationals by cross-multiplication.
pub fn cmp_rational(a: &BigRational, b: &BigRational) -> Ordering {
    (a.numer() * b.denom()).cmp(&(b.numer() * a.denom()))
}

/// Float approximation of a rational that avoids long division of huge operands.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let sign = if r.numer().sign() == Sign::Minus { -1.0 } else { 1.0 };
    sign * ratio_to_f64(r.numer().magnitude(), r.denom().magnitude())
}
