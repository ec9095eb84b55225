use crate::automaton::{StateId, SubsetMask};

/// A family of subsets of `Q`, stored as a bitset over subset indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UpSetMask {
    width: usize,
    words: Vec<u64>,
}

impl UpSetMask {
    pub fn empty(width: usize) -> Self {
        let k = 1usize << width;
        UpSetMask { width, words: vec![0; k.div_ceil(64)] }
    }

    /// The family of all `P` with `pred(P)`.
    pub fn from_predicate(width: usize, pred: impl Fn(SubsetMask) -> bool) -> Self {
        let mut out = Self::empty(width);
        for p in 0..1u64 << width {
            if pred(SubsetMask(p)) {
                out.insert(SubsetMask(p));
            }
        }
        out
    }

    /// `{P | state ∈ P}`.
    pub fn containing(width: usize, state: StateId) -> Self {
        Self::from_predicate(width, |p| p.contains(state))
    }

    /// `{P | base ⊆ P}`.
    pub fn above(width: usize, base: SubsetMask) -> Self {
        Self::from_predicate(width, |p| base.is_subset_of(p))
    }

    /// Up-set given directly as a bitmask over the `2^width ≤ 64` indices.
    pub fn from_bits(width: usize, bits: u64) -> Self {
        assert!(width <= 6);
        UpSetMask { width, words: vec![bits] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn insert(&mut self, set: SubsetMask) {
        let i = set.index();
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, set: SubsetMask) -> bool {
        let i = set.index();
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn members(&self) -> impl Iterator<Item = SubsetMask> + '_ {
        (0..1u64 << self.width).map(SubsetMask).filter(|&p| self.contains(p))
    }

    /// Closed under adding single states, hence under supersets.
    pub fn is_upward_closed(&self) -> bool {
        self.members().all(|p| (0..self.width).all(|q| self.contains(p.with(q))))
    }
}

/// Every up-set of `𝖯(Q)` for `|Q| = width ≤ 6`, as bitmasks over the subset
/// indices. Counts follow the Dedekind numbers (3, 6, 20, 168, 7581, 7828354).
pub fn enumerate_upsets(width: usize) -> Vec<u64> {
    assert!(width <= 6, "up-set enumeration is limited to 6 states");
    // An up-set on n+1 states splits into the part without the new state (U0)
    // and the part with it (U1), with U0 ⊆ U1, both up-sets on n states.
    let mut current: Vec<u64> = vec![0, 1];
    for n in 0..width {
        let half = 1u32 << n;
        let mut next = Vec::new();
        for &u1 in &current {
            for &u0 in &current {
                if u0 & !u1 == 0 {
                    next.push(u0 | u1 << half);
                }
            }
        }
        current = next;
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedekind_counts() {
        let counts: Vec<usize> = (0..=4).map(|n| enumerate_upsets(n).len()).collect();
        assert_eq!(counts, vec![2, 3, 6, 20, 168]);
    }

    #[test]
    fn enumerated_families_are_upward_closed() {
        for n in 0..=3 {
            for bits in enumerate_upsets(n) {
                assert!(UpSetMask::from_bits(n, bits).is_upward_closed());
            }
        }
        let mut not_up = UpSetMask::empty(2);
        not_up.insert(SubsetMask(1));
        assert!(!not_up.is_upward_closed());
        assert!(UpSetMask::containing(3, 1).is_upward_closed());
        assert!(UpSetMask::above(3, SubsetMask(0b101)).is_upward_closed());
    }
}
