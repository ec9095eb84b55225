//! Weak alternating parity automata over infinite binary trees, the powerset
//! transition function Δ, and branching processes.

mod delta;
mod parse;
mod print;
mod process;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use delta::DeltaTable;
pub use parse::{
    parse_automaton, parse_automaton_json, parse_unchecked, parse_unchecked_json, ParseError, ParseErrorKind,
};
pub use process::{parse_process, parse_process_json, BranchingProcess, ProcessError};

/// Largest supported number of states; subsets of `Q` must fit one machine word.
pub const MAX_STATES: usize = 62;

pub type StateId = usize;
pub type LetterId = usize;

/// Child direction in a binary tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    L,
    R,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::L => f.write_str("L"),
            Direction::R => f.write_str("R"),
        }
    }
}

/// A set of states encoded as a bitmask: bit `i` is set iff state `i` is a member.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SubsetMask(pub u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    /// The full set of `width` states.
    pub fn full(width: usize) -> Self {
        debug_assert!(width <= MAX_STATES);
        SubsetMask((1u64 << width) - 1)
    }

    pub fn singleton(state: StateId) -> Self {
        SubsetMask(1 << state)
    }

    pub fn from_states(states: impl IntoIterator<Item = StateId>) -> Self {
        states.into_iter().fold(Self::EMPTY, |m, q| m.with(q))
    }

    pub fn contains(self, state: StateId) -> bool {
        self.0 >> state & 1 == 1
    }

    #[must_use]
    pub fn with(self, state: StateId) -> Self {
        SubsetMask(self.0 | 1 << state)
    }

    pub fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & !other.0 == 0
    }

    #[must_use]
    pub fn union(self, other: SubsetMask) -> Self {
        SubsetMask(self.0 | other.0)
    }

    #[must_use]
    pub fn intersection(self, other: SubsetMask) -> Self {
        SubsetMask(self.0 & other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Position of this subset in the canonical enumeration order.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn states(self) -> impl Iterator<Item = StateId> {
        let bits = self.0;
        (0..64).filter(move |i| bits >> i & 1 == 1)
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsetMask({:#b})", self.0)
    }
}

/// Positive boolean combination of atoms `(d, q)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TransitionFormula {
    Atom(Direction, StateId),
    And(Box<TransitionFormula>, Box<TransitionFormula>),
    Or(Box<TransitionFormula>, Box<TransitionFormula>),
}

impl TransitionFormula {
    pub fn atom(direction: Direction, state: StateId) -> Self {
        TransitionFormula::Atom(direction, state)
    }

    pub fn and(self, other: TransitionFormula) -> Self {
        TransitionFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: TransitionFormula) -> Self {
        TransitionFormula::Or(Box::new(self), Box::new(other))
    }

    /// Evaluates the formula under the valuation where `(d, p)` holds iff `p ∈ P_d`.
    pub fn eval(&self, left: SubsetMask, right: SubsetMask) -> bool {
        match self {
            TransitionFormula::Atom(Direction::L, q) => left.contains(*q),
            TransitionFormula::Atom(Direction::R, q) => right.contains(*q),
            TransitionFormula::And(a, b) => a.eval(left, right) && b.eval(left, right),
            TransitionFormula::Or(a, b) => a.eval(left, right) || b.eval(left, right),
        }
    }

    /// All atoms in left-to-right order, with repetitions.
    pub fn atoms(&self) -> Vec<(Direction, StateId)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<(Direction, StateId)>) {
        match self {
            TransitionFormula::Atom(d, q) => out.push((*d, *q)),
            TransitionFormula::And(a, b) | TransitionFormula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }
}

/// One atom `(d, q')` in `δ(q, a)` with `Ω(q) < Ω(q')`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub state: StateId,
    pub letter: LetterId,
    pub direction: Direction,
    pub target: StateId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_weak(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A structurally complete alternating parity automaton. Weakness is not
/// guaranteed; see [`WeakAutomaton`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    alphabet: Vec<String>,
    states: Vec<String>,
    initial: StateId,
    priority: Vec<u32>,
    // indexed by state * |A| + letter
    delta: Vec<TransitionFormula>,
}

impl Automaton {
    /// Builds an automaton from its components. `delta[q][a]` is `δ(q, a)`.
    pub fn new(
        alphabet: Vec<String>,
        states: Vec<String>,
        initial: StateId,
        priority: Vec<u32>,
        delta: Vec<Vec<TransitionFormula>>,
    ) -> Result<Self, ParseError> {
        use ParseErrorKind as K;
        let err = |kind| Err(ParseError { line: 0, column: 0, kind });
        if alphabet.is_empty() {
            return err(K::EmptyList("alphabet"));
        }
        if states.is_empty() {
            return err(K::EmptyList("states"));
        }
        if states.len() > MAX_STATES {
            return err(K::TooManyStates(states.len()));
        }
        if let Some(dup) = first_duplicate(&alphabet) {
            return err(K::Duplicate("letter", dup));
        }
        if let Some(dup) = first_duplicate(&states) {
            return err(K::Duplicate("state", dup));
        }
        if initial >= states.len() {
            return err(K::UnknownState(format!("#{initial}")));
        }
        if priority.len() != states.len() {
            return err(K::Syntax("priority list length differs from state count".into()));
        }
        if delta.len() != states.len() {
            return err(K::Syntax("transition rows differ from state count".into()));
        }
        let mut flat = Vec::with_capacity(states.len() * alphabet.len());
        for (q, row) in delta.into_iter().enumerate() {
            if row.len() != alphabet.len() {
                let missing = alphabet.get(row.len()).cloned().unwrap_or_default();
                return err(K::MissingTransition(states[q].clone(), missing));
            }
            for f in row {
                if let Some((_, bad)) = f.atoms().into_iter().find(|&(_, s)| s >= states.len()) {
                    return err(K::UnknownState(format!("#{bad}")));
                }
                flat.push(f);
            }
        }
        Ok(Automaton { alphabet, states, initial, priority, delta: flat })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_letters(&self) -> usize {
        self.alphabet.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn priority(&self, state: StateId) -> u32 {
        self.priority[state]
    }

    pub fn priorities(&self) -> &[u32] {
        &self.priority
    }

    pub fn transition(&self, state: StateId, letter: LetterId) -> &TransitionFormula {
        &self.delta[state * self.alphabet.len() + letter]
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn letter_index(&self, name: &str) -> Option<LetterId> {
        self.alphabet.iter().position(|s| s == name)
    }

    /// `Q`, the set of all states.
    pub fn all_states(&self) -> SubsetMask {
        SubsetMask::full(self.states.len())
    }

    /// Number of subsets of `Q`.
    pub fn num_subsets(&self) -> usize {
        1usize << self.states.len()
    }

    /// `Q_{<n}`: states of priority strictly below `n`.
    pub fn states_below(&self, n: u32) -> SubsetMask {
        SubsetMask::from_states((0..self.num_states()).filter(|&q| self.priority[q] < n))
    }

    /// `Q_{≥n}`: states of priority at least `n`.
    pub fn states_at_least(&self, n: u32) -> SubsetMask {
        SubsetMask::from_states((0..self.num_states()).filter(|&q| self.priority[q] >= n))
    }

    /// Formats a subset as `{q0,q1}`.
    pub fn format_subset(&self, set: SubsetMask) -> String {
        let names: Vec<&str> = set.states().map(|q| self.states[q].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }
}

fn first_duplicate(names: &[String]) -> Option<String> {
    let mut seen = std::collections::HashSet::new();
    names.iter().find(|n| !seen.insert(n.as_str())).cloned()
}

/// Lists every atom that increases the priority along a transition.
pub fn validate_weak(automaton: &Automaton) -> ValidationReport {
    let mut violations = Vec::new();
    for q in 0..automaton.num_states() {
        for a in 0..automaton.num_letters() {
            for (direction, target) in automaton.transition(q, a).atoms() {
                if automaton.priority(q) < automaton.priority(target) {
                    violations.push(Violation { state: q, letter: a, direction, target });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// An automaton whose priorities are non-increasing along transitions.
///
/// Carries the powerset transition function Δ, materialized as a table for
/// small automata and memoized otherwise.
#[derive(Debug)]
pub struct WeakAutomaton {
    inner: Automaton,
    table: DeltaTable,
}

impl Clone for WeakAutomaton {
    fn clone(&self) -> Self {
        WeakAutomaton::new(self.inner.clone()).expect("already validated")
    }
}

impl PartialEq for WeakAutomaton {
    fn eq(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

impl std::ops::Deref for WeakAutomaton {
    type Target = Automaton;

    fn deref(&self) -> &Automaton {
        &self.inner
    }
}

impl WeakAutomaton {
    pub fn new(automaton: Automaton) -> Result<Self, ParseError> {
        let report = validate_weak(&automaton);
        if !report.is_weak() {
            return Err(ParseError { line: 0, column: 0, kind: ParseErrorKind::NotWeak(report) });
        }
        let table = DeltaTable::for_automaton(&automaton);
        Ok(WeakAutomaton { inner: automaton, table })
    }

    pub fn automaton(&self) -> &Automaton {
        &self.inner
    }

    /// `Δ(P_L, a, P_R) = {q | v_{P_L,P_R} ⊨ δ(q, a)}`.
    pub fn delta(&self, left: SubsetMask, letter: LetterId, right: SubsetMask) -> SubsetMask {
        self.table.get(&self.inner, left, letter, right)
    }

    /// Δ evaluated directly from the formulas, bypassing the table.
    pub fn delta_uncached(&self, left: SubsetMask, letter: LetterId, right: SubsetMask) -> SubsetMask {
        delta::evaluate(&self.inner, left, letter, right)
    }

    pub fn delta_table(&self) -> &DeltaTable {
        &self.table
    }

    pub fn into_inner(self) -> Automaton {
        self.inner
    }
}

impl fmt::Display for WeakAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.inner.fmt(f)
    }
}
