//! Independent checks of the engine: the acceptance game on finite tree
//! prefixes, exhaustive enumeration of stage iterates, and Monte Carlo
//! estimation of the measure.

mod arena;
mod enumerate;
mod monte_carlo;
mod sample;

use thiserror::Error;

use crate::automaton::{Direction, LetterId};

pub use arena::{certified_states, solve_truncated, Arena, Certificates, Owner, Position, PositionItem};
pub use enumerate::{enum_stage_distribution, enumeration_work, DEFAULT_WORK_BOUND, MAX_ENUM_STEPS};
pub use monte_carlo::{monte_carlo, MonteCarloResult};
pub use sample::{sample_tree, sample_tree_stream, Sampler};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration of {steps} steps is limited to {max}")]
    TooManySteps { steps: usize, max: usize },
    #[error("enumeration needs {work} evaluations, above the bound {bound}")]
    WorkBound { work: u128, bound: u128 },
    #[error("enumeration needs an exact base distribution")]
    FloatBase,
    #[error("base distribution has {got} states, automaton has {expected}")]
    Width { expected: usize, got: usize },
    #[error("process alphabet differs from automaton alphabet")]
    AlphabetMismatch,
}

/// A complete labelling of the binary tree up to depth `d`, stored in
/// breadth-first order: node `i` has children `2i+1` (L) and `2i+2` (R).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreePrefix {
    depth: usize,
    labels: Vec<LetterId>,
}

impl TreePrefix {
    /// Number of nodes of a complete prefix of depth `depth`.
    pub fn node_count(depth: usize) -> usize {
        (1usize << (depth + 1)) - 1
    }

    /// Panics unless `labels` has exactly `2^(depth+1) − 1` entries.
    pub fn from_labels(depth: usize, labels: Vec<LetterId>) -> Self {
        assert_eq!(labels.len(), Self::node_count(depth), "incomplete tree prefix");
        TreePrefix { depth, labels }
    }

    /// Every node labelled `letter`.
    pub fn constant(depth: usize, letter: LetterId) -> Self {
        TreePrefix { depth, labels: vec![letter; Self::node_count(depth)] }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn labels(&self) -> &[LetterId] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> LetterId {
        self.labels[node]
    }

    /// Label of the node reached from the root along `path`.
    pub fn label_at(&self, path: &[Direction]) -> LetterId {
        self.labels[Self::node_of(path)]
    }

    pub fn node_of(path: &[Direction]) -> usize {
        path.iter().fold(0, |v, d| Self::child(v, *d))
    }

    pub fn child(node: usize, direction: Direction) -> usize {
        match direction {
            Direction::L => 2 * node + 1,
            Direction::R => 2 * node + 2,
        }
    }

    pub fn node_depth(node: usize) -> usize {
        (usize::BITS - 1 - (node + 1).leading_zeros()) as usize
    }

    /// The first `depth + 1` levels.
    pub fn truncate(&self, depth: usize) -> TreePrefix {
        assert!(depth <= self.depth);
        TreePrefix { depth, labels: self.labels[..Self::node_count(depth)].to_vec() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_arithmetic() {
        assert_eq!(TreePrefix::node_count(0), 1);
        assert_eq!(TreePrefix::node_count(3), 15);
        assert_eq!(TreePrefix::node_of(&[Direction::L, Direction::R]), 4);
        assert_eq!(TreePrefix::node_depth(0), 0);
        assert_eq!(TreePrefix::node_depth(2), 1);
        assert_eq!(TreePrefix::node_depth(6), 2);
        assert_eq!(TreePrefix::node_depth(7), 3);
        let t = TreePrefix::from_labels(1, vec![0, 1, 2]);
        assert_eq!(t.label_at(&[Direction::R]), 2);
        assert_eq!(t.truncate(0), TreePrefix::constant(0, 0));
    }
}
