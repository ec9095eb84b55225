//! The staged measure pipeline: alternating safety and reachability stages
//! over the priorities, point estimates, sound enclosures and comparison.

mod compare;
mod pipeline;
mod report;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::automaton::WeakAutomaton;
use crate::distribution::{DistributionError, IterationResult, Mode, Scalar, StateSetDistribution};

pub use compare::{compare, Comparison, Relation};
pub use pipeline::{enclose, enclose_branching, run_pipeline, run_pipeline_branching};
pub use report::decimal_bound;

/// Exact denominators are rounded outward beyond this many bits unless overridden.
pub const DEFAULT_MAX_BITS: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("budget must be at least 1")]
    Budget,
    #[error("process alphabet {process:?} differs from automaton alphabet {automaton:?}")]
    AlphabetMismatch { automaton: Vec<String>, process: Vec<String> },
    #[error("threshold {0} is outside [0,1]")]
    ThresholdOutOfRange(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StageKind {
    /// Safety stage, iterated downward from its base.
    S,
    /// Reachability stage, iterated upward from its base.
    R,
}

/// How the distribution entering a stage is obtained from the previous stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entry {
    /// Stage 0 starts from `dirac(Q)`.
    Base,
    /// `P ↦ P ∩ Q_{<n}`.
    QLt(u32),
    /// `P ↦ P ∪ Q_{≥n}`.
    QGeq(u32),
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Base => f.write_str("dirac(Q)"),
            Entry::QLt(n) => write!(f, "Q_<{n}"),
            Entry::QGeq(n) => write!(f, "Q_>={n}"),
        }
    }
}

impl Serialize for Entry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Stage {
    pub n: u32,
    pub kind: StageKind,
    pub entry: Entry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StagePlan {
    /// The last stage index `N`, even and greater than `Ω(q_I)`.
    #[serde(rename = "N")]
    pub top: u32,
    pub stages: Vec<Stage>,
}

/// Stages `0..=N` with `N = Ω(q_I)+1` for odd and `Ω(q_I)+2` for even priorities.
pub fn plan_stages(automaton: &WeakAutomaton) -> StagePlan {
    let p = automaton.priority(automaton.initial());
    let top = if p % 2 == 1 { p + 1 } else { p + 2 };
    let stages = (0..=top)
        .map(|n| Stage {
            n,
            kind: if n % 2 == 0 { StageKind::S } else { StageKind::R },
            entry: match n {
                0 => Entry::Base,
                n if n % 2 == 1 => Entry::QLt(n),
                n => Entry::QGeq(n),
            },
        })
        .collect();
    StagePlan { top, stages }
}

/// Relation of a computed distribution to the true one, in `⪯`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Exact,
    /// Dominates the true distribution.
    Upper,
    /// Dominated by the true distribution.
    Lower,
    Mixed,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Exact => "exact",
            Bound::Upper => "upper",
            Bound::Lower => "lower",
            Bound::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Point,
    Lower,
    Upper,
}

/// One chain run inside a stage.
#[derive(Debug, Clone)]
pub struct StageChain {
    pub role: Role,
    /// Distribution entering the stage.
    pub alpha: StateSetDistribution,
    /// `None` for the last stage, which is not iterated.
    pub beta: Option<IterationResult>,
    /// The chain was restarted from `dirac(∅)` or `dirac(Q)`.
    pub restarted: bool,
    /// Point mode: relation of `beta` to the true stage limit.
    pub bound: Option<Bound>,
}

#[derive(Debug, Clone)]
pub struct StageRecord {
    pub stage: Stage,
    pub chains: Vec<StageChain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultKind {
    Point,
    Enclosure,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub plan: StagePlan,
    pub kind: ResultKind,
    pub mode: Mode,
    pub branching: bool,
    pub stages: Vec<StageRecord>,
    /// Point mode: `∑_{P ∋ q_I} α_N(P)` (weighted by the initial law for processes).
    pub estimate: Option<Scalar>,
    /// Enclosure mode: the same sum for the lower and upper brackets.
    pub interval: Option<(Scalar, Scalar)>,
    /// Point mode: relation of the estimate to the measure.
    pub bound: Option<Bound>,
}

impl PipelineResult {
    /// Whether the measure is known exactly.
    pub fn is_certified_exact(&self) -> bool {
        if self.mode != Mode::Exact {
            return false;
        }
        match (&self.estimate, &self.interval) {
            (Some(_), _) => self.bound == Some(Bound::Exact),
            (None, Some((lo, hi))) => lo == hi,
            _ => false,
        }
    }

    /// Bounds on the measure implied by this result.
    pub fn bounds(&self) -> (Scalar, Scalar) {
        let (zero, one) = (Scalar::zero(self.mode), Scalar::one(self.mode));
        if let Some((lo, hi)) = &self.interval {
            return (lo.clone(), hi.clone());
        }
        let e = self.estimate.clone().unwrap_or_else(|| zero.clone());
        match self.bound {
            Some(Bound::Exact) => (e.clone(), e),
            Some(Bound::Lower) => (e, one),
            Some(Bound::Upper) => (zero, e),
            _ => (zero, one),
        }
    }

    /// Total iterations over all chains.
    pub fn total_iterations(&self) -> usize {
        self.stages.iter().flat_map(|s| &s.chains).filter_map(|c| c.beta.as_ref()).map(|b| b.iterations).sum()
    }
}

/// Iteration settings shared by every stage.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub budget: usize,
    /// Per-stage overrides: entry `n` replaces `budget` for stage `n`.
    pub stage_budgets: Vec<usize>,
    pub mode: Mode,
    /// Float mode stopping threshold.
    pub epsilon: Option<f64>,
    /// Exact mode denominator cap; `None` keeps every value exact.
    pub max_bits: Option<u64>,
}

impl PipelineOptions {
    pub fn new(budget: usize) -> Self {
        PipelineOptions { budget, stage_budgets: Vec::new(), mode: Mode::Exact, epsilon: None, max_bits: Some(DEFAULT_MAX_BITS) }
    }

    pub fn exact_unbounded(budget: usize) -> Self {
        PipelineOptions { max_bits: None, ..Self::new(budget) }
    }

    pub fn float(budget: usize, epsilon: f64) -> Self {
        PipelineOptions { mode: Mode::Float, epsilon: Some(epsilon), max_bits: None, ..Self::new(budget) }
    }

    pub fn with_stage_budgets(mut self, budgets: Vec<usize>) -> Self {
        self.stage_budgets = budgets;
        self
    }

    pub fn with_max_bits(mut self, bits: Option<u64>) -> Self {
        self.max_bits = bits;
        self
    }

    pub fn budget_for(&self, n: u32) -> usize {
        self.stage_budgets.get(n as usize).copied().unwrap_or(self.budget)
    }

    fn check(&self) -> Result<(), EngineError> {
        if self.budget == 0 || self.stage_budgets.contains(&0) {
            return Err(EngineError::Budget);
        }
        Ok(())
    }
}
