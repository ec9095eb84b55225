use std::fmt;

use serde::Serialize;

use super::{leq_coupling, DistributionError, Mode, Operator, Scalar, StateSetDistribution, UpSetMask};

/// Which side of `𝓕(start)` the start lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainDirection {
    /// `𝓕(start) ⪯ start`; iterates decrease and bound the limit from above.
    Descending,
    /// `start ⪯ 𝓕(start)`; iterates increase and bound the limit from below.
    Ascending,
}

impl fmt::Display for ChainDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainDirection::Descending => "descending",
            ChainDirection::Ascending => "ascending",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    ExactFixpoint,
    Epsilon,
    /// Outward rounding made the chain stationary without an exact fixpoint.
    PrecisionLimit,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Budget => "budget",
            StopReason::ExactFixpoint => "exact-fixpoint",
            StopReason::Epsilon => "epsilon",
            StopReason::PrecisionLimit => "precision-limit",
        })
    }
}

#[derive(Debug, Clone)]
pub struct IterateOptions {
    pub budget: usize,
    /// Float mode: stop once consecutive iterates differ by less than this in max norm.
    pub epsilon: Option<f64>,
    /// Exact mode: denominators above this many bits are rounded outward.
    pub max_bits: Option<u64>,
    /// Up-set whose sum (in block `trace_block`) is recorded per iterate.
    pub trace_upset: Option<UpSetMask>,
    pub trace_block: usize,
    /// Keep every iterate, for inspection.
    pub keep_iterates: bool,
}

impl IterateOptions {
    pub fn with_budget(budget: usize) -> Self {
        IterateOptions { budget, epsilon: None, max_bits: None, trace_upset: None, trace_block: 0, keep_iterates: false }
    }

    pub fn trace(mut self, upset: UpSetMask) -> Self {
        self.trace_upset = Some(upset);
        self
    }

    pub fn epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn max_bits(mut self, bits: u64) -> Self {
        self.max_bits = Some(bits);
        self
    }

    pub fn keep_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct IterationResult {
    pub value: StateSetDistribution,
    pub iterations: usize,
    pub direction: ChainDirection,
    pub stopped_by: StopReason,
    /// Designated up-set sum of the start and of every iterate.
    pub trace: Vec<Scalar>,
    /// Every iterate including the start, when requested.
    pub iterates: Vec<StateSetDistribution>,
    /// Whether any iterate was rounded outward.
    pub rounded: bool,
}

/// Checks that `start` lies on the declared side of `𝓕(start)`, then iterates.
pub fn iterate(
    start: &StateSetDistribution,
    op: Operator<'_>,
    direction: ChainDirection,
    options: &IterateOptions,
) -> Result<IterationResult, DistributionError> {
    let first = op.apply(start);
    let ok = match direction {
        ChainDirection::Descending => leq_coupling(&first, start)?,
        ChainDirection::Ascending => leq_coupling(start, &first)?,
    };
    if !ok {
        let side = match direction {
            ChainDirection::Descending => "F(start) ⪯ start",
            ChainDirection::Ascending => "start ⪯ F(start)",
        };
        return Err(DistributionError::Precondition(format!("{side} does not hold")));
    }
    Ok(run(start, Some(first), op, direction, options))
}

/// Iterates without the side check; `direction` only labels the result.
pub fn iterate_unchecked(
    start: &StateSetDistribution,
    op: Operator<'_>,
    direction: ChainDirection,
    options: &IterateOptions,
) -> IterationResult {
    run(start, None, op, direction, options)
}

fn run(
    start: &StateSetDistribution,
    mut first: Option<StateSetDistribution>,
    op: Operator<'_>,
    direction: ChainDirection,
    options: &IterateOptions,
) -> IterationResult {
    let record = |d: &StateSetDistribution, trace: &mut Vec<Scalar>| {
        if let Some(u) = &options.trace_upset {
            trace.push(d.upset_sum(options.trace_block, u));
        }
    };
    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    record(start, &mut trace);
    if options.keep_iterates {
        iterates.push(start.clone());
    }
    let mut current = start.clone();
    let mut rounded = false;
    let mut stopped_by = StopReason::Budget;
    let mut iterations = 0;
    while iterations < options.budget {
        let mut next = first.take().unwrap_or_else(|| op.apply(&current));
        let mut rounded_now = false;
        if let (Mode::Exact, Some(bits)) = (next.mode(), options.max_bits) {
            rounded_now = next.round_outward(bits, direction == ChainDirection::Descending);
            rounded |= rounded_now;
        }
        iterations += 1;
        record(&next, &mut trace);
        if options.keep_iterates {
            iterates.push(next.clone());
        }
        let stop = match next.mode() {
            Mode::Exact if next == current => Some(if rounded_now || rounded {
                StopReason::PrecisionLimit
            } else {
                StopReason::ExactFixpoint
            }),
            Mode::Float => options.epsilon.filter(|&eps| next.max_abs_diff(&current) < eps).map(|_| StopReason::Epsilon),
            _ => None,
        };
        current = next;
        if let Some(reason) = stop {
            stopped_by = reason;
            break;
        }
    }
    IterationResult { value: current, iterations, direction, stopped_by, trace, iterates, rounded }
}
