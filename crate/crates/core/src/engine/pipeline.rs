use crate::automaton::{BranchingProcess, SubsetMask, WeakAutomaton};
use crate::distribution::{
    apply_q_geq, apply_q_lt, iterate, iterate_unchecked, leq_coupling, ChainDirection, DistributionError,
    IterateOptions, IterationResult, Operator, Scalar, StateSetDistribution, StopReason,
};

use super::{
    plan_stages, Bound, EngineError, Entry, PipelineOptions, PipelineResult, ResultKind, Role, Stage, StageChain,
    StageKind, StageRecord,
};

/// Point estimate for the coin-flipping measure.
pub fn run_pipeline(automaton: &WeakAutomaton, options: &PipelineOptions) -> Result<PipelineResult, EngineError> {
    run_point(Operator::Uniform(automaton), options)
}

/// Point estimate for the measure induced by a branching process.
pub fn run_pipeline_branching(
    automaton: &WeakAutomaton,
    process: &BranchingProcess,
    options: &PipelineOptions,
) -> Result<PipelineResult, EngineError> {
    check_alphabet(automaton, process)?;
    run_point(Operator::Branching(automaton, process), options)
}

/// Sound interval for the coin-flipping measure.
pub fn enclose(automaton: &WeakAutomaton, options: &PipelineOptions) -> Result<PipelineResult, EngineError> {
    run_enclosure(Operator::Uniform(automaton), options)
}

/// Sound interval for the measure induced by a branching process.
pub fn enclose_branching(
    automaton: &WeakAutomaton,
    process: &BranchingProcess,
    options: &PipelineOptions,
) -> Result<PipelineResult, EngineError> {
    check_alphabet(automaton, process)?;
    run_enclosure(Operator::Branching(automaton, process), options)
}

fn check_alphabet(automaton: &WeakAutomaton, process: &BranchingProcess) -> Result<(), EngineError> {
    if automaton.alphabet() != process.alphabet() {
        return Err(EngineError::AlphabetMismatch {
            automaton: automaton.alphabet().to_vec(),
            process: process.alphabet().to_vec(),
        });
    }
    Ok(())
}

fn enter(alpha: &StateSetDistribution, stage: &Stage, automaton: &WeakAutomaton) -> StateSetDistribution {
    match stage.entry {
        Entry::Base => alpha.clone(),
        Entry::QLt(n) => apply_q_lt(alpha, automaton, n),
        Entry::QGeq(n) => apply_q_geq(alpha, automaton, n),
    }
}

fn measure_of(alpha: &StateSetDistribution, op: Operator<'_>) -> Scalar {
    let initial = op.automaton().initial();
    match op {
        Operator::Uniform(_) => alpha.containing_sum(0, initial),
        Operator::Branching(_, process) => alpha.weighted_containing_sum(process.init_distribution(), initial),
    }
}

fn extreme(op: Operator<'_>, options: &PipelineOptions, set: SubsetMask) -> StateSetDistribution {
    StateSetDistribution::dirac_family(op.automaton().num_states(), op.blocks(), set, options.mode)
}

fn iterate_options(options: &PipelineOptions, n: u32) -> IterateOptions {
    let mut opts = IterateOptions::with_budget(options.budget_for(n));
    opts.epsilon = options.epsilon;
    opts.max_bits = options.max_bits;
    opts
}

fn natural(kind: StageKind) -> ChainDirection {
    match kind {
        StageKind::S => ChainDirection::Descending,
        StageKind::R => ChainDirection::Ascending,
    }
}

// The last rounded iterate is a post- (resp. pre-) fixpoint.
fn stationary(result: &IterationResult) -> bool {
    matches!(result.stopped_by, StopReason::ExactFixpoint | StopReason::PrecisionLimit)
}

/// Runs one point-mode stage from `alpha`, whose relation to the true stage
/// base is `incoming`, and returns the chain with the relation of its end
/// point to the true stage limit.
fn point_stage(
    alpha: &StateSetDistribution,
    op: Operator<'_>,
    kind: StageKind,
    incoming: Bound,
    opts: &IterateOptions,
) -> Result<(IterationResult, Bound), EngineError> {
    let own = match kind {
        StageKind::S => Bound::Upper,
        StageKind::R => Bound::Lower,
    };
    match incoming {
        Bound::Exact => {
            let result = iterate(alpha, op, natural(kind), opts)?;
            let bound = if result.stopped_by == StopReason::ExactFixpoint { Bound::Exact } else { own };
            Ok((result, bound))
        }
        Bound::Upper | Bound::Lower => {
            let (direction, agrees) = if incoming == Bound::Upper {
                (ChainDirection::Descending, kind == StageKind::S)
            } else {
                (ChainDirection::Ascending, kind == StageKind::R)
            };
            let result = iterate_unchecked(alpha, op, direction, opts);
            let monotone = || -> Result<bool, DistributionError> {
                let first = op.apply(alpha);
                match direction {
                    ChainDirection::Descending => leq_coupling(&first, alpha),
                    ChainDirection::Ascending => leq_coupling(alpha, &first),
                }
            };
            let bound = if agrees || stationary(&result) || monotone()? { incoming } else { Bound::Mixed };
            Ok((result, bound))
        }
        Bound::Mixed => Ok((iterate_unchecked(alpha, op, natural(kind), opts), Bound::Mixed)),
    }
}

fn run_point(op: Operator<'_>, options: &PipelineOptions) -> Result<PipelineResult, EngineError> {
    options.check()?;
    let aut = op.automaton();
    let plan = plan_stages(aut);
    let mut alpha = extreme(op, options, aut.all_states());
    let mut bound = Bound::Exact;
    let mut stages = Vec::new();
    for stage in &plan.stages {
        alpha = enter(&alpha, stage, aut);
        if stage.n == plan.top {
            let chain = StageChain { role: Role::Point, alpha: alpha.clone(), beta: None, restarted: false, bound: None };
            stages.push(StageRecord { stage: *stage, chains: vec![chain] });
            break;
        }
        let (result, next) = point_stage(&alpha, op, stage.kind, bound, &iterate_options(options, stage.n))?;
        bound = next;
        let beta = result.value.clone();
        let chain = StageChain { role: Role::Point, alpha, beta: Some(result), restarted: false, bound: Some(bound) };
        stages.push(StageRecord { stage: *stage, chains: vec![chain] });
        alpha = beta;
    }
    Ok(PipelineResult {
        plan,
        kind: ResultKind::Point,
        mode: options.mode,
        branching: matches!(op, Operator::Branching(..)),
        stages,
        estimate: Some(measure_of(&alpha, op)),
        interval: None,
        bound: Some(bound),
    })
}

/// Iterates `from` in `direction` if it lies on that side of its image,
/// otherwise restarts from `fallback`.
fn checked_or_restart(
    from: &StateSetDistribution,
    fallback: StateSetDistribution,
    op: Operator<'_>,
    direction: ChainDirection,
    opts: &IterateOptions,
) -> Result<(IterationResult, bool), EngineError> {
    match iterate(from, op, direction, opts) {
        Ok(result) => Ok((result, false)),
        Err(DistributionError::Precondition(_)) => Ok((iterate_unchecked(&fallback, op, direction, opts), true)),
        Err(e) => Err(e.into()),
    }
}

fn run_enclosure(op: Operator<'_>, options: &PipelineOptions) -> Result<PipelineResult, EngineError> {
    options.check()?;
    let aut = op.automaton();
    let plan = plan_stages(aut);
    let top = extreme(op, options, aut.all_states());
    let bottom = extreme(op, options, SubsetMask::EMPTY);
    let (mut lo, mut hi) = (top.clone(), top.clone());
    let mut stages = Vec::new();
    for stage in &plan.stages {
        lo = enter(&lo, stage, aut);
        hi = enter(&hi, stage, aut);
        let chain = |role, alpha: &StateSetDistribution, beta, restarted| StageChain {
            role,
            alpha: alpha.clone(),
            beta,
            restarted,
            bound: None,
        };
        if stage.n == plan.top {
            let chains = vec![chain(Role::Lower, &lo, None, false), chain(Role::Upper, &hi, None, false)];
            stages.push(StageRecord { stage: *stage, chains });
            break;
        }
        let opts = iterate_options(options, stage.n);
        let ((lo_res, lo_restart), (hi_res, hi_restart)) = match stage.kind {
            StageKind::S => (
                checked_or_restart(&lo, bottom.clone(), op, ChainDirection::Ascending, &opts)?,
                (iterate_unchecked(&hi, op, ChainDirection::Descending, &opts), false),
            ),
            StageKind::R => (
                (iterate_unchecked(&lo, op, ChainDirection::Ascending, &opts), false),
                checked_or_restart(&hi, top.clone(), op, ChainDirection::Descending, &opts)?,
            ),
        };
        let (next_lo, next_hi) = (lo_res.value.clone(), hi_res.value.clone());
        let chains =
            vec![chain(Role::Lower, &lo, Some(lo_res), lo_restart), chain(Role::Upper, &hi, Some(hi_res), hi_restart)];
        stages.push(StageRecord { stage: *stage, chains });
        lo = next_lo;
        hi = next_hi;
    }
    Ok(PipelineResult {
        plan,
        kind: ResultKind::Enclosure,
        mode: options.mode,
        branching: matches!(op, Operator::Branching(..)),
        stages,
        estimate: None,
        interval: Some((measure_of(&lo, op), measure_of(&hi, op))),
        bound: None,
    })
}
