use rayon::prelude::*;
use serde::Serialize;

use super::{certified_states, Arena, OracleError, Sampler};
use crate::automaton::{Automaton, BranchingProcess};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub samples: u64,
    pub depth: usize,
    pub seed: u64,
    /// Fraction of samples won under the pessimistic boundary.
    pub lo: f64,
    /// One minus the fraction lost under the optimistic boundary.
    pub hi: f64,
    /// `hi − lo`: samples the truncation could not decide.
    pub undecided: f64,
    /// `3·√(1/(4·samples))`.
    pub halfwidth: f64,
}

/// Samples `samples` trees of depth `depth` (sample `i` uses PRNG stream `i`
/// of `seed`) and solves the truncated game from `q_I` under both boundaries.
pub fn monte_carlo(
    aut: &Automaton,
    process: &BranchingProcess,
    samples: u64,
    depth: usize,
    seed: u64,
) -> Result<MonteCarloResult, OracleError> {
    if aut.alphabet() != process.alphabet() {
        return Err(OracleError::AlphabetMismatch);
    }
    let n = aut.num_states();
    let cert = certified_states(aut);
    let (settled, pessimistic, optimistic) = (cert.settled(n), cert.pessimistic(n), cert.optimistic(n));
    let sampler = Sampler::new(process);
    let (wins, losses) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let tree = sampler.sample(depth, seed, i);
            let arena = Arena::build(aut, &tree, aut.initial(), &settled);
            let win = arena.root_wins(&pessimistic);
            let lose = !arena.root_wins(&optimistic);
            (win as u64, lose as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let total = samples.max(1) as f64;
    let lo = wins as f64 / total;
    let hi = 1.0 - losses as f64 / total;
    Ok(MonteCarloResult {
        samples,
        depth,
        seed,
        lo,
        hi,
        undecided: (samples - wins - losses) as f64 / total,
        halfwidth: 3.0 * (1.0 / (4.0 * total)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::parse_automaton;

    #[test]
    fn all_accepting_is_decided() {
        let aut = parse_automaton("alphabet: a b\nstates: q\ninitial: q\npriority: q 0\n\
             delta: q a = (L q) & (R q)\ndelta: q b = (L q) | (R q)\n")
        .unwrap();
        let p = BranchingProcess::uniform(aut.alphabet());
        let r = monte_carlo(&aut, &p, 200, 4, 1).unwrap();
        assert_eq!((r.lo, r.hi, r.undecided), (1.0, 1.0, 0.0));
        assert!((r.halfwidth - 3.0 * (1.0f64 / 800.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let aut = parse_automaton(
            "alphabet: a b\nstates: q_r q_acc\ninitial: q_r\npriority: q_r 1 q_acc 0\n\
             delta: q_r a = (L q_acc)\ndelta: q_r b = (L q_r) | (R q_r)\n\
             delta: q_acc a = (L q_acc) & (R q_acc)\ndelta: q_acc b = (L q_acc) & (R q_acc)\n",
        )
        .unwrap();
        let p = BranchingProcess::uniform(aut.alphabet());
        let parallel = monte_carlo(&aut, &p, 300, 6, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| monte_carlo(&aut, &p, 300, 6, 9).unwrap());
        assert_eq!(parallel, serial);
        assert!(parallel.lo <= parallel.hi);
    }
}
