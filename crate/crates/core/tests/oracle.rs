mod common;

use common::*;
use treemeasure::automaton::{BranchingProcess, SubsetMask};
use treemeasure::distribution::{apply_f, apply_q_lt, rational_to_f64, StateSetDistribution};
use treemeasure::engine::{enclose, PipelineOptions};
use treemeasure::game_oracle::{
    certified_states, enum_stage_distribution, monte_carlo, sample_tree, solve_truncated, TreePrefix,
    DEFAULT_WORK_BOUND,
};

fn f_power(base: &StateSetDistribution, aut: &treemeasure::automaton::WeakAutomaton, i: usize) -> StateSetDistribution {
    (0..i).fold(base.clone(), |d, _| apply_f(&d, aut))
}

#[test]
fn enumeration_matches_operator_powers() {
    for (name, aut) in corpus() {
        let n = aut.num_states();
        let stage1 = apply_q_lt(&f_power(&StateSetDistribution::dirac(n, aut.all_states()), &aut, 2), &aut, 1);
        let bases = [
            StateSetDistribution::dirac(n, aut.all_states()),
            StateSetDistribution::dirac(n, SubsetMask::EMPTY),
            stage1,
        ];
        for base in &bases {
            for i in 0..=2 {
                let enumerated = enum_stage_distribution(&aut, base, i, DEFAULT_WORK_BOUND).unwrap();
                assert_eq!(enumerated.to_rationals(), f_power(base, &aut, i).to_rationals(), "{name} i={i}");
            }
        }
    }
}

/// Winning states at the root under a uniform leaf boundary, by folding Δ.
fn fold_delta(aut: &treemeasure::automaton::WeakAutomaton, tree: &TreePrefix, leaf: SubsetMask) -> SubsetMask {
    let count = TreePrefix::node_count(tree.depth());
    let interior = count >> 1;
    let mut sets = vec![leaf; count];
    for v in (0..interior).rev() {
        sets[v] = aut.delta(sets[2 * v + 1], tree.label(v), sets[2 * v + 2]);
    }
    sets[0]
}

#[test]
fn truncated_games_agree_with_delta() {
    for (name, aut) in corpus() {
        let process = BranchingProcess::uniform(aut.alphabet());
        for seed in 0..6 {
            let depth = 1 + seed as usize % 4;
            let tree = sample_tree(&process, depth, seed);
            for leaf in 0..aut.num_subsets() {
                let leaf = SubsetMask(leaf as u64);
                let boundary: Vec<bool> = (0..aut.num_states()).map(|q| leaf.contains(q)).collect();
                let winners =
                    SubsetMask::from_states((0..aut.num_states()).filter(|&q| solve_truncated(&aut, &tree, q, &boundary)));
                assert_eq!(winners, fold_delta(&aut, &tree, leaf), "{name} seed {seed}");
            }
        }
    }
}

#[test]
fn certified_states_are_stable_under_delta() {
    for (name, aut) in corpus() {
        let c = certified_states(&aut);
        let (win, lose) = (c.win, c.lose);
        assert!(win.intersection(lose).is_empty(), "{name}");
        for a in 0..aut.num_letters() {
            for l in 0..aut.num_subsets() {
                for r in 0..aut.num_subsets() {
                    let (l, r) = (SubsetMask(l as u64), SubsetMask(r as u64));
                    let out = aut.delta(l.union(win), a, r.union(win));
                    assert!(win.is_subset_of(out), "{name}: certified winner lost");
                    let complement = aut.all_states().intersection(SubsetMask(!lose.0));
                    let out = aut.delta(l.intersection(complement), a, r.intersection(complement));
                    assert!(out.intersection(lose).is_empty(), "{name}: certified loser won");
                }
            }
        }
    }
}

#[test]
fn monte_carlo_overlaps_enclosures() {
    for (name, aut) in corpus() {
        let process = BranchingProcess::uniform(aut.alphabet());
        let mc = monte_carlo(&aut, &process, 1500, 8, 17).unwrap();
        assert!(mc.lo <= mc.hi, "{name}");
        let e = enclose(&aut, &PipelineOptions::new(30)).unwrap();
        let (lo, hi) = e.bounds();
        let (lo, hi) = (rational_to_f64(lo.as_exact().unwrap()), rational_to_f64(hi.as_exact().unwrap()));
        assert!(
            mc.lo - mc.halfwidth <= hi + 1e-12 && lo - 1e-12 <= mc.hi + mc.halfwidth,
            "{name}: sampled [{}, {}] ± {} vs enclosure [{lo}, {hi}]",
            mc.lo,
            mc.hi,
            mc.halfwidth
        );
    }
}
