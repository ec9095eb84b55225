mod common;

use common::*;
use num_rational::BigRational;
use num_traits::{One, Zero};
use treemeasure::automaton::BranchingProcess;
use treemeasure::distribution::{Mode, Scalar, StateSetDistribution};
use treemeasure::engine::{
    compare, enclose, plan_stages, run_pipeline, run_pipeline_branching, Bound, PipelineOptions, Relation,
};

fn exact(s: &Scalar) -> BigRational {
    s.as_exact().expect("exact value").clone()
}

#[test]
fn enclosures_are_nested_and_bracket_point_runs() {
    for (name, aut) in corpus() {
        let mut previous: Option<(BigRational, BigRational)> = None;
        for budget in [1, 2, 4, 8] {
            let e = enclose(&aut, &PipelineOptions::new(budget)).unwrap();
            let (lo, hi) = e.bounds();
            let (lo, hi) = (exact(&lo), exact(&hi));
            assert!(lo <= hi, "{name} budget {budget}");
            assert!(lo >= BigRational::zero() && hi <= BigRational::one(), "{name}");
            if let Some((plo, phi)) = &previous {
                assert!(&lo >= plo && &hi <= phi, "{name}: enclosure widened at budget {budget}");
            }
            let p = run_pipeline(&aut, &PipelineOptions::new(budget)).unwrap();
            let (plo, phi) = p.bounds();
            assert!(exact(&plo) <= hi && exact(&phi) >= lo, "{name}: point bounds disjoint from enclosure");
            previous = Some((lo, hi));
        }
    }
}

#[test]
fn enclosure_contains_known_measures() {
    let known = [("all_accept", r(1, 1)), ("all_reject", r(0, 1)), ("reach", r(1, 1)), ("safety_half", r(1, 2))];
    for (name, value) in known {
        let aut = load(name);
        for budget in 1..=12 {
            let e = enclose(&aut, &PipelineOptions::new(budget)).unwrap();
            let (lo, hi) = e.bounds();
            assert!(exact(&lo) <= value && value <= exact(&hi), "{name} budget {budget}");
        }
    }
}

/// `∑_a init(a)·β_a` as a vector over subsets.
fn mixture(d: &StateSetDistribution, init: &[BigRational]) -> Vec<BigRational> {
    let values = d.to_rationals().unwrap();
    let k = d.k();
    (0..k).map(|p| (0..d.blocks()).map(|a| &init[a] * &values[a * k + p]).sum()).collect()
}

#[test]
fn uniform_process_reproduces_coin_flipping_stages() {
    for (name, aut) in corpus() {
        let options = PipelineOptions::exact_unbounded(6);
        let process = BranchingProcess::uniform(aut.alphabet());
        let init = process.init_distribution();
        let plain = run_pipeline(&aut, &options).unwrap();
        let lifted = run_pipeline_branching(&aut, &process, &options).unwrap();
        assert_eq!(plain.stages.len(), lifted.stages.len(), "{name}");
        for (s, t) in plain.stages.iter().zip(&lifted.stages) {
            let (c, d) = (&s.chains[0], &t.chains[0]);
            assert_eq!(mixture(&d.alpha, init), c.alpha.to_rationals().unwrap(), "{name} stage {} alpha", s.stage.n);
            if let (Some(x), Some(y)) = (&c.beta, &d.beta) {
                assert_eq!(mixture(&y.value, init), x.value.to_rationals().unwrap(), "{name} stage {} beta", s.stage.n);
                assert_eq!(x.iterations, y.iterations, "{name}");
            }
        }
        assert_eq!(plain.estimate, lifted.estimate, "{name}");
    }
}

#[test]
fn dirac_processes_give_zero_or_one() {
    for (name, aut) in corpus() {
        for letter in 0..aut.num_letters() {
            let p = BranchingProcess::dirac(aut.alphabet(), letter);
            let result = run_pipeline_branching(&aut, &p, &PipelineOptions::new(30)).unwrap();
            let (lo, hi) = result.bounds();
            let (lo, hi) = (exact(&lo), exact(&hi));
            assert!(
                lo.is_one() || hi.is_zero() || lo == hi,
                "{name} letter {letter}: [{lo}, {hi}]"
            );
            if lo == hi {
                assert!(lo.is_zero() || lo.is_one(), "{name} letter {letter}: {lo}");
            }
        }
    }
}

#[test]
fn plan_sizes_follow_top_priority() {
    for (name, aut) in corpus() {
        let plan = plan_stages(&aut);
        let top = aut.priority(aut.initial()) + 1;
        assert_eq!(plan.top % 2, 0, "{name}");
        assert!(plan.top == top || plan.top == top + 1, "{name}");
        assert_eq!(plan.stages.len() as u32, plan.top + 1);
    }
}

#[test]
fn float_mode_tracks_exact_mode() {
    for (name, aut) in corpus() {
        let e = run_pipeline(&aut, &PipelineOptions::new(8)).unwrap();
        let f = run_pipeline(&aut, &PipelineOptions::float(8, 0.0)).unwrap();
        assert_eq!(f.mode, Mode::Float);
        let (x, y) = (e.estimate.unwrap().to_f64(), f.estimate.as_ref().unwrap().to_f64());
        assert!((x - y).abs() < 1e-9, "{name}: {x} vs {y}");
        assert_eq!(compare(&f, &r(1, 2)).unwrap().relation, Relation::Unknown);
    }
}

#[test]
fn trivial_measures_are_certified() {
    for (name, value) in [("all_accept", 1), ("all_reject", 0)] {
        let result = run_pipeline(&load(name), &PipelineOptions::new(30)).unwrap();
        assert!(result.is_certified_exact(), "{name}");
        assert_eq!(result.bound, Some(Bound::Exact));
        assert_eq!(exact(result.estimate.as_ref().unwrap()), r(value, 1));
        assert_eq!(compare(&result, &r(value, 1)).unwrap().relation, Relation::Eq);
    }
}
