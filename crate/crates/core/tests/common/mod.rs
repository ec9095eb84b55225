#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use treemeasure::automaton::{parse_automaton, parse_process, BranchingProcess, WeakAutomaton};

pub const NAMED: [&str; 4] = ["all_accept", "all_reject", "reach", "safety_half"];
pub const RANDOM_COUNT: u64 = 20;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn random_name(i: u64) -> String {
    format!("random_{i:02}")
}

pub fn corpus_names() -> Vec<String> {
    NAMED.iter().map(|s| s.to_string()).chain((0..RANDOM_COUNT).map(random_name)).collect()
}

pub fn load(name: &str) -> WeakAutomaton {
    let path = corpus_dir().join(format!("{name}.aut"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_automaton(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load_process(name: &str) -> BranchingProcess {
    let path = corpus_dir().join(format!("{name}.proc"));
    parse_process(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every corpus automaton with its name.
pub fn corpus() -> Vec<(String, WeakAutomaton)> {
    corpus_names().into_iter().map(|n| {
        let a = load(&n);
        (n, a)
    }).collect()
}

pub fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    rng.next_u64() % n
}

fn formula(rng: &mut ChaCha8Rng, targets: &[String], depth: u32) -> String {
    let atom = |rng: &mut ChaCha8Rng| {
        let dir = if below(rng, 2) == 0 { "L" } else { "R" };
        format!("({dir} {})", targets[below(rng, targets.len() as u64) as usize])
    };
    if depth == 0 || below(rng, 3) == 0 {
        return atom(rng);
    }
    let l = formula(rng, targets, depth - 1);
    let r = formula(rng, targets, depth - 1);
    if below(rng, 2) == 0 {
        format!("({l} & {r})")
    } else {
        format!("({l} | {r})")
    }
}

/// Source text of a random weak automaton with at most three states.
pub fn random_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = 1 + below(&mut rng, 3) as usize;
    let letters = 1 + below(&mut rng, 3) as usize;
    let names: Vec<String> = (0..states).map(|i| format!("q{i}")).collect();
    let alphabet: Vec<String> = (0..letters).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let priority: Vec<u64> = (0..states).map(|_| below(&mut rng, 4)).collect();
    let mut text = format!(
        "# random weak automaton, seed {seed}\nalphabet: {}\nstates: {}\ninitial: {}\npriority:",
        alphabet.join(" "),
        names.join(" "),
        names[below(&mut rng, states as u64) as usize]
    );
    for (q, p) in names.iter().zip(&priority) {
        text += &format!(" {q} {p}");
    }
    text.push('\n');
    for q in 0..states {
        let targets: Vec<String> = (0..states).filter(|&t| priority[t] <= priority[q]).map(|t| names[t].clone()).collect();
        for a in &alphabet {
            text += &format!("delta: {} {a} = {}\n", names[q], formula(&mut rng, &targets, 2));
        }
    }
    text
}

/// A distribution over subsets of `width` states from positive weights.
pub fn weighted(width: usize, weights: &[u32]) -> Vec<BigRational> {
    let k = 1usize << width;
    let w: Vec<u32> = (0..k).map(|p| weights.get(p).copied().unwrap_or(0)).collect();
    let total: u64 = w.iter().map(|&x| x as u64).sum();
    if total == 0 {
        let mut v = vec![r(0, 1); k];
        v[k - 1] = r(1, 1);
        return v;
    }
    w.iter().map(|&x| BigRational::new(BigInt::from(x), BigInt::from(total))).collect()
}

/// Moves part of the mass of each `P` to a superset of `P`; the result
/// dominates `alpha` by construction.
pub fn push_up(alpha: &[BigRational], moves: &[(u8, u8)]) -> Vec<BigRational> {
    let k = alpha.len();
    let mut out = alpha.to_vec();
    for p in 0..k {
        let (target, fraction) = moves.get(p).copied().unwrap_or((0, 0));
        let q = (p | target as usize) & (k - 1);
        let moved = &alpha[p] * r((fraction % 5) as i64, 4);
        out[p] -= &moved;
        out[q] += moved;
    }
    out
}
