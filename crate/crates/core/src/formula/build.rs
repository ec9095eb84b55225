use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Block, Formula, FormulaError, Quantifier, RealFormula, Rel, Term};
use crate::automaton::{BranchingProcess, SubsetMask, WeakAutomaton};
use crate::distribution::{Scalar, StateSetDistribution};
use crate::engine::{plan_stages, PipelineResult};

/// Default cap on the atom estimate.
pub const DEFAULT_MAX_ATOMS: u64 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsiOptions {
    pub max_atoms: u64,
}

impl Default for PsiOptions {
    fn default() -> Self {
        PsiOptions { max_atoms: DEFAULT_MAX_ATOMS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareRel {
    Lt,
    Eq,
    Gt,
}

/// Variables of one (possibly letter-indexed) distribution: `vars[l][k]`.
#[derive(Debug, Clone)]
struct Family {
    vars: Vec<Vec<String>>,
}

impl Family {
    fn new(prefix: &str, n: Option<u32>, blocks: Option<usize>, k: usize) -> Family {
        let stem = match n {
            Some(n) => format!("{prefix}_{n}"),
            None => prefix.to_string(),
        };
        let vars = match blocks {
            None => vec![(0..k).map(|p| format!("{stem}_{p}")).collect()],
            Some(b) => (0..b).map(|l| (0..k).map(|p| format!("{stem}_{l}_{p}")).collect()).collect(),
        };
        Family { vars }
    }

    fn var(&self, l: usize, p: usize) -> Term {
        Term::Var(self.vars[l][p].clone())
    }

    fn all(&self) -> impl Iterator<Item = &String> {
        self.vars.iter().flatten()
    }
}

fn sum(terms: Vec<Term>) -> Term {
    match terms.len() {
        0 => Term::int(0),
        1 => terms.into_iter().next().unwrap(),
        _ => Term::Add(terms),
    }
}

fn and(mut parts: Vec<Formula>) -> Formula {
    match parts.len() {
        0 => Formula::True,
        1 => parts.pop().unwrap(),
        _ => Formula::And(parts),
    }
}

fn eq(l: Term, r: Term) -> Formula {
    Formula::cmp(Rel::Eq, l, r)
}

fn dist(f: &Family) -> Formula {
    let k = f.vars[0].len();
    let mut parts = Vec::new();
    for l in 0..f.vars.len() {
        parts.push(eq(sum((0..k).map(|p| f.var(l, p)).collect()), Term::int(1)));
        for p in 0..k {
            parts.push(Formula::cmp(Rel::Le, Term::int(0), f.var(l, p)));
            parts.push(Formula::cmp(Rel::Le, f.var(l, p), Term::int(1)));
        }
    }
    and(parts)
}

fn upward(f: &Family) -> Formula {
    let k = f.vars[0].len();
    let mut parts = Vec::new();
    for l in 0..f.vars.len() {
        for p in 0..k {
            parts.push(Formula::Or(vec![eq(f.var(l, p), Term::int(0)), eq(f.var(l, p), Term::int(1))]));
        }
        for p in 0..k {
            for q in 0..k {
                if p != q && SubsetMask(p as u64).is_subset_of(SubsetMask(q as u64)) {
                    parts.push(Formula::implies(eq(f.var(l, p), Term::int(1)), eq(f.var(l, q), Term::int(1))));
                }
            }
        }
    }
    and(parts)
}

fn minor(a: &Family, b: &Family, i: &Family) -> Formula {
    let k = a.vars[0].len();
    let side = |f: &Family, l: usize| sum((0..k).map(|p| Term::Mul(vec![f.var(l, p), i.var(l, p)])).collect());
    and((0..a.vars.len()).map(|l| Formula::cmp(Rel::Le, side(a, l), side(b, l))).collect())
}

/// `β = 𝓕(β)` or `β = 𝓕_𝒫(β)`, one equation per block and subset.
fn fixpoint(aut: &WeakAutomaton, process: Option<&BranchingProcess>, f: &Family) -> Formula {
    let k = aut.num_subsets();
    let letters = aut.num_letters();
    // products[a][P] = the pairs (P_L, P_R) with Δ(P_L, a, P_R) = P
    let mut products = vec![vec![Vec::new(); k]; letters];
    for (a, row) in products.iter_mut().enumerate() {
        for left in 0..k {
            for right in 0..k {
                let p = aut.delta(SubsetMask(left as u64), a, SubsetMask(right as u64)).index();
                row[p].push((left, right));
            }
        }
    }
    let pairs = |a: usize, p: usize, lb: usize, rb: usize| -> Vec<Term> {
        products[a][p].iter().map(|&(l, r)| Term::Mul(vec![f.var(lb, l), f.var(rb, r)])).collect()
    };
    let mut parts = Vec::new();
    match process {
        None => {
            let scale = Term::Const(BigRational::new(BigInt::one(), BigInt::from(letters)));
            for p in 0..k {
                let inner = sum((0..letters).flat_map(|a| pairs(a, p, 0, 0)).collect());
                parts.push(eq(f.var(0, p), Term::Mul(vec![scale.clone(), inner])));
            }
        }
        Some(process) => {
            for a in 0..letters {
                for p in 0..k {
                    let mut rhs = Vec::new();
                    for (code, tau) in process.branch_row(a).iter().enumerate() {
                        if tau.is_zero() {
                            continue;
                        }
                        let (al, ar) = (code / letters, code % letters);
                        let inner = sum(pairs(a, p, al, ar));
                        rhs.push(if tau.is_one() { inner } else { Term::Mul(vec![Term::Const(tau.clone()), inner]) });
                    }
                    parts.push(eq(f.var(a, p), sum(rhs)));
                }
            }
        }
    }
    and(parts)
}

/// `α = 𝒬_{<n}(β)` for odd `n`, `α = 𝒬_{≥n}(β)` for even `n`.
fn enter(aut: &WeakAutomaton, n: u32, alpha: &Family, beta: &Family) -> Formula {
    let k = aut.num_subsets();
    let image = |p: usize| -> usize {
        if n % 2 == 1 {
            p & aut.states_below(n).0 as usize
        } else {
            p | aut.states_at_least(n).0 as usize
        }
    };
    let mut parts = Vec::new();
    for l in 0..alpha.vars.len() {
        for p in 0..k {
            let pre = (0..k).filter(|&q| image(q) == p).map(|q| beta.var(l, q)).collect();
            parts.push(eq(alpha.var(l, p), sum(pre)));
        }
    }
    and(parts)
}

/// Atom estimate for ψ: `𝓕` constraints dominate with `N + 2` copies.
pub fn estimate_atoms(aut: &WeakAutomaton, process: Option<&BranchingProcess>) -> u64 {
    let n = plan_stages(aut).top as u64 + 1;
    let k = aut.num_subsets() as u64;
    let letters = aut.num_letters() as u64;
    let (blocks, products) = match process {
        None => (1, letters * k * k),
        Some(p) => (letters, p.nonzero_branches() as u64 * k * k),
    };
    let inclusions = 3u64.saturating_pow(aut.num_states() as u32);
    let fix = (n + 1).saturating_mul(products.saturating_mul(2).saturating_add(blocks * k * 2));
    let gadgets = n.saturating_mul(blocks).saturating_mul(inclusions.saturating_mul(8).saturating_add(k * 30));
    fix.saturating_add(gadgets)
}

/// The dist, upward and minor templates over `a_k`, `b_k`, `i_k`.
#[derive(Debug, Clone)]
pub struct Gadgets {
    pub k: usize,
    pub dist: Formula,
    pub upward: Formula,
    pub minor: Formula,
}

pub fn build_gadgets(aut: &WeakAutomaton) -> Gadgets {
    let k = aut.num_subsets();
    let (a, b, i) = (Family::new("a", None, None, k), Family::new("b", None, None, k), Family::new("i", None, None, k));
    Gadgets { k, dist: dist(&a), upward: upward(&i), minor: minor(&a, &b, &i) }
}

pub fn build_psi(aut: &WeakAutomaton, options: &PsiOptions) -> Result<RealFormula, FormulaError> {
    build(aut, None, options)
}

pub fn build_psi_branching(
    aut: &WeakAutomaton,
    process: &BranchingProcess,
    options: &PsiOptions,
) -> Result<RealFormula, FormulaError> {
    if aut.alphabet() != process.alphabet() {
        return Err(FormulaError::AlphabetMismatch);
    }
    build(aut, Some(process), options)
}

fn build(aut: &WeakAutomaton, process: Option<&BranchingProcess>, options: &PsiOptions) -> Result<RealFormula, FormulaError> {
    let estimate = estimate_atoms(aut, process);
    if estimate > options.max_atoms {
        return Err(FormulaError::TooLarge { estimate, cap: options.max_atoms });
    }
    let top = plan_stages(aut).top;
    let k = aut.num_subsets();
    let blocks = process.map(|_| aut.num_letters());
    let fam = |prefix: &str, n: Option<u32>| Family::new(prefix, n, blocks, k);
    let alpha: Vec<Family> = (0..=top).map(|n| fam("a", Some(n))).collect();
    let beta: Vec<Family> = (0..=top).map(|n| fam("b", Some(n))).collect();
    let theta = fam("th", None);
    let iota: Vec<Family> = (0..=top).map(|n| fam("i", Some(n))).collect();
    let gamma: Vec<Family> = (0..=top).map(|n| fam("g", Some(n))).collect();

    let mut r1 = Vec::new();
    for n in 0..=top {
        r1.push(Formula::named(format!("dist_a_{n}"), dist(&alpha[n as usize])));
        r1.push(Formula::named(format!("dist_b_{n}"), dist(&beta[n as usize])));
        r1.push(Formula::named(format!("fix_b_{n}"), fixpoint(aut, process, &beta[n as usize])));
    }
    let r2 = vec![Formula::named("dist_th", dist(&theta)), Formula::named("fix_th", fixpoint(aut, process, &theta))];
    let r3 = (0..=top).map(|n| Formula::named(format!("upward_i_{n}"), upward(&iota[n as usize]))).collect();
    let r4 = (0..=top).map(|n| Formula::named(format!("upward_g_{n}"), upward(&gamma[n as usize]))).collect();

    let mut body = Vec::new();
    let full = aut.all_states().index();
    let alpha0 = &alpha[0];
    let mut start = Vec::new();
    for l in 0..alpha0.vars.len() {
        for p in 0..k {
            start.push(eq(alpha0.var(l, p), Term::int(if p == full { 1 } else { 0 })));
        }
    }
    body.push(Formula::named("alpha0", and(start)));
    for n in 1..=top {
        let (a, b) = (&alpha[n as usize], &beta[n as usize - 1]);
        body.push(Formula::named(format!("enter_{n}"), enter(aut, n, a, b)));
    }
    for n in 0..=top {
        let (a, b, g) = (&alpha[n as usize], &beta[n as usize], &gamma[n as usize]);
        let f = if n % 2 == 1 { minor(a, b, g) } else { minor(b, a, g) };
        body.push(Formula::named(format!("order_ab_{n}"), f));
    }
    for n in 0..=top {
        let (a, b, i, g) = (&alpha[n as usize], &beta[n as usize], &iota[n as usize], &gamma[n as usize]);
        let f = if n % 2 == 1 {
            Formula::Or(vec![Formula::not(minor(a, &theta, i)), minor(b, &theta, g)])
        } else {
            Formula::Or(vec![Formula::not(minor(&theta, a, i)), minor(&theta, b, g)])
        };
        body.push(Formula::named(format!("order_bt_{n}"), f));
    }
    let last = &alpha[top as usize];
    let qi = aut.initial();
    let containing: Vec<usize> = (0..k).filter(|&p| SubsetMask(p as u64).contains(qi)).collect();
    let measure = match process {
        None => sum(containing.iter().map(|&p| last.var(0, p)).collect()),
        Some(process) => sum(
            (0..aut.num_letters())
                .filter(|&a| !process.init(a).is_zero())
                .map(|a| {
                    let inner = sum(containing.iter().map(|&p| last.var(a, p)).collect());
                    let w = process.init(a);
                    if w.is_one() {
                        inner
                    } else {
                        Term::Mul(vec![Term::Const(w.clone()), inner])
                    }
                })
                .collect(),
        ),
    };
    body.push(Formula::named("x", eq(measure, Term::var("x"))));

    let matrix = Formula::And(vec![
        Formula::And(r1),
        Formula::implies(
            Formula::And(r2),
            Formula::And(vec![Formula::And(r3), Formula::implies(Formula::And(r4), Formula::And(body))]),
        ),
    ]);
    let collect = |fams: Vec<&Family>| fams.into_iter().flat_map(|f| f.all().cloned()).collect::<Vec<_>>();
    let ab: Vec<&Family> = (0..=top as usize).flat_map(|n| [&alpha[n], &beta[n]]).collect();
    Ok(RealFormula {
        blocks: vec![
            Block { quantifier: Quantifier::Exists, vars: collect(ab) },
            Block { quantifier: Quantifier::Forall, vars: collect(vec![&theta]) },
            Block { quantifier: Quantifier::Exists, vars: collect(iota.iter().collect()) },
            Block { quantifier: Quantifier::Forall, vars: collect(gamma.iter().collect()) },
        ],
        matrix,
        free: vec!["x".to_string()],
    })
}

/// A non-negative integer over `0`, `1`, `+`, `·` by binary doubling:
/// `2m ↦ (1+1)·m`, `2m+1 ↦ (1+1)·m + 1`.
pub fn render_integer(n: &BigInt) -> Term {
    assert!(!n.is_negative());
    if n.is_zero() {
        return Term::int(0);
    }
    let bits = n.bits();
    let mut term = Term::int(1);
    for i in (0..bits - 1).rev() {
        term = Term::Mul(vec![Term::Add(vec![Term::int(1), Term::int(1)]), term]);
        if n.bit(i) {
            term = Term::Add(vec![term, Term::int(1)]);
        }
    }
    term
}

/// `∃x. ψ(x) ∧ q ⋈ x`, with `q ⋈ x` written as `num ⋈ den·x`. `Gt` asks
/// whether the measure exceeds `q`.
pub fn build_compare(psi: &RealFormula, q: &BigRational, rel: CompareRel) -> Result<RealFormula, FormulaError> {
    if psi.free.len() != 1 {
        return Err(FormulaError::FreeVariables(psi.free.len()));
    }
    if q.is_negative() || q > &BigRational::one() {
        return Err(FormulaError::ThresholdOutOfRange(q.to_string()));
    }
    let x = psi.free[0].clone();
    let num = render_integer(q.numer());
    let scaled = Term::Mul(vec![render_integer(q.denom()), Term::Var(x.clone())]);
    let cmp = Formula::cmp(
        match rel {
            CompareRel::Lt => Rel::Gt,
            CompareRel::Eq => Rel::Eq,
            CompareRel::Gt => Rel::Lt,
        },
        num,
        scaled,
    );
    let mut blocks = psi.blocks.clone();
    match blocks.first_mut() {
        Some(b) if b.quantifier == Quantifier::Exists => b.vars.insert(0, x),
        _ => blocks.insert(0, Block { quantifier: Quantifier::Exists, vars: vec![x] }),
    }
    Ok(RealFormula {
        blocks,
        matrix: Formula::And(vec![psi.matrix.clone(), Formula::named("compare", cmp)]),
        free: Vec::new(),
    })
}

fn stage_values<T>(
    result: &PipelineResult,
    read: impl Fn(&StateSetDistribution) -> Option<Vec<T>>,
    estimate: impl Fn(&Scalar) -> Option<T>,
) -> Option<HashMap<String, T>> {
    let mut out = HashMap::new();
    for record in &result.stages {
        let chain = record.chains.first()?;
        let n = record.stage.n;
        let mut put = |prefix: &str, d: &StateSetDistribution| -> Option<()> {
            let k = d.k();
            for (i, v) in read(d)?.into_iter().enumerate() {
                let name = if result.branching {
                    format!("{prefix}_{n}_{}_{}", i / k, i % k)
                } else {
                    format!("{prefix}_{n}_{i}")
                };
                out.insert(name, v);
            }
            Some(())
        };
        put("a", &chain.alpha)?;
        if let Some(beta) = &chain.beta {
            put("b", &beta.value)?;
        }
    }
    out.insert("x".to_string(), estimate(result.estimate.as_ref()?)?);
    Some(out)
}

/// Stage values of a point-mode run as an assignment to `a_n_*`, `b_n_*`
/// and `x`. `b_N` is left unassigned since the last stage is not iterated.
/// Returns `None` unless every value is exact.
pub fn witness_assignment(result: &PipelineResult) -> Option<HashMap<String, BigRational>> {
    stage_values(result, StateSetDistribution::to_rationals, |s| s.as_exact().cloned())
}

/// As [`witness_assignment`], in floating point.
pub fn witness_assignment_f64(result: &PipelineResult) -> Option<HashMap<String, f64>> {
    stage_values(result, |d| Some(d.to_f64_vec()), |s| Some(s.to_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::parse_automaton;
    use crate::engine::{run_pipeline, PipelineOptions};
    use crate::formula::difference;

    const REACH: &str = "alphabet: a b\nstates: q_r q_acc\ninitial: q_r\npriority: q_r 1 q_acc 0\n\
        delta: q_r a = (L q_acc)\ndelta: q_r b = (L q_r) | (R q_r)\n\
        delta: q_acc a = (L q_acc) & (R q_acc)\ndelta: q_acc b = (L q_acc) & (R q_acc)\n";
    const REJECT: &str = "alphabet: a\nstates: q\ninitial: q\npriority: q 1\ndelta: q a = (L q) & (R q)\n";

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn gadgets_one_state() {
        let g = build_gadgets(&parse_automaton(REJECT).unwrap());
        assert_eq!(g.k, 2);
        let expected_dist = Formula::And(vec![
            eq(Term::Add(vec![v("a_0"), v("a_1")]), Term::int(1)),
            Formula::cmp(Rel::Le, Term::int(0), v("a_0")),
            Formula::cmp(Rel::Le, v("a_0"), Term::int(1)),
            Formula::cmp(Rel::Le, Term::int(0), v("a_1")),
            Formula::cmp(Rel::Le, v("a_1"), Term::int(1)),
        ]);
        assert_eq!(g.dist, expected_dist);
        let Formula::And(parts) = &g.upward else { panic!() };
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[2], Formula::implies(eq(v("i_0"), Term::int(1)), eq(v("i_1"), Term::int(1))));
        let side = |f: &str| Term::Add(vec![Term::Mul(vec![v(&format!("{f}_0")), v("i_0")]), Term::Mul(vec![v(&format!("{f}_1")), v("i_1")])]);
        assert_eq!(g.minor, Formula::cmp(Rel::Le, side("a"), side("b")));
    }

    #[test]
    fn psi_shape() {
        let aut = parse_automaton(REACH).unwrap();
        let psi = build_psi(&aut, &PsiOptions::default()).unwrap();
        let top = plan_stages(&aut).top as u64;
        assert_eq!(psi.prefix_pattern(), "∃∀∃∀");
        assert_eq!(psi.free, vec!["x".to_string()]);
        assert_eq!(psi.variable_count(), (2 * (top + 1) + 1 + 2 * (top + 1)) * 4 + 1);
        assert_eq!(psi.matrix.find("x").len(), 1);
        assert_eq!(psi.matrix.find(&format!("enter_{top}")).len(), 1);
        let mut names: Vec<&str> = psi.matrix.variables();
        names.sort();
        names.dedup();
        assert_eq!(names.len() as u64, psi.variable_count());
    }

    #[test]
    fn size_guard() {
        let aut = parse_automaton(REACH).unwrap();
        let err = build_psi(&aut, &PsiOptions { max_atoms: 10 }).unwrap_err();
        assert!(matches!(err, FormulaError::TooLarge { cap: 10, .. }));
        let psi = build_psi(&aut, &PsiOptions::default()).unwrap();
        let est = estimate_atoms(&aut, None);
        assert!(est >= psi.atoms() && est <= 4 * psi.atoms(), "{est} vs {}", psi.atoms());
    }

    #[test]
    fn integers_by_doubling() {
        for n in 0..300u32 {
            let t = render_integer(&BigInt::from(n));
            let p = t.expand();
            let value = p.get(&Vec::new()).cloned().unwrap_or_default();
            assert_eq!(value, BigRational::from_integer(n.into()));
        }
        fn muls(t: &Term) -> usize {
            match t {
                Term::Mul(ts) => 1 + ts.iter().map(muls).sum::<usize>(),
                Term::Add(ts) => ts.iter().map(muls).sum(),
                _ => 0,
            }
        }
        assert_eq!(muls(&render_integer(&BigInt::from(128))), 7);
        assert_eq!(render_integer(&BigInt::from(2)), Term::Mul(vec![Term::Add(vec![Term::int(1), Term::int(1)]), Term::int(1)]));
    }

    #[test]
    fn compare_sentences() {
        let aut = parse_automaton(REJECT).unwrap();
        let psi = build_psi(&aut, &PsiOptions::default()).unwrap();
        let s = build_compare(&psi, &BigRational::new(1.into(), 2.into()), CompareRel::Eq).unwrap();
        assert!(s.is_sentence());
        assert_eq!(s.blocks.len(), 4);
        assert_eq!(s.blocks[0].vars[0], "x");
        let cmp = s.matrix.find("compare")[0].clone();
        assert_eq!(cmp, eq(Term::int(1), Term::Mul(vec![render_integer(&BigInt::from(2)), v("x")])));
        let s = build_compare(&psi, &BigRational::zero(), CompareRel::Gt).unwrap();
        assert_eq!(s.matrix.find("compare")[0], &Formula::cmp(Rel::Lt, Term::int(0), Term::Mul(vec![Term::int(1), v("x")])));
        assert!(build_compare(&psi, &BigRational::from_integer(2.into()), CompareRel::Eq).is_err());
        assert!(matches!(build_compare(&s, &BigRational::zero(), CompareRel::Eq), Err(FormulaError::FreeVariables(0))));
    }

    #[test]
    fn witness_for_rejecting_automaton() {
        let aut = parse_automaton(REJECT).unwrap();
        let psi = build_psi(&aut, &PsiOptions::default()).unwrap();
        let result = run_pipeline(&aut, &PipelineOptions::new(5)).unwrap();
        let w = witness_assignment(&result).unwrap();
        assert_eq!(w["x"], BigRational::zero());
        for label in ["alpha0", "enter_1", "enter_2", "x"] {
            for f in psi.matrix.find(label) {
                assert_eq!(f.eval_exact(&w), Ok(true), "{label}");
            }
        }
    }

    #[test]
    fn uniform_process_matches() {
        let aut = parse_automaton(REACH).unwrap();
        let psi = build_psi(&aut, &PsiOptions::default()).unwrap();
        let p = BranchingProcess::uniform(aut.alphabet());
        let psi_p = build_psi_branching(&aut, &p, &PsiOptions::default()).unwrap();
        assert_eq!(psi_p.prefix_pattern(), "∃∀∃∀");
        let Formula::And(plain) = psi.matrix.find("fix_th")[0] else { panic!() };
        let Formula::And(lifted) = psi_p.matrix.find("fix_th")[0] else { panic!() };
        let k = aut.num_subsets();
        let letters = aut.num_letters();
        let rename = |name: &str| -> String {
            let parts: Vec<&str> = name.split('_').collect();
            format!("{}_{}", parts[0], parts[2])
        };
        for p in 0..k {
            let Formula::Cmp(_, l, r) = &plain[p] else { panic!() };
            let expected = difference(l, r);
            let mut summed = crate::formula::Polynomial::new();
            for a in 0..letters {
                let Formula::Cmp(_, l, r) = &lifted[a * k + p] else { panic!() };
                for (m, c) in difference(l, r) {
                    let m: Vec<String> = {
                        let mut m: Vec<String> = m.iter().map(|s| rename(s)).collect();
                        m.sort();
                        m
                    };
                    *summed.entry(m).or_insert_with(BigRational::zero) += c;
                }
            }
            summed.retain(|_, c| !c.is_zero());
            let scale = BigRational::from_integer(BigInt::from(letters));
            let rescaled: crate::formula::Polynomial = summed.into_iter().map(|(m, c)| (m, c / &scale)).collect();
            assert_eq!(rescaled, expected, "subset {p}");
        }
    }

    #[test]
    fn dirac_process_uses_one_letter() {
        let aut = parse_automaton(REACH).unwrap();
        let p = BranchingProcess::dirac(aut.alphabet(), 0);
        let psi = build_psi_branching(&aut, &p, &PsiOptions::default()).unwrap();
        let Formula::And(eqs) = psi.matrix.find("fix_b_0")[0] else { panic!() };
        let k = aut.num_subsets();
        for f in &eqs[..k] {
            let Formula::Cmp(_, _, r) = f else { panic!() };
            for m in r.expand().keys() {
                assert!(m.iter().all(|v| v.starts_with("b_0_0_")), "{m:?}");
            }
        }
        let other = BranchingProcess::uniform(&["z".to_string(), "b".to_string()]);
        assert_eq!(build_psi_branching(&aut, &other, &PsiOptions::default()).unwrap_err(), FormulaError::AlphabetMismatch);
    }
}
