//! First-order formulas over the reals describing the measure: AST, the
//! ψ construction, comparison sentences, and SMT-LIB output and input.

mod build;
mod smt;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

pub use build::{
    build_compare, build_gadgets, build_psi, build_psi_branching, estimate_atoms, render_integer, witness_assignment,
    witness_assignment_f64,
    CompareRel, Gadgets, PsiOptions, DEFAULT_MAX_ATOMS,
};
pub use smt::{emit_smt2, read_smt2, SmtScript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("formula would have about {estimate} atoms, above the cap {cap}")]
    TooLarge { estimate: u64, cap: u64 },
    #[error("process alphabet differs from automaton alphabet")]
    AlphabetMismatch,
    #[error("threshold {0} is outside [0,1]")]
    ThresholdOutOfRange(String),
    #[error("expected exactly one free variable, found {0}")]
    FreeVariables(usize),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("SMT-LIB input, offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// Polynomial expression tree with exact rational constants.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(BigRational),
    Add(Vec<Term>),
    Mul(Vec<Term>),
}

/// A polynomial as a map from sorted monomials to coefficients.
pub type Polynomial = BTreeMap<Vec<String>, BigRational>;

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn int(n: i64) -> Term {
        Term::Const(BigRational::from_integer(n.into()))
    }

    /// Leaf occurrences (variables and constants).
    pub fn leaves(&self) -> u64 {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::Add(ts) | Term::Mul(ts) => ts.iter().map(Term::leaves).sum(),
        }
    }

    pub fn expand(&self) -> Polynomial {
        match self {
            Term::Var(v) => Polynomial::from([(vec![v.clone()], BigRational::one())]),
            Term::Const(c) if c.is_zero() => Polynomial::new(),
            Term::Const(c) => Polynomial::from([(Vec::new(), c.clone())]),
            Term::Add(ts) => {
                let mut out = Polynomial::new();
                for t in ts {
                    add_into(&mut out, t.expand(), &BigRational::one());
                }
                out
            }
            Term::Mul(ts) => {
                let mut out = Polynomial::from([(Vec::new(), BigRational::one())]);
                for t in ts {
                    let factor = t.expand();
                    let mut next = Polynomial::new();
                    for (m1, c1) in &out {
                        for (m2, c2) in &factor {
                            let mut m: Vec<String> = m1.iter().chain(m2).cloned().collect();
                            m.sort();
                            let entry = next.entry(m).or_insert_with(BigRational::zero);
                            *entry += c1 * c2;
                        }
                    }
                    next.retain(|_, c| !c.is_zero());
                    out = next;
                }
                out
            }
        }
    }

    fn eval<V: Value>(&self, env: &dyn Fn(&str) -> Option<V>) -> Result<V, FormulaError> {
        match self {
            Term::Var(v) => env(v).ok_or_else(|| FormulaError::Unbound(v.clone())),
            Term::Const(c) => Ok(V::from_rational(c)),
            Term::Add(ts) => ts.iter().try_fold(V::from_rational(&BigRational::zero()), |acc, t| Ok(acc.add(&t.eval(env)?))),
            Term::Mul(ts) => ts.iter().try_fold(V::from_rational(&BigRational::one()), |acc, t| Ok(acc.mul(&t.eval(env)?))),
        }
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => out.push(v),
            Term::Const(_) => {}
            Term::Add(ts) | Term::Mul(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
        }
    }
}

fn add_into(out: &mut Polynomial, p: Polynomial, scale: &BigRational) {
    for (m, c) in p {
        let entry = out.entry(m).or_insert_with(BigRational::zero);
        *entry += c * scale;
    }
    out.retain(|_, c| !c.is_zero());
}

/// `l − r` as a polynomial.
pub fn difference(l: &Term, r: &Term) -> Polynomial {
    let mut out = l.expand();
    add_into(&mut out, r.expand(), &-BigRational::one());
    out
}

/// Quantifier-free formula; `Named` marks a labelled condition and is
/// transparent for meaning and output.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(Rel, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Named(String, Box<Formula>),
}

impl Formula {
    pub fn cmp(rel: Rel, l: Term, r: Term) -> Formula {
        Formula::Cmp(rel, l, r)
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn named(label: impl Into<String>, f: Formula) -> Formula {
        Formula::Named(label.into(), Box::new(f))
    }

    /// Number of comparisons.
    pub fn comparisons(&self) -> u64 {
        match self {
            Formula::True | Formula::False => 0,
            Formula::Cmp(..) => 1,
            Formula::Not(f) | Formula::Named(_, f) => f.comparisons(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::comparisons).sum(),
            Formula::Implies(a, b) => a.comparisons() + b.comparisons(),
        }
    }

    /// Leaf occurrences inside all comparisons.
    pub fn atoms(&self) -> u64 {
        match self {
            Formula::True | Formula::False => 0,
            Formula::Cmp(_, l, r) => l.leaves() + r.leaves(),
            Formula::Not(f) | Formula::Named(_, f) => f.atoms(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::atoms).sum(),
            Formula::Implies(a, b) => a.atoms() + b.atoms(),
        }
    }

    /// Every subformula labelled `label`, in order.
    pub fn find(&self, label: &str) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.visit_named(&mut |l, f| {
            if l == label {
                out.push(f);
            }
        });
        out
    }

    /// All labels in order of appearance.
    pub fn labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_named(&mut |l, _| out.push(l));
        out
    }

    fn visit_named<'a>(&'a self, visit: &mut dyn FnMut(&'a str, &'a Formula)) {
        match self {
            Formula::Named(l, f) => {
                visit(l, f);
                f.visit_named(visit);
            }
            Formula::Not(f) => f.visit_named(visit),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit_named(visit)),
            Formula::Implies(a, b) => {
                a.visit_named(visit);
                b.visit_named(visit);
            }
            _ => {}
        }
    }

    /// The same formula without labels.
    pub fn strip_names(&self) -> Formula {
        match self {
            Formula::Named(_, f) => f.strip_names(),
            Formula::Not(f) => Formula::not(f.strip_names()),
            Formula::And(fs) => Formula::And(fs.iter().map(Formula::strip_names).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(Formula::strip_names).collect()),
            Formula::Implies(a, b) => Formula::implies(a.strip_names(), b.strip_names()),
            f => f.clone(),
        }
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Formula::Not(f) | Formula::Named(_, f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
            Formula::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn eval<V: Value>(&self, env: &dyn Fn(&str) -> Option<V>) -> Result<bool, FormulaError> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(rel, l, r) => V::compare(*rel, &l.eval(env)?, &r.eval(env)?),
            Formula::Not(f) => !f.eval(env)?,
            Formula::Named(_, f) => f.eval(env)?,
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(env)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => !a.eval(env)? || b.eval(env)?,
        })
    }

    /// Exact truth value under `assignment`.
    pub fn eval_exact(&self, assignment: &HashMap<String, BigRational>) -> Result<bool, FormulaError> {
        self.eval::<BigRational>(&|v| assignment.get(v).cloned())
    }

    /// Truth value in floating point, comparisons relaxed by `tolerance`.
    pub fn eval_float(&self, assignment: &HashMap<String, f64>, tolerance: f64) -> Result<bool, FormulaError> {
        self.eval::<Approx>(&|v| assignment.get(v).map(|&x| Approx { value: x, tolerance }))
    }
}

trait Value: Sized {
    fn from_rational(r: &BigRational) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn compare(rel: Rel, l: &Self, r: &Self) -> bool;
}

impl Value for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn compare(rel: Rel, l: &Self, r: &Self) -> bool {
        match rel {
            Rel::Eq => l == r,
            Rel::Le => l <= r,
            Rel::Lt => l < r,
            Rel::Ge => l >= r,
            Rel::Gt => l > r,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Approx {
    value: f64,
    tolerance: f64,
}

impl Value for Approx {
    fn from_rational(r: &BigRational) -> Self {
        Approx { value: crate::distribution::rational_to_f64(r), tolerance: f64::NAN }
    }
    fn add(&self, other: &Self) -> Self {
        Approx { value: self.value + other.value, tolerance: self.tolerance.min(other.tolerance) }
    }
    fn mul(&self, other: &Self) -> Self {
        Approx { value: self.value * other.value, tolerance: self.tolerance.min(other.tolerance) }
    }
    fn compare(rel: Rel, l: &Self, r: &Self) -> bool {
        let tol = if l.tolerance.is_nan() { r.tolerance } else { l.tolerance.min(r.tolerance) };
        let tol = if tol.is_nan() { 0.0 } else { tol };
        let d = l.value - r.value;
        match rel {
            Rel::Eq => d.abs() <= tol,
            Rel::Le => d <= tol,
            Rel::Lt => d < tol,
            Rel::Ge => d >= -tol,
            Rel::Gt => d > -tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    pub quantifier: Quantifier,
    pub vars: Vec<String>,
}

/// A prenex formula: quantifier blocks followed by a quantifier-free matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealFormula {
    pub blocks: Vec<Block>,
    pub matrix: Formula,
    pub free: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FormulaStats {
    pub atoms: u64,
    pub variables: u64,
    pub blocks: u64,
    pub bytes: u64,
}

impl RealFormula {
    pub fn is_sentence(&self) -> bool {
        self.free.is_empty()
    }

    /// Bound plus free variables.
    pub fn variable_count(&self) -> u64 {
        (self.blocks.iter().map(|b| b.vars.len()).sum::<usize>() + self.free.len()) as u64
    }

    pub fn atoms(&self) -> u64 {
        self.matrix.atoms()
    }

    pub fn stats(&self) -> FormulaStats {
        FormulaStats {
            atoms: self.atoms(),
            variables: self.variable_count(),
            blocks: self.blocks.len() as u64,
            bytes: emit_smt2(self).len() as u64,
        }
    }

    /// Quantifier pattern, e.g. `∃∀∃∀`.
    pub fn prefix_pattern(&self) -> String {
        self.blocks
            .iter()
            .map(|b| match b.quantifier {
                Quantifier::Exists => '∃',
                Quantifier::Forall => '∀',
            })
            .collect()
    }
}

impl fmt::Display for RealFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_smt2(self))
    }
}
