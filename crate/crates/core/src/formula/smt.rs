use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{Block, Formula, FormulaError, Quantifier, RealFormula, Rel, Term};

// Nodes nested deeper than this are printed on one line.
const LAYOUT_DEPTH: usize = 4;

fn emit_const(c: &BigRational, out: &mut String) {
    let write_int = |n: &BigInt, out: &mut String| {
        if n.is_negative() {
            let _ = write!(out, "(- {})", -n);
        } else {
            let _ = write!(out, "{n}");
        }
    };
    if c.is_integer() {
        write_int(c.numer(), out);
    } else {
        out.push_str("(/ ");
        write_int(c.numer(), out);
        let _ = write!(out, " {})", c.denom());
    }
}

fn emit_term(t: &Term, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Const(c) => emit_const(c, out),
        Term::Add(ts) | Term::Mul(ts) => {
            out.push_str(if matches!(t, Term::Add(_)) { "(+" } else { "(*" });
            for t in ts {
                out.push(' ');
                emit_term(t, out);
            }
            out.push(')');
        }
    }
}

fn newline(out: &mut String, indent: usize) {
    out.push('\n');
    out.extend(std::iter::repeat_n(' ', indent));
}

fn emit_formula(f: &Formula, depth: usize, indent: usize, out: &mut String) {
    let children: Vec<&Formula> = match f {
        Formula::True => return out.push_str("true"),
        Formula::False => return out.push_str("false"),
        Formula::Named(_, g) => return emit_formula(g, depth, indent, out),
        Formula::Cmp(rel, l, r) => {
            let _ = write!(out, "({} ", rel.symbol());
            emit_term(l, out);
            out.push(' ');
            emit_term(r, out);
            return out.push(')');
        }
        Formula::Not(g) => vec![g],
        Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
        Formula::Implies(a, b) => vec![a, b],
    };
    let head = match f {
        Formula::Not(_) => "not",
        Formula::And(_) => "and",
        Formula::Or(_) => "or",
        _ => "=>",
    };
    let _ = write!(out, "({head}");
    let broken = depth < LAYOUT_DEPTH && !matches!(f, Formula::Not(_) | Formula::Or(_));
    for c in children {
        if broken {
            newline(out, indent + 1);
        } else {
            out.push(' ');
        }
        emit_formula(c, depth + 1, indent + 1, out);
    }
    out.push(')');
}

/// SMT-LIB 2.6 text: one assertion, `check-sat` for sentences.
pub fn emit_smt2(formula: &RealFormula) -> String {
    let mut out = String::new();
    let logic = if formula.blocks.is_empty() { "QF_NRA" } else { "NRA" };
    let _ = writeln!(out, "(set-logic {logic})");
    for v in &formula.free {
        let _ = writeln!(out, "(declare-const {v} Real)");
    }
    out.push_str("(assert");
    for (i, block) in formula.blocks.iter().enumerate() {
        newline(&mut out, i + 1);
        let q = match block.quantifier {
            Quantifier::Exists => "exists",
            Quantifier::Forall => "forall",
        };
        let _ = write!(out, "({q} (");
        for (j, v) in block.vars.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "({v} Real)");
        }
        out.push(')');
    }
    let indent = formula.blocks.len() + 1;
    newline(&mut out, indent);
    emit_formula(&formula.matrix, 0, indent, &mut out);
    for _ in &formula.blocks {
        out.push(')');
    }
    out.push_str(")\n");
    if formula.is_sentence() {
        out.push_str("(check-sat)\n");
    }
    out
}

/// Contents of an SMT-LIB script read back by [`read_smt2`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub logic: Option<String>,
    pub formula: RealFormula,
    pub check_sat: bool,
}

#[derive(Debug, Clone)]
enum SExpr {
    Atom(String, usize),
    List(Vec<SExpr>, usize),
}

impl SExpr {
    fn offset(&self) -> usize {
        match self {
            SExpr::Atom(_, o) | SExpr::List(_, o) => *o,
        }
    }
}

fn error<T>(offset: usize, message: impl Into<String>) -> Result<T, FormulaError> {
    Err(FormulaError::Parse { offset, message: message.into() })
}

fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, FormulaError> {
    let bytes = text.as_bytes();
    let mut stack: Vec<(Vec<SExpr>, usize)> = vec![(Vec::new(), 0)];
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                stack.push((Vec::new(), i));
                i += 1;
            }
            b')' => {
                if stack.len() == 1 {
                    return error(i, "unbalanced `)`");
                }
                let (items, start) = stack.pop().unwrap();
                stack.last_mut().unwrap().0.push(SExpr::List(items, start));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'(' | b')' | b';') {
                    i += 1;
                }
                stack.last_mut().unwrap().0.push(SExpr::Atom(text[start..i].to_string(), start));
            }
        }
    }
    if stack.len() != 1 {
        return error(stack.last().unwrap().1, "unclosed `(`");
    }
    Ok(stack.pop().unwrap().0)
}

fn numeral(s: &str) -> Option<BigRational> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    Some(BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32)))
}

fn head(items: &[SExpr]) -> Option<&str> {
    match items.first() {
        Some(SExpr::Atom(s, _)) => Some(s),
        _ => None,
    }
}

fn read_term(e: &SExpr) -> Result<Term, FormulaError> {
    match e {
        SExpr::Atom(s, o) => {
            if let Some(c) = numeral(s) {
                Ok(Term::Const(c))
            } else if s.starts_with(|c: char| c.is_ascii_digit()) {
                error(*o, format!("bad numeral `{s}`"))
            } else {
                Ok(Term::Var(s.clone()))
            }
        }
        SExpr::List(items, o) => {
            let args = &items[1.min(items.len())..];
            match head(items) {
                Some("+") | Some("*") if !args.is_empty() => {
                    let ts = args.iter().map(read_term).collect::<Result<Vec<_>, _>>()?;
                    Ok(if head(items) == Some("+") { Term::Add(ts) } else { Term::Mul(ts) })
                }
                Some("/") if args.len() == 2 => match (read_term(&args[0])?, read_term(&args[1])?) {
                    (Term::Const(n), Term::Const(d)) if !d.is_zero() => Ok(Term::Const(n / d)),
                    _ => error(*o, "`/` needs constant operands"),
                },
                Some("-") if args.len() == 1 => match read_term(&args[0])? {
                    Term::Const(c) => Ok(Term::Const(-c)),
                    _ => error(*o, "unary `-` needs a constant"),
                },
                _ => error(*o, "expected a term"),
            }
        }
    }
}

fn read_formula(e: &SExpr) -> Result<Formula, FormulaError> {
    let (items, o) = match e {
        SExpr::Atom(s, _) if s == "true" => return Ok(Formula::True),
        SExpr::Atom(s, _) if s == "false" => return Ok(Formula::False),
        SExpr::Atom(s, o) => return error(*o, format!("expected a formula, found `{s}`")),
        SExpr::List(items, o) => (items, *o),
    };
    let args = &items[1.min(items.len())..];
    let subs = || args.iter().map(read_formula).collect::<Result<Vec<_>, _>>();
    let rel = match head(items) {
        Some("=") => Some(Rel::Eq),
        Some("<=") => Some(Rel::Le),
        Some("<") => Some(Rel::Lt),
        Some(">=") => Some(Rel::Ge),
        Some(">") => Some(Rel::Gt),
        _ => None,
    };
    if let Some(rel) = rel {
        if args.len() != 2 {
            return error(o, "comparisons take two terms");
        }
        return Ok(Formula::Cmp(rel, read_term(&args[0])?, read_term(&args[1])?));
    }
    match head(items) {
        Some("not") if args.len() == 1 => Ok(Formula::not(read_formula(&args[0])?)),
        Some("and") if !args.is_empty() => Ok(Formula::And(subs()?)),
        Some("or") if !args.is_empty() => Ok(Formula::Or(subs()?)),
        Some("=>") if args.len() == 2 => Ok(Formula::implies(read_formula(&args[0])?, read_formula(&args[1])?)),
        Some("exists") | Some("forall") => error(o, "quantifier inside the matrix"),
        _ => error(o, "expected a formula"),
    }
}

fn read_binders(e: &SExpr) -> Result<Vec<String>, FormulaError> {
    let SExpr::List(items, o) = e else { return error(e.offset(), "expected a binder list") };
    if items.is_empty() {
        return error(*o, "empty binder list");
    }
    items
        .iter()
        .map(|b| match b {
            SExpr::List(pair, _) if pair.len() == 2 => match (&pair[0], &pair[1]) {
                (SExpr::Atom(v, _), SExpr::Atom(sort, _)) if sort == "Real" => Ok(v.clone()),
                _ => error(b.offset(), "expected `(name Real)`"),
            },
            _ => error(b.offset(), "expected `(name Real)`"),
        })
        .collect()
}

/// Reads scripts in the shape produced by [`emit_smt2`].
pub fn read_smt2(text: &str) -> Result<SmtScript, FormulaError> {
    let mut logic = None;
    let mut free = Vec::new();
    let mut assertion = None;
    let mut check_sat = false;
    for cmd in parse_sexprs(text)? {
        let SExpr::List(items, o) = &cmd else { return error(cmd.offset(), "expected a command") };
        match (head(items), &items[1..]) {
            (Some("set-logic"), [SExpr::Atom(l, _)]) => logic = Some(l.clone()),
            (Some("declare-const"), [SExpr::Atom(v, _), SExpr::Atom(sort, _)]) if sort == "Real" => free.push(v.clone()),
            (Some("declare-fun"), [SExpr::Atom(v, _), SExpr::List(args, _), SExpr::Atom(sort, _)])
                if args.is_empty() && sort == "Real" =>
            {
                free.push(v.clone())
            }
            (Some("assert"), [body]) if assertion.is_none() => assertion = Some(body.clone()),
            (Some("assert"), _) => return error(*o, "expected a single assertion"),
            (Some("check-sat"), []) => check_sat = true,
            _ => return error(*o, "unsupported command"),
        }
    }
    let Some(mut body) = assertion else { return error(text.len(), "no assertion") };
    let mut blocks: Vec<Block> = Vec::new();
    loop {
        let quantifier = match &body {
            SExpr::List(items, _) if items.len() == 3 => match head(items) {
                Some("exists") => Quantifier::Exists,
                Some("forall") => Quantifier::Forall,
                _ => break,
            },
            _ => break,
        };
        let SExpr::List(items, _) = body else { unreachable!() };
        let vars = read_binders(&items[1])?;
        match blocks.last_mut() {
            Some(b) if b.quantifier == quantifier => b.vars.extend(vars),
            _ => blocks.push(Block { quantifier, vars }),
        }
        body = items[2].clone();
    }
    let matrix = read_formula(&body)?;
    Ok(SmtScript { logic, formula: RealFormula { blocks, matrix, free }, check_sat })
}
