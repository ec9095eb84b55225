use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::LetterId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown letter `{letter}`")]
    UnknownLetter { line: usize, letter: String },
    #[error("line {line}: duplicate {what}")]
    Duplicate { line: usize, what: String },
    #[error("probability {value} outside [0,1]")]
    OutOfRange { value: String },
    #[error("{what} sums to {sum}")]
    NotNormalized { what: String, sum: String },
    #[error("missing branch line for letter `{0}`")]
    MissingBranch(String),
    #[error("missing `{0}` declaration")]
    MissingField(&'static str),
    #[error("invalid JSON: {0}")]
    Json(String),
}

/// A top-down generator of random labelled binary trees: the root letter is
/// drawn from `init`, and a node labelled `a` gets children `(a_L, a_R)` with
/// probability `branch(a)(a_L, a_R)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingProcess {
    alphabet: Vec<String>,
    init: Vec<BigRational>,
    // branch[a][left * |A| + right]
    branch: Vec<Vec<BigRational>>,
}

pub(crate) fn parse_rational(text: &str) -> Option<BigRational> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let valid = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !valid(num) || !valid(den) {
        return None;
    }
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num.parse().ok()?, den))
}

impl BranchingProcess {
    /// Validates and builds a process. `branch[a]` is indexed by `left * |A| + right`.
    pub fn new(
        alphabet: Vec<String>,
        init: Vec<BigRational>,
        branch: Vec<Vec<BigRational>>,
    ) -> Result<Self, ProcessError> {
        let n = alphabet.len();
        if n == 0 {
            return Err(ProcessError::MissingField("alphabet"));
        }
        assert!(init.len() == n && branch.len() == n && branch.iter().all(|b| b.len() == n * n));
        let check = |values: &[BigRational], what: String| -> Result<(), ProcessError> {
            for v in values {
                if v < &BigRational::zero() || v > &BigRational::one() {
                    return Err(ProcessError::OutOfRange { value: v.to_string() });
                }
            }
            let sum: BigRational = values.iter().sum();
            if !sum.is_one() {
                return Err(ProcessError::NotNormalized { what, sum: sum.to_string() });
            }
            Ok(())
        };
        check(&init, "initial distribution".into())?;
        for (a, row) in branch.iter().enumerate() {
            check(row, format!("branch distribution of `{}`", alphabet[a]))?;
        }
        Ok(BranchingProcess { alphabet, init, branch })
    }

    /// The process inducing the coin-flipping measure: every letter and
    /// every child pair equally likely.
    pub fn uniform(alphabet: &[String]) -> Self {
        let n = alphabet.len();
        let p = BigRational::new(BigInt::one(), BigInt::from(n));
        let pp = BigRational::new(BigInt::one(), BigInt::from(n * n));
        BranchingProcess {
            alphabet: alphabet.to_vec(),
            init: vec![p; n],
            branch: vec![vec![pp; n * n]; n],
        }
    }

    /// The process generating the single tree with every node labelled `letter`.
    pub fn dirac(alphabet: &[String], letter: LetterId) -> Self {
        let n = alphabet.len();
        let mut init = vec![BigRational::zero(); n];
        init[letter] = BigRational::one();
        let mut branch = vec![vec![BigRational::zero(); n * n]; n];
        for row in &mut branch {
            row[letter * n + letter] = BigRational::one();
        }
        BranchingProcess { alphabet: alphabet.to_vec(), init, branch }
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn num_letters(&self) -> usize {
        self.alphabet.len()
    }

    pub fn init(&self, letter: LetterId) -> &BigRational {
        &self.init[letter]
    }

    pub fn init_distribution(&self) -> &[BigRational] {
        &self.init
    }

    pub fn branch(&self, letter: LetterId, left: LetterId, right: LetterId) -> &BigRational {
        &self.branch[letter][left * self.alphabet.len() + right]
    }

    /// Row of child-pair probabilities for `letter`, indexed by `left * |A| + right`.
    pub fn branch_row(&self, letter: LetterId) -> &[BigRational] {
        &self.branch[letter]
    }

    /// Nonzero entries of all branching distributions.
    pub fn nonzero_branches(&self) -> usize {
        self.branch.iter().flatten().filter(|p| !p.is_zero()).count()
    }

    /// Least common multiple of all denominators in `init` and `branch`.
    pub fn common_denominator(&self) -> BigInt {
        use num_integer::Integer;
        self.init
            .iter()
            .chain(self.branch.iter().flatten())
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()))
    }

    /// True when this is the uniform process over its alphabet.
    pub fn is_uniform(&self) -> bool {
        *self == Self::uniform(&self.alphabet)
    }

    pub fn to_json(&self) -> String {
        let n = self.alphabet.len();
        let json = JsonProcess {
            alphabet: self.alphabet.clone(),
            init: self.alphabet.iter().cloned().zip(self.init.iter().map(|p| p.to_string())).collect(),
            branch: (0..n)
                .map(|a| {
                    let entries = (0..n * n)
                        .filter(|&k| !self.branch[a][k].is_zero())
                        .map(|k| JsonBranch {
                            left: self.alphabet[k / n].clone(),
                            right: self.alphabet[k % n].clone(),
                            prob: self.branch[a][k].to_string(),
                        })
                        .collect();
                    (self.alphabet[a].clone(), entries)
                })
                .collect(),
        };
        serde_json::to_string_pretty(&json).expect("plain data serializes")
    }
}

impl fmt::Display for BranchingProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.alphabet.len();
        writeln!(f, "alphabet: {}", self.alphabet.join(" "))?;
        let init: Vec<String> = (0..n)
            .filter(|&a| !self.init[a].is_zero())
            .map(|a| format!("{} {}", self.alphabet[a], self.init[a]))
            .collect();
        writeln!(f, "init: {}", init.join(" "))?;
        for a in 0..n {
            let pairs: Vec<String> = (0..n * n)
                .filter(|&k| !self.branch[a][k].is_zero())
                .map(|k| format!("({},{}) {}", self.alphabet[k / n], self.alphabet[k % n], self.branch[a][k]))
                .collect();
            writeln!(f, "branch: {} -> {}", self.alphabet[a], pairs.join(" "))?;
        }
        Ok(())
    }
}

struct Builder {
    alphabet: Vec<String>,
    init: Option<Vec<BigRational>>,
    branch: Vec<Option<Vec<BigRational>>>,
}

impl Builder {
    fn new(alphabet: Vec<String>, line: usize) -> Result<Self, ProcessError> {
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = alphabet.iter().find(|a| !seen.insert(a.as_str())) {
            return Err(ProcessError::Duplicate { line, what: format!("letter `{dup}`") });
        }
        let n = alphabet.len();
        Ok(Builder { alphabet, init: None, branch: vec![None; n] })
    }

    fn letter(&self, name: &str, line: usize) -> Result<LetterId, ProcessError> {
        self.alphabet
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| ProcessError::UnknownLetter { line, letter: name.to_string() })
    }

    fn rational(text: &str, line: usize) -> Result<BigRational, ProcessError> {
        parse_rational(text)
            .ok_or_else(|| ProcessError::Syntax { line, message: format!("invalid rational `{text}`") })
    }

    fn set_init(&mut self, entries: Vec<(String, String)>, line: usize) -> Result<(), ProcessError> {
        if self.init.is_some() {
            return Err(ProcessError::Duplicate { line, what: "init declaration".into() });
        }
        let mut init = vec![BigRational::zero(); self.alphabet.len()];
        let mut set = vec![false; self.alphabet.len()];
        for (name, value) in entries {
            let a = self.letter(&name, line)?;
            if std::mem::replace(&mut set[a], true) {
                return Err(ProcessError::Duplicate { line, what: format!("init entry for `{name}`") });
            }
            init[a] = Self::rational(&value, line)?;
        }
        self.init = Some(init);
        Ok(())
    }

    fn set_branch(&mut self, parent: &str, entries: Vec<(String, String, String)>, line: usize) -> Result<(), ProcessError> {
        let n = self.alphabet.len();
        let a = self.letter(parent, line)?;
        if self.branch[a].is_some() {
            return Err(ProcessError::Duplicate { line, what: format!("branch line for `{parent}`") });
        }
        let mut row = vec![BigRational::zero(); n * n];
        let mut set = vec![false; n * n];
        for (l, r, value) in entries {
            let k = self.letter(&l, line)? * n + self.letter(&r, line)?;
            if std::mem::replace(&mut set[k], true) {
                return Err(ProcessError::Duplicate { line, what: format!("pair ({l},{r})") });
            }
            row[k] = Self::rational(&value, line)?;
        }
        self.branch[a] = Some(row);
        Ok(())
    }

    fn finish(self) -> Result<BranchingProcess, ProcessError> {
        let init = self.init.ok_or(ProcessError::MissingField("init"))?;
        let mut branch = Vec::with_capacity(self.alphabet.len());
        for (a, row) in self.branch.into_iter().enumerate() {
            branch.push(row.ok_or_else(|| ProcessError::MissingBranch(self.alphabet[a].clone()))?);
        }
        BranchingProcess::new(self.alphabet, init, branch)
    }
}

fn parse_pairs(text: &str, line: usize) -> Result<Vec<(String, String, String)>, ProcessError> {
    let syntax = |message: &str| ProcessError::Syntax { line, message: message.to_string() };
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let inner_start = rest.strip_prefix('(').ok_or_else(|| syntax("expected `(left,right)`"))?;
        let close = inner_start.find(')').ok_or_else(|| syntax("unclosed `(`"))?;
        let (l, r) = inner_start[..close].split_once(',').ok_or_else(|| syntax("expected `,` in pair"))?;
        let after = inner_start[close + 1..].trim_start();
        let end = after.find(|c: char| c.is_whitespace()).unwrap_or(after.len());
        if end == 0 {
            return Err(syntax("missing probability after pair"));
        }
        out.push((l.trim().to_string(), r.trim().to_string(), after[..end].to_string()));
        rest = after[end..].trim_start();
    }
    Ok(out)
}

/// Parses the line-oriented process format.
pub fn parse_process(text: &str) -> Result<BranchingProcess, ProcessError> {
    let mut builder: Option<Builder> = None;
    let mut pending: Vec<(usize, String, String)> = Vec::new();
    for (idx, full_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, body) = content
            .split_once(':')
            .ok_or_else(|| ProcessError::Syntax { line, message: "expected `key: value`".into() })?;
        match key.trim() {
            "alphabet" => {
                if builder.is_some() {
                    return Err(ProcessError::Duplicate { line, what: "alphabet declaration".into() });
                }
                let letters: Vec<String> = body.split_whitespace().map(String::from).collect();
                if letters.is_empty() {
                    return Err(ProcessError::Syntax { line, message: "empty alphabet".into() });
                }
                builder = Some(Builder::new(letters, line)?);
            }
            k @ ("init" | "branch") => pending.push((line, k.to_string(), body.to_string())),
            other => return Err(ProcessError::Syntax { line, message: format!("unknown key `{other}`") }),
        }
    }
    let mut builder = builder.ok_or(ProcessError::MissingField("alphabet"))?;
    for (line, key, body) in pending {
        if key == "init" {
            let words: Vec<&str> = body.split_whitespace().collect();
            if words.len() % 2 != 0 {
                return Err(ProcessError::Syntax { line, message: "expected `letter probability` pairs".into() });
            }
            let entries = words.chunks(2).map(|c| (c[0].to_string(), c[1].to_string())).collect();
            builder.set_init(entries, line)?;
        } else {
            let (parent, pairs) = body
                .split_once("->")
                .ok_or_else(|| ProcessError::Syntax { line, message: "expected `letter -> pairs`".into() })?;
            builder.set_branch(parent.trim(), parse_pairs(pairs, line)?, line)?;
        }
    }
    builder.finish()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonProcess {
    alphabet: Vec<String>,
    init: BTreeMap<String, String>,
    branch: BTreeMap<String, Vec<JsonBranch>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonBranch {
    left: String,
    right: String,
    prob: String,
}

/// Parses the JSON mirror of the process format.
pub fn parse_process_json(text: &str) -> Result<BranchingProcess, ProcessError> {
    let json: JsonProcess = serde_json::from_str(text).map_err(|e| ProcessError::Json(e.to_string()))?;
    if json.alphabet.is_empty() {
        return Err(ProcessError::MissingField("alphabet"));
    }
    let mut builder = Builder::new(json.alphabet, 0)?;
    builder.set_init(json.init.into_iter().collect(), 0)?;
    for (parent, entries) in json.branch {
        let entries = entries.into_iter().map(|b| (b.left, b.right, b.prob)).collect();
        builder.set_branch(&parent, entries, 0)?;
    }
    builder.finish()
}
