use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Automaton, Direction, TransitionFormula, ValidationReport, WeakAutomaton, MAX_STATES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("missing transition for state `{0}` and letter `{1}`")]
    MissingTransition(String, String),
    #[error("missing priority for state `{0}`")]
    MissingPriority(String),
    #[error("missing `{0}` declaration")]
    MissingField(&'static str),
    #[error("duplicate {0} `{1}`")]
    Duplicate(&'static str, String),
    #[error("boolean constant `{0}` is not allowed in transition formulas")]
    BooleanConstant(String),
    #[error("{0} list is empty")]
    EmptyList(&'static str),
    #[error("{0} states exceed the supported maximum of 62")]
    TooManyStates(usize),
    #[error("automaton is not weak ({} violating atoms)", .0.violations.len())]
    NotWeak(ValidationReport),
    #[error("invalid JSON: {0}")]
    Json(String),
}

/// A parse failure; `line` and `column` are 1-based, or 0 when not tied to a position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}, column {}: {}", self.line, self.column, self.kind)
        } else {
            write!(f, "{}", self.kind)
        }
    }
}

impl std::error::Error for ParseError {}

fn error<T>(line: usize, column: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { line, column, kind })
}

const BOOLEAN_CONSTANTS: &[&str] = &["true", "false", "tt", "ff", "True", "False", "TRUE", "FALSE", "top", "bot"];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

#[derive(Debug, Clone, PartialEq)]
enum RawFormula {
    Atom(Direction, String, usize),
    And(Box<RawFormula>, Box<RawFormula>),
    Or(Box<RawFormula>, Box<RawFormula>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Ident(String),
}

struct FormulaParser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    line: usize,
    end_column: usize,
}

impl FormulaParser {
    fn new(text: &str, line: usize, offset: usize) -> Result<Self, ParseError> {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = offset + i + 1;
            match c {
                ' ' | '\t' => i += 1,
                '(' => {
                    tokens.push((Token::LParen, col));
                    i += 1;
                }
                ')' => {
                    tokens.push((Token::RParen, col));
                    i += 1;
                }
                '&' => {
                    tokens.push((Token::And, col));
                    i += 1;
                }
                '|' => {
                    tokens.push((Token::Or, col));
                    i += 1;
                }
                '⊤' | '⊥' => return error(line, col, ParseErrorKind::BooleanConstant(c.to_string())),
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let lit: String = chars[start..i].iter().collect();
                    let kind = if lit == "0" || lit == "1" {
                        ParseErrorKind::BooleanConstant(lit)
                    } else {
                        ParseErrorKind::Syntax(format!("unexpected number `{lit}`"))
                    };
                    return error(line, col, kind);
                }
                c if is_ident_start(c) => {
                    let start = i;
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    let ident: String = chars[start..i].iter().collect();
                    tokens.push((Token::Ident(ident), col));
                }
                other => {
                    return error(line, col, ParseErrorKind::Syntax(format!("unexpected character `{other}`")))
                }
            }
        }
        Ok(FormulaParser { tokens, pos: 0, line, end_column: offset + chars.len() + 1 })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_column, |&(_, c)| c)
    }

    fn fail<T>(&self, message: &str) -> Result<T, ParseError> {
        if let Some((Token::Ident(name), col)) = self.tokens.get(self.pos) {
            if BOOLEAN_CONSTANTS.contains(&name.as_str()) {
                return error(self.line, *col, ParseErrorKind::BooleanConstant(name.clone()));
            }
        }
        let found = match self.peek() {
            None => "end of formula".to_string(),
            Some(Token::LParen) => "`(`".into(),
            Some(Token::RParen) => "`)`".into(),
            Some(Token::And) => "`&`".into(),
            Some(Token::Or) => "`|`".into(),
            Some(Token::Ident(s)) => format!("`{s}`"),
        };
        error(self.line, self.column(), ParseErrorKind::Syntax(format!("{message}, found {found}")))
    }

    fn expect(&mut self, token: Token, message: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(message)
        }
    }

    fn parse(mut self) -> Result<RawFormula, ParseError> {
        let f = self.disjunction()?;
        if self.pos < self.tokens.len() {
            return self.fail("expected `&`, `|` or end of formula");
        }
        Ok(f)
    }

    fn disjunction(&mut self) -> Result<RawFormula, ParseError> {
        let mut f = self.conjunction()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            f = RawFormula::Or(Box::new(f), Box::new(self.conjunction()?));
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<RawFormula, ParseError> {
        let mut f = self.primary()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            f = RawFormula::And(Box::new(f), Box::new(self.primary()?));
        }
        Ok(f)
    }

    fn primary(&mut self) -> Result<RawFormula, ParseError> {
        self.expect(Token::LParen, "expected `(`")?;
        if let Some(Token::Ident(dir)) = self.peek().cloned() {
            let direction = match dir.as_str() {
                "L" => Direction::L,
                "R" => Direction::R,
                _ => return self.fail("expected direction `L` or `R`"),
            };
            self.pos += 1;
            let col = self.column();
            let state = match self.peek().cloned() {
                Some(Token::Ident(s)) if BOOLEAN_CONSTANTS.contains(&s.as_str()) => {
                    return error(self.line, col, ParseErrorKind::BooleanConstant(s))
                }
                Some(Token::Ident(s)) => s,
                _ => return self.fail("expected state name"),
            };
            self.pos += 1;
            self.expect(Token::RParen, "expected `)`")?;
            return Ok(RawFormula::Atom(direction, state, col));
        }
        let inner = self.disjunction()?;
        self.expect(Token::RParen, "expected `)`")?;
        Ok(inner)
    }
}

struct RawDelta {
    state: (String, usize),
    letter: (String, usize),
    formula: RawFormula,
    line: usize,
}

#[derive(Default)]
struct RawAutomaton {
    alphabet: Option<(Vec<(String, usize)>, usize)>,
    states: Option<(Vec<(String, usize)>, usize)>,
    initial: Option<((String, usize), usize)>,
    priority: Option<(Vec<((String, usize), u32)>, usize)>,
    delta: Vec<RawDelta>,
}

fn words(text: &str, offset: usize) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut col = offset;
    for piece in text.split([' ', '\t']) {
        if !piece.is_empty() {
            out.push((piece.to_string(), col + 1));
        }
        col += piece.chars().count() + 1;
    }
    out
}

fn check_ident(word: &(String, usize), line: usize) -> Result<(), ParseError> {
    let mut chars = word.0.chars();
    let ok = chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char);
    if ok {
        Ok(())
    } else {
        error(line, word.1, ParseErrorKind::Syntax(format!("invalid identifier `{}`", word.0)))
    }
}

fn read_text(text: &str) -> Result<RawAutomaton, ParseError> {
    let mut raw = RawAutomaton::default();
    for (idx, full_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full_line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(colon) = content.find(':') else {
            return error(line, 1, ParseErrorKind::Syntax("expected `key: value`".into()));
        };
        let key = content[..colon].trim();
        let body = &content[colon + 1..];
        let offset = content[..colon + 1].chars().count();
        let key_col = content.chars().take_while(|c| c.is_whitespace()).count() + 1;
        let duplicate = |name: &'static str| error(line, key_col, ParseErrorKind::Duplicate("declaration", name.into()));
        match key {
            "alphabet" | "states" => {
                let list = words(body, offset);
                for w in &list {
                    check_ident(w, line)?;
                }
                let slot = if key == "alphabet" { &mut raw.alphabet } else { &mut raw.states };
                if slot.is_some() {
                    return duplicate(if key == "alphabet" { "alphabet" } else { "states" });
                }
                *slot = Some((list, line));
            }
            "initial" => {
                if raw.initial.is_some() {
                    return duplicate("initial");
                }
                let list = words(body, offset);
                match list.as_slice() {
                    [one] => {
                        check_ident(one, line)?;
                        raw.initial = Some((one.clone(), line));
                    }
                    _ => {
                        return error(line, offset + 1, ParseErrorKind::Syntax("expected exactly one initial state".into()))
                    }
                }
            }
            "priority" => {
                if raw.priority.is_some() {
                    return duplicate("priority");
                }
                let list = words(body, offset);
                if list.len() % 2 != 0 {
                    return error(line, offset + 1, ParseErrorKind::Syntax("expected `state number` pairs".into()));
                }
                let mut pairs = Vec::new();
                for pair in list.chunks(2) {
                    check_ident(&pair[0], line)?;
                    let value = pair[1].0.parse::<u32>().map_err(|_| ParseError {
                        line,
                        column: pair[1].1,
                        kind: ParseErrorKind::Syntax(format!("invalid priority `{}`", pair[1].0)),
                    })?;
                    pairs.push((pair[0].clone(), value));
                }
                raw.priority = Some((pairs, line));
            }
            "delta" => {
                let Some(eq) = body.find('=') else {
                    return error(line, offset + 1, ParseErrorKind::Syntax("expected `state letter = formula`".into()));
                };
                let head = words(&body[..eq], offset);
                let [state, letter] = head.as_slice() else {
                    return error(line, offset + 1, ParseErrorKind::Syntax("expected `state letter` before `=`".into()));
                };
                check_ident(state, line)?;
                check_ident(letter, line)?;
                let f_offset = offset + body[..eq + 1].chars().count();
                let formula = FormulaParser::new(&body[eq + 1..], line, f_offset)?.parse()?;
                raw.delta.push(RawDelta { state: state.clone(), letter: letter.clone(), formula, line });
            }
            other => {
                return error(line, key_col, ParseErrorKind::Syntax(format!("unknown key `{other}`")));
            }
        }
    }
    Ok(raw)
}

fn index_of(list: &[(String, usize)]) -> HashMap<&str, usize> {
    list.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect()
}

fn resolve_formula(
    raw: &RawFormula,
    states: &HashMap<&str, usize>,
    line: usize,
) -> Result<TransitionFormula, ParseError> {
    Ok(match raw {
        RawFormula::Atom(d, name, col) => match states.get(name.as_str()) {
            Some(&q) => TransitionFormula::Atom(*d, q),
            None => return error(line, *col, ParseErrorKind::UnknownState(name.clone())),
        },
        RawFormula::And(a, b) => resolve_formula(a, states, line)?.and(resolve_formula(b, states, line)?),
        RawFormula::Or(a, b) => resolve_formula(a, states, line)?.or(resolve_formula(b, states, line)?),
    })
}

fn resolve(raw: RawAutomaton) -> Result<Automaton, ParseError> {
    let (alphabet, a_line) = raw.alphabet.ok_or(ParseError { line: 0, column: 0, kind: ParseErrorKind::MissingField("alphabet") })?;
    let (states, s_line) = raw.states.ok_or(ParseError { line: 0, column: 0, kind: ParseErrorKind::MissingField("states") })?;
    let (initial, i_line) = raw.initial.ok_or(ParseError { line: 0, column: 0, kind: ParseErrorKind::MissingField("initial") })?;
    let (priority, p_line) = raw.priority.ok_or(ParseError { line: 0, column: 0, kind: ParseErrorKind::MissingField("priority") })?;
    if alphabet.is_empty() {
        return error(a_line, 1, ParseErrorKind::EmptyList("alphabet"));
    }
    if states.is_empty() {
        return error(s_line, 1, ParseErrorKind::EmptyList("states"));
    }
    if states.len() > MAX_STATES {
        return error(s_line, 1, ParseErrorKind::TooManyStates(states.len()));
    }
    let letter_idx = index_of(&alphabet);
    let state_idx = index_of(&states);
    if letter_idx.len() < alphabet.len() {
        let (name, col) = first_repeat(&alphabet);
        return error(a_line, col, ParseErrorKind::Duplicate("letter", name));
    }
    if state_idx.len() < states.len() {
        let (name, col) = first_repeat(&states);
        return error(s_line, col, ParseErrorKind::Duplicate("state", name));
    }
    let Some(&init) = state_idx.get(initial.0.as_str()) else {
        return error(i_line, initial.1, ParseErrorKind::UnknownState(initial.0));
    };
    let mut prio: Vec<Option<u32>> = vec![None; states.len()];
    for ((name, col), value) in priority {
        let Some(&q) = state_idx.get(name.as_str()) else {
            return error(p_line, col, ParseErrorKind::UnknownState(name));
        };
        if prio[q].replace(value).is_some() {
            return error(p_line, col, ParseErrorKind::Duplicate("priority for state", name));
        }
    }
    let mut priorities = Vec::with_capacity(states.len());
    for (q, p) in prio.into_iter().enumerate() {
        match p {
            Some(p) => priorities.push(p),
            None => return error(p_line, 1, ParseErrorKind::MissingPriority(states[q].0.clone())),
        }
    }
    let mut table: Vec<Vec<Option<TransitionFormula>>> = vec![vec![None; alphabet.len()]; states.len()];
    for d in raw.delta {
        let Some(&q) = state_idx.get(d.state.0.as_str()) else {
            return error(d.line, d.state.1, ParseErrorKind::UnknownState(d.state.0));
        };
        let Some(&a) = letter_idx.get(d.letter.0.as_str()) else {
            return error(d.line, d.letter.1, ParseErrorKind::UnknownLetter(d.letter.0));
        };
        let f = resolve_formula(&d.formula, &state_idx, d.line)?;
        if table[q][a].replace(f).is_some() {
            return error(d.line, d.state.1, ParseErrorKind::Duplicate("transition", format!("{} {}", d.state.0, d.letter.0)));
        }
    }
    let mut delta = Vec::with_capacity(states.len());
    for (q, row) in table.into_iter().enumerate() {
        let mut out = Vec::with_capacity(alphabet.len());
        for (a, f) in row.into_iter().enumerate() {
            match f {
                Some(f) => out.push(f),
                None => {
                    return error(0, 0, ParseErrorKind::MissingTransition(states[q].0.clone(), alphabet[a].0.clone()))
                }
            }
        }
        delta.push(out);
    }
    Automaton::new(
        alphabet.into_iter().map(|(n, _)| n).collect(),
        states.into_iter().map(|(n, _)| n).collect(),
        init,
        priorities,
        delta,
    )
}

fn first_repeat(list: &[(String, usize)]) -> (String, usize) {
    let mut seen = std::collections::HashSet::new();
    list.iter().find(|(n, _)| !seen.insert(n.as_str())).cloned().expect("caller checked for a repeat")
}

/// Parses the line-oriented text format without checking weakness.
pub fn parse_unchecked(text: &str) -> Result<Automaton, ParseError> {
    resolve(read_text(text)?)
}

/// Parses and validates an automaton in the line-oriented text format.
pub fn parse_automaton(text: &str) -> Result<WeakAutomaton, ParseError> {
    WeakAutomaton::new(parse_unchecked(text)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct JsonAutomaton {
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub initial: String,
    pub priority: BTreeMap<String, u32>,
    pub delta: Vec<JsonTransition>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct JsonTransition {
    pub state: String,
    pub letter: String,
    pub formula: String,
}

/// Parses the JSON mirror of the text format without checking weakness.
pub fn parse_unchecked_json(text: &str) -> Result<Automaton, ParseError> {
    let json: JsonAutomaton = serde_json::from_str(text).map_err(|e| ParseError {
        line: e.line(),
        column: e.column(),
        kind: ParseErrorKind::Json(e.to_string()),
    })?;
    let at = |list: Vec<String>| list.into_iter().map(|s| (s, 0)).collect::<Vec<_>>();
    let mut raw = RawAutomaton {
        alphabet: Some((at(json.alphabet), 0)),
        states: Some((at(json.states), 0)),
        initial: Some(((json.initial, 0), 0)),
        priority: Some((json.priority.into_iter().map(|(k, v)| ((k, 0), v)).collect(), 0)),
        delta: Vec::new(),
    };
    for t in json.delta {
        let formula = FormulaParser::new(&t.formula, 0, 0)?.parse()?;
        raw.delta.push(RawDelta { state: (t.state, 0), letter: (t.letter, 0), formula, line: 0 });
    }
    resolve(raw)
}

/// Parses and validates an automaton given in JSON.
pub fn parse_automaton_json(text: &str) -> Result<WeakAutomaton, ParseError> {
    WeakAutomaton::new(parse_unchecked_json(text)?)
}
