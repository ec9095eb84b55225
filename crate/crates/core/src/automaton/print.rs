use std::fmt::{self, Write};

use super::{Automaton, TransitionFormula};

impl Automaton {
    /// Renders a transition formula with state names, using the minimal
    /// parenthesization that parses back to the same tree.
    pub fn format_formula(&self, formula: &TransitionFormula) -> String {
        let mut out = String::new();
        self.write_formula(&mut out, formula, 0);
        out
    }

    // precedence: 0 = disjunction context, 1 = conjunction context, 2 = operand
    fn write_formula(&self, out: &mut String, f: &TransitionFormula, ctx: u8) {
        match f {
            TransitionFormula::Atom(d, q) => {
                let _ = write!(out, "({d} {})", self.states()[*q]);
            }
            TransitionFormula::Or(a, b) => {
                if ctx > 0 {
                    out.push('(');
                }
                self.write_formula(out, a, 0);
                out.push_str(" | ");
                self.write_formula(out, b, 1);
                if ctx > 0 {
                    out.push(')');
                }
            }
            TransitionFormula::And(a, b) => {
                if ctx > 1 {
                    out.push('(');
                }
                self.write_formula(out, a, 1);
                out.push_str(" & ");
                self.write_formula(out, b, 2);
                if ctx > 1 {
                    out.push(')');
                }
            }
        }
    }

    /// JSON mirror of the canonical text form.
    pub fn to_json(&self) -> String {
        let json = super::parse::JsonAutomaton {
            alphabet: self.alphabet().to_vec(),
            states: self.states().to_vec(),
            initial: self.states()[self.initial()].clone(),
            priority: self.states().iter().cloned().zip(self.priorities().iter().copied()).collect(),
            delta: (0..self.num_states())
                .flat_map(|q| {
                    (0..self.num_letters()).map(move |a| super::parse::JsonTransition {
                        state: self.states()[q].clone(),
                        letter: self.alphabet()[a].clone(),
                        formula: self.format_formula(self.transition(q, a)),
                    })
                })
                .collect(),
        };
        serde_json::to_string_pretty(&json).expect("plain data serializes")
    }
}

impl fmt::Display for Automaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alphabet: {}", self.alphabet().join(" "))?;
        writeln!(f, "states: {}", self.states().join(" "))?;
        writeln!(f, "initial: {}", self.states()[self.initial()])?;
        let prio: Vec<String> = self
            .states()
            .iter()
            .zip(self.priorities())
            .map(|(s, p)| format!("{s} {p}"))
            .collect();
        writeln!(f, "priority: {}", prio.join(" "))?;
        for q in 0..self.num_states() {
            for a in 0..self.num_letters() {
                writeln!(
                    f,
                    "delta: {} {} = {}",
                    self.states()[q],
                    self.alphabet()[a],
                    self.format_formula(self.transition(q, a))
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_automaton, parse_automaton_json, parse_unchecked};

    #[test]
    fn canonical_text_round_trips() {
        let src = "alphabet: a b\nstates: p q\ninitial: p\npriority: p 1 q 0\n\
                   delta: p a = (L q) | (R p) & (L p)\n\
                   delta: p b = ((L p) | (R p)) & (L q)\n\
                   delta: q a = (L q) & ((R q) & (L q))\n\
                   delta: q b = (L q) | ((R q) | (L q))\n";
        let aut = parse_unchecked(src).unwrap();
        assert_eq!(aut.to_string(), src);
        assert_eq!(parse_unchecked(&aut.to_string()).unwrap(), aut);
    }

    #[test]
    fn json_round_trips() {
        let aut = parse_automaton(
            "alphabet: a\nstates: q0 q1\ninitial: q1\npriority: q0 0 q1 1\n\
             delta: q0 a = (L q0) & (R q0)\ndelta: q1 a = (L q0) | (R q1)\n",
        )
        .unwrap();
        let back = parse_automaton_json(&aut.to_json()).unwrap();
        assert_eq!(back, aut);
    }
}
