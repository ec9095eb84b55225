//! Measures of tree languages recognized by weak alternating parity automata.

pub mod automaton;
pub mod distribution;
pub mod engine;
pub mod formula;
pub mod game_oracle;
