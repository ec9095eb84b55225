use std::collections::HashMap;

use super::TreePrefix;
use crate::automaton::{Automaton, Direction, StateId, SubsetMask, TransitionFormula};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    Exists,
    Forall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum FNode {
    Atom(Direction, StateId),
    And(usize, usize),
    Or(usize, usize),
}

/// All transition formulas flattened in preorder, so a subformula always
/// has a larger index than its parent.
struct Flat {
    nodes: Vec<FNode>,
    roots: Vec<Vec<usize>>,
}

impl Flat {
    fn new(aut: &Automaton) -> Self {
        let mut nodes = Vec::new();
        let roots = (0..aut.num_states())
            .map(|q| (0..aut.num_letters()).map(|a| Self::push(&mut nodes, aut.transition(q, a))).collect())
            .collect();
        Flat { nodes, roots }
    }

    fn push(nodes: &mut Vec<FNode>, f: &TransitionFormula) -> usize {
        let id = nodes.len();
        match f {
            TransitionFormula::Atom(d, q) => nodes.push(FNode::Atom(*d, *q)),
            TransitionFormula::And(a, b) | TransitionFormula::Or(a, b) => {
                nodes.push(FNode::Atom(Direction::L, 0));
                let l = Self::push(nodes, a);
                let r = Self::push(nodes, b);
                nodes[id] = if matches!(f, TransitionFormula::And(..)) { FNode::And(l, r) } else { FNode::Or(l, r) };
            }
        }
        id
    }
}

/// What a position of the acceptance game stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PositionItem {
    /// `(q, v)`: the automaton is in state `q` at node `v`.
    State(StateId),
    Or,
    And,
    /// `((d, q), v)`: move to the `d`-child in state `q`.
    Atom(Direction, StateId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Position {
    pub node: usize,
    pub item: PositionItem,
    pub owner: Owner,
    pub successors: Vec<usize>,
    /// `Some(q)` for state positions at the truncation depth.
    pub boundary: Option<StateId>,
    /// Fixed winner for positions whose state is known to win or lose on every tree.
    pub settled: Option<bool>,
}

/// The acceptance game on a finite prefix, restricted to positions
/// reachable from the root position.
#[derive(Debug, Clone)]
pub struct Arena {
    pub positions: Vec<Position>,
    pub root: usize,
    order: Vec<usize>,
}

impl Arena {
    /// Game from state `start` at the root of `prefix`. States with
    /// `settled[q] = Some(w)` become leaves with winner `w` at any depth.
    pub fn build(aut: &Automaton, prefix: &TreePrefix, start: StateId, settled: &[Option<bool>]) -> Self {
        let flat = Flat::new(aut);
        let n = aut.num_states();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut positions: Vec<Position> = Vec::new();
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        // items: 0..n are states, n + j is formula node j
        let mut get = |node: usize, item: usize, positions: &mut Vec<Position>, stack: &mut Vec<(usize, usize, usize)>| {
            *index.entry((node, item)).or_insert_with(|| {
                let kind = if item < n {
                    PositionItem::State(item)
                } else {
                    match flat.nodes[item - n] {
                        FNode::Atom(d, q) => PositionItem::Atom(d, q),
                        FNode::And(..) => PositionItem::And,
                        FNode::Or(..) => PositionItem::Or,
                    }
                };
                let owner = if kind == PositionItem::And { Owner::Forall } else { Owner::Exists };
                positions.push(Position { node, item: kind, owner, successors: Vec::new(), boundary: None, settled: None });
                stack.push((positions.len() - 1, node, item));
                positions.len() - 1
            })
        };
        let root = get(0, start, &mut positions, &mut stack);
        let mut keys: Vec<(usize, usize)> = vec![(0, start)];
        while let Some((id, node, item)) = stack.pop() {
            if keys.len() <= id {
                keys.resize(id + 1, (0, 0));
            }
            keys[id] = (node, item);
            let succ: Vec<usize> = if item < n {
                if let Some(w) = settled[item] {
                    positions[id].settled = Some(w);
                    Vec::new()
                } else if TreePrefix::node_depth(node) == prefix.depth() {
                    positions[id].boundary = Some(item);
                    Vec::new()
                } else {
                    vec![get(node, n + flat.roots[item][prefix.label(node)], &mut positions, &mut stack)]
                }
            } else {
                match flat.nodes[item - n] {
                    FNode::Atom(d, q) => vec![get(TreePrefix::child(node, d), q, &mut positions, &mut stack)],
                    FNode::And(a, b) | FNode::Or(a, b) => vec![
                        get(node, n + a, &mut positions, &mut stack),
                        get(node, n + b, &mut positions, &mut stack),
                    ],
                }
            };
            positions[id].successors = succ;
        }
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(keys[i]));
        Arena { positions, root, order }
    }

    /// Winner (`true` for ∃) of every position by backward induction, with
    /// boundary state positions resolved by `boundary[q]`.
    pub fn solve(&self, boundary: &[bool]) -> Vec<bool> {
        let mut win = vec![false; self.positions.len()];
        for &i in &self.order {
            let p = &self.positions[i];
            win[i] = if let Some(w) = p.settled {
                w
            } else if let Some(q) = p.boundary {
                boundary[q]
            } else {
                match p.owner {
                    Owner::Exists => p.successors.iter().any(|&s| win[s]),
                    Owner::Forall => p.successors.iter().all(|&s| win[s]),
                }
            };
        }
        win
    }

    pub fn root_wins(&self, boundary: &[bool]) -> bool {
        self.solve(boundary)[self.root]
    }
}

/// Whether ∃ wins the truncated game from state `p` at the root of `prefix`,
/// with state positions at the truncation depth resolved by `boundary`.
pub fn solve_truncated(aut: &Automaton, prefix: &TreePrefix, p: StateId, boundary: &[bool]) -> bool {
    Arena::build(aut, prefix, p, &vec![None; aut.num_states()]).root_wins(boundary)
}

/// States from which ∃ wins on every tree (`win`) or on no tree (`lose`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Certificates {
    pub win: SubsetMask,
    pub lose: SubsetMask,
}

impl Certificates {
    /// Boundary values assuming the worst for ∃ outside `win`.
    pub fn pessimistic(&self, states: usize) -> Vec<bool> {
        (0..states).map(|q| self.win.contains(q)).collect()
    }

    /// Boundary values assuming the best for ∃ outside `lose`.
    pub fn optimistic(&self, states: usize) -> Vec<bool> {
        (0..states).map(|q| !self.lose.contains(q)).collect()
    }

    pub fn settled(&self, states: usize) -> Vec<Option<bool>> {
        (0..states)
            .map(|q| {
                if self.win.contains(q) {
                    Some(true)
                } else if self.lose.contains(q) {
                    Some(false)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Solves the games in which the letter at each step is chosen by ∀ (for
/// `win`) or by ∃ (for `lose`) instead of read from a tree. Winning those
/// against a letter-choosing opponent implies winning on every fixed tree.
pub fn certified_states(aut: &Automaton) -> Certificates {
    let win = solve_letter_game(aut, Owner::Forall);
    let lose = solve_letter_game(aut, Owner::Exists);
    Certificates {
        win: SubsetMask::from_states((0..aut.num_states()).filter(|&q| win[q])),
        lose: SubsetMask::from_states((0..aut.num_states()).filter(|&q| !lose[q])),
    }
}

// Returns, per state, whether ∃ wins the letter game.
fn solve_letter_game(aut: &Automaton, letter_owner: Owner) -> Vec<bool> {
    let flat = Flat::new(aut);
    let n = aut.num_states();
    let total = n + flat.nodes.len();
    let mut owner = vec![letter_owner; total];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut prio = vec![0u32; total];
    for q in 0..n {
        prio[q] = aut.priority(q);
        succ[q] = flat.roots[q].iter().map(|&r| n + r).collect();
    }
    // every formula node inherits the priority of the state owning it
    for q in 0..n {
        let mut stack: Vec<usize> = flat.roots[q].clone();
        while let Some(j) = stack.pop() {
            prio[n + j] = aut.priority(q);
            match flat.nodes[j] {
                FNode::Atom(_, t) => {
                    owner[n + j] = Owner::Exists;
                    succ[n + j] = vec![t];
                }
                FNode::And(a, b) | FNode::Or(a, b) => {
                    owner[n + j] = if matches!(flat.nodes[j], FNode::And(..)) { Owner::Forall } else { Owner::Exists };
                    succ[n + j] = vec![n + a, n + b];
                    stack.extend([a, b]);
                }
            }
        }
    }
    let mut levels: Vec<u32> = prio.clone();
    levels.sort_unstable();
    levels.dedup();
    let mut winner: Vec<Option<bool>> = vec![None; total];
    for p in levels {
        let level: Vec<usize> = (0..total).filter(|&v| prio[v] == p).collect();
        // player trying to leave the level into positions it wins
        let escaper = if p % 2 == 0 { Owner::Forall } else { Owner::Exists };
        let escaper_wins = |w: bool| (escaper == Owner::Exists) == w;
        let mut attracted = vec![false; total];
        loop {
            let mut changed = false;
            for &v in &level {
                if attracted[v] {
                    continue;
                }
                let good = |s: &usize| attracted[*s] || (prio[*s] != p && winner[*s].is_some_and(escaper_wins));
                let take = if owner[v] == escaper { succ[v].iter().any(good) } else { succ[v].iter().all(good) };
                if take {
                    attracted[v] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for &v in &level {
            winner[v] = Some(if attracted[v] { escaper == Owner::Exists } else { p % 2 == 0 });
        }
    }
    (0..n).map(|q| winner[q].expect("every level is solved")).collect()
}
