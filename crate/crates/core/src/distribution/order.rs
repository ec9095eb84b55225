use std::collections::VecDeque;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};

use super::upset::enumerate_upsets;
use super::{DistributionError, StateSetDistribution, Values};

pub const BRUTEFORCE_MAX_STATES: usize = 6;

/// Default order test.
pub fn leq(alpha: &StateSetDistribution, beta: &StateSetDistribution) -> Result<bool, DistributionError> {
    leq_coupling(alpha, beta)
}

fn check_shapes(alpha: &StateSetDistribution, beta: &StateSetDistribution) -> Result<(), DistributionError> {
    if alpha.width() != beta.width() || alpha.blocks() != beta.blocks() {
        return Err(DistributionError::ShapeMismatch);
    }
    if alpha.mode() != beta.mode() {
        return Err(DistributionError::ModeMismatch);
    }
    Ok(())
}

/// Per-block integer weights `α(P)·D_β − β(P)·D_α` (exact) so that
/// `α ⪯ β` iff every up-set sum of the differences is at most zero.
fn exact_scaled(alpha: &StateSetDistribution, beta: &StateSetDistribution) -> Option<(Vec<BigUint>, Vec<BigUint>)> {
    match (alpha.values(), beta.values()) {
        (Values::Exact(a), Values::Exact(b)) => {
            let (da, db) = (a.den.value(), b.den.value());
            Some((a.nums.iter().map(|n| n * &db).collect(), b.nums.iter().map(|n| n * &da).collect()))
        }
        _ => None,
    }
}

/// `α ⪯ β` by checking `α(U) ≤ β(U)` for every up-set `U` (and every block).
pub fn leq_bruteforce(alpha: &StateSetDistribution, beta: &StateSetDistribution) -> Result<bool, DistributionError> {
    check_shapes(alpha, beta)?;
    let width = alpha.width();
    if width > BRUTEFORCE_MAX_STATES {
        return Err(DistributionError::TooManyStates { max: BRUTEFORCE_MAX_STATES, got: width });
    }
    let k = alpha.k();
    let upsets = enumerate_upsets(width);
    if let Some((a, b)) = exact_scaled(alpha, beta) {
        let diff: Vec<BigInt> = a.into_iter().zip(b).map(|(x, y)| BigInt::from(x) - BigInt::from(y)).collect();
        let small: Option<Vec<i128>> = diff.iter().map(|d| d.to_i128()).collect();
        for block in 0..alpha.blocks() {
            let range = block * k..(block + 1) * k;
            let ok = match &small {
                Some(s) if s.iter().all(|x| x.abs() < 1 << 100) => {
                    let s = &s[range];
                    upsets.iter().all(|&u| bits(u).map(|i| s[i]).sum::<i128>() <= 0)
                }
                _ => {
                    let d = &diff[range];
                    upsets.iter().all(|&u| !bits(u).map(|i| &d[i]).sum::<BigInt>().is_positive())
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    let (a, b) = (alpha.to_f64_vec(), beta.to_f64_vec());
    for block in 0..alpha.blocks() {
        let (a, b) = (&a[block * k..(block + 1) * k], &b[block * k..(block + 1) * k]);
        if !upsets.iter().all(|&u| bits(u).map(|i| a[i] - b[i]).sum::<f64>() <= FLOAT_TOLERANCE) {
            return Ok(false);
        }
    }
    Ok(true)
}

const FLOAT_TOLERANCE: f64 = 1e-12;

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask >> i & 1 == 1)
}

/// `α ⪯ β` via a coupling: the bipartite network source → P (capacity α(P)),
/// P → P' for P ⊆ P' (unbounded), P' → sink (capacity β(P')) carries the
/// full mass iff α is stochastically dominated by β.
pub fn leq_coupling(alpha: &StateSetDistribution, beta: &StateSetDistribution) -> Result<bool, DistributionError> {
    check_shapes(alpha, beta)?;
    let k = alpha.k();
    if let Some((a, b)) = exact_scaled(alpha, beta) {
        for block in 0..alpha.blocks() {
            let range = block * k..(block + 1) * k;
            if !coupling_exists(&a[range.clone()], &b[range], BigUint::zero()) {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    let (a, b) = (alpha.to_f64_vec(), beta.to_f64_vec());
    for block in 0..alpha.blocks() {
        let range = block * k..(block + 1) * k;
        if !coupling_exists(&a[range.clone()], &b[range], FLOAT_TOLERANCE) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) trait FlowValue: Clone + PartialOrd + Zero {
    fn minus(&self, other: &Self) -> Self;
    fn plus(&self, other: &Self) -> Self;
}

impl FlowValue for BigUint {
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl FlowValue for f64 {
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

struct Edge<T> {
    to: usize,
    cap: T,
}

/// Edmonds–Karp max flow on an adjacency-list residual graph.
pub(crate) struct FlowNetwork<T> {
    edges: Vec<Edge<T>>,
    adj: Vec<Vec<usize>>,
}

impl<T: FlowValue> FlowNetwork<T> {
    pub(crate) fn new(nodes: usize) -> Self {
        FlowNetwork { edges: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    pub(crate) fn add_edge(&mut self, from: usize, to: usize, cap: T) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: T::zero() });
    }

    /// Maximum flow value; residual capacities at or below `eps` count as saturated.
    pub(crate) fn max_flow(&mut self, source: usize, sink: usize, eps: &T) -> T {
        let mut total = T::zero();
        loop {
            let mut parent: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            seen[source] = true;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.edges[e].to;
                    if !seen[v] && self.edges[e].cap > *eps {
                        seen[v] = true;
                        parent[v] = Some(e);
                        queue.push_back(v);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }
            let mut bottleneck: Option<T> = None;
            let mut v = sink;
            while let Some(e) = parent[v] {
                let cap = &self.edges[e].cap;
                if bottleneck.as_ref().is_none_or(|b| cap < b) {
                    bottleneck = Some(cap.clone());
                }
                v = self.edges[e ^ 1].to;
            }
            let b = bottleneck.expect("path has at least one edge");
            let mut v = sink;
            while let Some(e) = parent[v] {
                self.edges[e].cap = self.edges[e].cap.minus(&b);
                self.edges[e ^ 1].cap = self.edges[e ^ 1].cap.plus(&b);
                v = self.edges[e ^ 1].to;
            }
            total = total.plus(&b);
        }
    }
}

fn coupling_exists<T: FlowValue>(a: &[T], b: &[T], eps: T) -> bool {
    let k = a.len();
    let total = a.iter().fold(T::zero(), |acc, x| acc.plus(x));
    let (source, sink) = (2 * k, 2 * k + 1);
    let mut net = FlowNetwork::new(2 * k + 2);
    let support_a: Vec<usize> = (0..k).filter(|&p| a[p] > eps).collect();
    let support_b: Vec<usize> = (0..k).filter(|&p| b[p] > eps).collect();
    for &p in &support_a {
        net.add_edge(source, p, a[p].clone());
        // supersets of p
        let free = !(p as u64) & (k as u64 - 1);
        let mut sub = free;
        loop {
            let sup = p | sub as usize;
            if b[sup] > eps {
                net.add_edge(p, k + sup, total.clone());
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }
    for &p in &support_b {
        net.add_edge(k + p, sink, b[p].clone());
    }
    let flow = net.max_flow(source, sink, &eps);
    let gap = total.minus(&flow);
    gap <= eps.plus(&eps).plus(&eps)
}
