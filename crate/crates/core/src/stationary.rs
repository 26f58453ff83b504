//! Steady state of the closed agent–environment loop.

use alloc::vec;
use alloc::vec::Vec;

use crate::entropy::shannon_bits;
use crate::linalg::{solve, Matrix};
use crate::{Error, InputStrategy, Result, Strategy};

/// Largest closed class solved densely; bigger chains use power iteration.
pub const DENSE_LIMIT: usize = 2000;
/// Required stationarity residual `‖πT − π‖_∞`.
pub const RESIDUAL_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 2_000_000;

/// Stationary distribution over `(r, s)` pairs, stored `r`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointStationary {
    pub num_input_states: usize,
    pub num_states: usize,
    pub pi: Vec<f64>,
    /// `P(s)`
    pub marginal: Vec<f64>,
    pub residual: f64,
}

impl JointStationary {
    pub fn pair(&self, r: usize, s: usize) -> f64 {
        self.pi[r * self.num_states + s]
    }
}

/// Sparse transition structure of the joint chain.
pub struct JointChain {
    pub num_input_states: usize,
    pub num_states: usize,
    /// Outgoing `(target, probability)` per pair, duplicates merged.
    pub edges: Vec<Vec<(usize, f64)>>,
}

impl JointChain {
    pub fn new(strategy: &Strategy, input: &InputStrategy) -> Result<Self> {
        let input = input.aligned_to(strategy)?;
        let (nr, ns) = (input.num_states(), strategy.num_states());
        let mut edges = Vec::with_capacity(nr * ns);
        for r in 0..nr {
            for s in 0..ns {
                let mut out: Vec<(usize, f64)> = Vec::new();
                for x in 0..strategy.num_stimuli() {
                    let px = input.prob(r, x);
                    if px == 0.0 {
                        continue;
                    }
                    for (y, py, s2) in strategy.support(s, x) {
                        let r2 = input.next(r, x, y).expect("input update defined on support");
                        let t = r2 * ns + s2;
                        match out.iter_mut().find(|(k, _)| *k == t) {
                            Some(e) => e.1 += px * py,
                            None => out.push((t, px * py)),
                        }
                    }
                }
                out.sort_by_key(|e| e.0);
                edges.push(out);
            }
        }
        Ok(Self { num_input_states: nr, num_states: ns, edges })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `π T`
    pub fn step(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; pi.len()];
        for (i, row) in self.edges.iter().enumerate() {
            if pi[i] == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += pi[i] * p;
            }
        }
        out
    }

    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.step(pi).iter().zip(pi).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max)
    }
}

/// Strongly connected components in reverse topological order (sinks
/// first), by an iterative Tarjan traversal.
pub fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < succ[v].len() {
                let w = succ[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Closed communicating classes of the chain, optionally restricted to
/// those reachable from `start`.
pub fn closed_classes(chain: &JointChain, start: Option<usize>) -> Vec<Vec<usize>> {
    let succ: Vec<Vec<usize>> = chain.edges.iter().map(|e| e.iter().map(|x| x.0).collect()).collect();
    let comps = strongly_connected_components(&succ);
    let mut comp_of = vec![0usize; succ.len()];
    for (c, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    let reachable = start.map(|s| {
        let mut seen = vec![false; succ.len()];
        let mut todo = vec![s];
        seen[s] = true;
        while let Some(v) = todo.pop() {
            for &w in &succ[v] {
                if !seen[w] {
                    seen[w] = true;
                    todo.push(w);
                }
            }
        }
        seen
    });
    comps
        .into_iter()
        .enumerate()
        .filter(|(c, members)| members.iter().all(|&v| succ[v].iter().all(|&w| comp_of[w] == *c)))
        .filter(|(_, members)| reachable.as_ref().is_none_or(|r| r[members[0]]))
        .map(|(_, m)| m)
        .collect()
}

/// Stationary distribution of the joint `(r, s)` chain. Transient pairs get
/// zero mass; more than one closed class is refused.
pub fn joint_stationary_distribution(strategy: &Strategy, input: &InputStrategy) -> Result<JointStationary> {
    joint_stationary_impl(strategy, input, None)
}

/// As [`joint_stationary_distribution`], but only classes reachable from
/// the pair `(r0, s0)` are considered.
pub fn joint_stationary_from(
    strategy: &Strategy,
    input: &InputStrategy,
    r0: usize,
    s0: usize,
) -> Result<JointStationary> {
    if r0 >= input.num_states() || s0 >= strategy.num_states() {
        return Err(Error::InvalidArgument { reason: "initial pair out of range".into() });
    }
    joint_stationary_impl(strategy, input, Some(r0 * strategy.num_states() + s0))
}

fn joint_stationary_impl(strategy: &Strategy, input: &InputStrategy, start: Option<usize>) -> Result<JointStationary> {
    let chain = JointChain::new(strategy, input)?;
    let classes = closed_classes(&chain, start);
    if classes.len() != 1 {
        return Err(Error::ReducibleChain { classes: classes.len() });
    }
    let class = &classes[0];
    let local = if class.len() <= DENSE_LIMIT { dense_solve(&chain, class) } else { None };
    let local = match local {
        Some(p) => p,
        None => power_iteration(&chain, class)?,
    };
    let mut pi = vec![0.0; chain.len()];
    for (&i, &p) in class.iter().zip(&local) {
        pi[i] = p;
    }
    let residual = chain.residual(&pi);
    if residual > RESIDUAL_TOL {
        return Err(Error::StationaryResidual { residual });
    }
    let ns = chain.num_states;
    let mut marginal = vec![0.0; ns];
    for (k, p) in pi.iter().enumerate() {
        marginal[k % ns] += p;
    }
    Ok(JointStationary { num_input_states: chain.num_input_states, num_states: ns, pi, marginal, residual })
}

fn local_index(chain: &JointChain, class: &[usize]) -> Vec<usize> {
    let mut pos = vec![usize::MAX; chain.len()];
    for (k, &i) in class.iter().enumerate() {
        pos[i] = k;
    }
    pos
}

fn dense_solve(chain: &JointChain, class: &[usize]) -> Option<Vec<f64>> {
    let m = class.len();
    let pos = local_index(chain, class);
    // Rows of (Tᵀ − I); the last equation is replaced by Σ π = 1.
    let mut a = Matrix::zeros(m, m);
    for (k, &i) in class.iter().enumerate() {
        a[(k, k)] -= 1.0;
        for &(j, p) in &chain.edges[i] {
            a[(pos[j], k)] += p;
        }
    }
    for k in 0..m {
        a[(m - 1, k)] = 1.0;
    }
    let mut b = vec![0.0; m];
    b[m - 1] = 1.0;
    let mut pi = solve(&a, &b, 1e-14)?;
    for p in &mut pi {
        if *p < 0.0 && *p > -1e-14 {
            *p = 0.0;
        }
    }
    let sum: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= sum);
    Some(pi)
}

fn power_iteration(chain: &JointChain, class: &[usize]) -> Result<Vec<f64>> {
    let m = class.len();
    let pos = local_index(chain, class);
    let mut pi = vec![1.0 / m as f64; m];
    // Lazy chain (I + T)/2 has the same fixed point and is aperiodic.
    let mut residual = f64::INFINITY;
    for it in 0..POWER_MAX_ITER {
        let mut next = vec![0.0; m];
        for (k, &i) in class.iter().enumerate() {
            for &(j, p) in &chain.edges[i] {
                next[pos[j]] += pi[k] * p;
            }
        }
        residual = next.iter().zip(&pi).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max);
        if residual < RESIDUAL_TOL * 1e-2 {
            return Ok(next);
        }
        for (p, n) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + n);
        }
        if it % 64 == 0 {
            let s: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|p| *p /= s);
        }
    }
    Err(Error::NoConvergence { iterations: POWER_MAX_ITER, residual })
}

/// `C_μ = −Σ P(s) log₂ P(s)`
pub fn classical_memory_cost(js: &JointStationary) -> f64 {
    shannon_bits(&js.marginal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn junk_pair_uniform_input() {
        let s = fixtures::junk_pair();
        let input = InputStrategy::uniform_for(&s);
        let js = joint_stationary_distribution(&s, &input).unwrap();
        assert!((js.marginal[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((js.marginal[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!(js.residual < 1e-12);
        assert!((classical_memory_cost(&js) - 0.9182958340544896).abs() < 1e-12);
    }

    #[test]
    fn single_pair() {
        let s = fixtures::trivial();
        let js = joint_stationary_distribution(&s, &InputStrategy::uniform_for(&s)).unwrap();
        assert_eq!(js.pi, vec![1.0]);
        assert_eq!(classical_memory_cost(&js), 0.0);
    }

    #[test]
    fn reducible_chain_rejected() {
        // Two absorbing states.
        let spec = crate::StrategySpec {
            stimuli: vec!["0".into()],
            actions: vec!["0".into(), "1".into()],
            states: vec!["u".into(), "v".into()],
            transitions: vec![
                crate::TransitionSpec { state: "u".into(), stimulus: "0".into(), action: "0".into(), prob: 1.0, next: Some("u".into()) },
                crate::TransitionSpec { state: "v".into(), stimulus: "0".into(), action: "1".into(), prob: 1.0, next: Some("v".into()) },
            ],
        };
        let s = Strategy::from_spec(&spec).unwrap();
        let input = InputStrategy::uniform_for(&s);
        assert!(matches!(joint_stationary_distribution(&s, &input), Err(Error::ReducibleChain { classes: 2 })));
        let js = joint_stationary_from(&s, &input, 0, 1).unwrap();
        assert_eq!(js.marginal, vec![0.0, 1.0]);
    }

    #[test]
    fn power_iteration_agrees_with_dense() {
        let s = fixtures::three_state();
        let input = InputStrategy::uniform_for(&s);
        let chain = JointChain::new(&s, &input).unwrap();
        let class: Vec<usize> = (0..chain.len()).collect();
        let a = dense_solve(&chain, &class).unwrap();
        let b = power_iteration(&chain, &class).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn tarjan_orders_sinks_first() {
        let succ = vec![vec![1], vec![2], vec![1]];
        let comps = strongly_connected_components(&succ);
        assert_eq!(comps, vec![vec![1, 2], vec![0]]);
    }
}
