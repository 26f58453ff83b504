//! Upper bounds on memory-state overlaps from the distinguishability of
//! future statistics, and a sufficient test for the necessity of junk.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{solve, Matrix};
use crate::stationary::strongly_connected_components;
use crate::{Error, Result, Strategy};

/// Default cap on stimulus assignments enumerated by the exact method.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;
/// Default maximal string length of the junk search.
pub const DEFAULT_JUNK_MAX_LEN: usize = 8;
const PIVOT_TOL: f64 = 1e-12;
const WITNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Iterative,
    Exact,
    Hybrid,
}

impl BoundMethod {
    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::Iterative => "iter",
            BoundMethod::Exact => "exact",
            BoundMethod::Hybrid => "hybrid",
        }
    }
}

impl core::str::FromStr for BoundMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iter" | "iterative" => Ok(BoundMethod::Iterative),
            "exact" => Ok(BoundMethod::Exact),
            "hybrid" => Ok(BoundMethod::Hybrid),
            _ => Err(Error::InvalidArgument { reason: alloc::format!("unknown bound method `{s}`") }),
        }
    }
}

/// Pairwise fidelity bounds `F_ss'`.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityBoundTable {
    pub method: BoundMethod,
    /// Depth `L`; `None` for the exact method.
    pub depth: Option<usize>,
    pub values: Matrix,
    /// Minimising stimulus per ordered pair `s * |S| + s'`; `None` on the
    /// diagonal and before any iteration.
    pub argmin: Vec<Option<usize>>,
    /// Hybrid only: the postulated system was singular and the iterative
    /// values were kept.
    pub singular_fallback: bool,
}

impl FidelityBoundTable {
    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.values[(s, t)]
    }

    pub fn argmin(&self, s: usize, t: usize) -> Option<usize> {
        self.argmin[s * self.values.rows() + t]
    }
}

/// `Σ_y √(P(y|x,s)P(y|x,t)) F_{λλ'}`
fn one_step(strategy: &Strategy, f: &Matrix, s: usize, t: usize, x: usize) -> f64 {
    let mut v = 0.0;
    for y in 0..strategy.num_actions() {
        let (p, q) = (strategy.prob(s, x, y), strategy.prob(t, x, y));
        if p > 0.0 && q > 0.0 {
            let (a, b) = (strategy.next(s, x, y).unwrap(), strategy.next(t, x, y).unwrap());
            v += libm::sqrt(p * q) * f[(a, b)];
        }
    }
    v
}

/// `F^(L+1)_ss' = min_x Σ_y √(P(y|x,s)P(y|x,s')) F^(L)_{λ(z,s)λ(z,s')}` from
/// `F^(0) = 1`.
pub fn fidelity_bound_iterative(strategy: &Strategy, depth: usize) -> FidelityBoundTable {
    let ns = strategy.num_states();
    let mut f = Matrix::filled(ns, ns, 1.0);
    let mut argmin = vec![None; ns * ns];
    for _ in 0..depth {
        let mut next = Matrix::identity(ns);
        for s in 0..ns {
            for t in (s + 1)..ns {
                let mut best = (f64::INFINITY, 0);
                for x in 0..strategy.num_stimuli() {
                    let v = one_step(strategy, &f, s, t, x);
                    if v < best.0 {
                        best = (v, x);
                    }
                }
                next[(s, t)] = best.0;
                next[(t, s)] = best.0;
                argmin[s * ns + t] = Some(best.1);
                argmin[t * ns + s] = Some(best.1);
            }
        }
        f = next;
    }
    FidelityBoundTable { method: BoundMethod::Iterative, depth: Some(depth), values: f, argmin, singular_fallback: false }
}

fn pairs(ns: usize) -> Vec<(usize, usize)> {
    (0..ns).flat_map(|s| ((s + 1)..ns).map(move |t| (s, t))).collect()
}

/// Unordered pair index, or `None` on the diagonal.
fn pair_index(ns: usize) -> impl Fn(usize, usize) -> Option<usize> {
    move |a: usize, b: usize| {
        if a == b {
            return None;
        }
        let (s, t) = if a < b { (a, b) } else { (b, a) };
        // Row-major upper triangle offset.
        Some(s * ns - s * (s + 1) / 2 + (t - s - 1))
    }
}

/// Solve `F = A_a F + b_a` restricted to the pairs in `scc` with the pairs
/// outside it fixed at `known`.
fn solve_postulate(
    strategy: &Strategy,
    plist: &[(usize, usize)],
    scc: &[usize],
    assignment: &[usize],
    known: &[f64],
) -> Option<Vec<f64>> {
    let ns = strategy.num_states();
    let idx = pair_index(ns);
    let m = scc.len();
    let mut local = BTreeMap::new();
    for (k, &p) in scc.iter().enumerate() {
        local.insert(p, k);
    }
    let mut a = Matrix::identity(m);
    let mut b = vec![0.0; m];
    for (k, &p) in scc.iter().enumerate() {
        let (s, t) = plist[p];
        let x = assignment[k];
        for y in 0..strategy.num_actions() {
            let (ps, pt) = (strategy.prob(s, x, y), strategy.prob(t, x, y));
            if ps == 0.0 || pt == 0.0 {
                continue;
            }
            let w = libm::sqrt(ps * pt);
            match idx(strategy.next(s, x, y).unwrap(), strategy.next(t, x, y).unwrap()) {
                None => b[k] += w,
                Some(q) => match local.get(&q) {
                    Some(&j) => a[(k, j)] -= w,
                    None => b[k] += w * known[q],
                },
            }
        }
    }
    // Fidelities live in [0, 1]; clip rounding from the solve.
    let clip = |v: f64| if v <= 0.0 { 0.0 } else { v.min(1.0) };
    solve(&a, &b, PIVOT_TOL).map(|x| x.into_iter().map(clip).collect())
}

/// Value iteration of the min-recursion on one component, used when every
/// postulate on it is singular (states never separated there).
fn iterate_component(strategy: &Strategy, plist: &[(usize, usize)], scc: &[usize], known: &mut [f64]) -> Vec<usize> {
    let ns = strategy.num_states();
    let mut f = Matrix::filled(ns, ns, 1.0);
    for (p, &(s, t)) in plist.iter().enumerate() {
        if !scc.contains(&p) {
            f[(s, t)] = known[p];
            f[(t, s)] = known[p];
        }
    }
    let mut choice = vec![0; scc.len()];
    for _ in 0..1_000_000 {
        let mut change: f64 = 0.0;
        for (k, &p) in scc.iter().enumerate() {
            let (s, t) = plist[p];
            let mut best = (f64::INFINITY, 0);
            for x in 0..strategy.num_stimuli() {
                let v = one_step(strategy, &f, s, t, x);
                if v < best.0 {
                    best = (v, x);
                }
            }
            change = change.max(libm::fabs(best.0 - f[(s, t)]));
            f[(s, t)] = best.0;
            f[(t, s)] = best.0;
            choice[k] = best.1;
        }
        if change < 1e-15 {
            break;
        }
    }
    for &p in scc {
        known[p] = f[plist[p]];
    }
    choice
}

/// Step to the next string in lexicographic order; `false` after the last.
fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Exact bound: the minimum over per-pair stimulus postulates of the
/// linear fixed point. Pairs are split into strongly connected components
/// of the successor graph and solved downstream first, so only
/// assignments within each component are enumerated.
pub fn fidelity_bound_exact(strategy: &Strategy, cap: u128) -> Result<FidelityBoundTable> {
    let ns = strategy.num_states();
    let nx = strategy.num_stimuli();
    let plist = pairs(ns);
    let idx = pair_index(ns);
    let succ: Vec<Vec<usize>> = plist
        .iter()
        .map(|&(s, t)| {
            let mut out = Vec::new();
            for x in 0..nx {
                for y in 0..strategy.num_actions() {
                    if strategy.prob(s, x, y) > 0.0 && strategy.prob(t, x, y) > 0.0 {
                        if let Some(q) = idx(strategy.next(s, x, y).unwrap(), strategy.next(t, x, y).unwrap()) {
                            if !out.contains(&q) {
                                out.push(q);
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    let comps = strongly_connected_components(&succ);
    let mut count: u128 = 0;
    for c in &comps {
        let n = (nx as u128).checked_pow(c.len() as u32).unwrap_or(u128::MAX);
        count = count.saturating_add(n);
    }
    if count > cap {
        return Err(Error::TooLarge { count, cap });
    }
    let mut known = vec![1.0; plist.len()];
    let mut chosen = vec![0usize; plist.len()];
    for scc in &comps {
        let m = scc.len();
        let mut best: Option<(Vec<f64>, Vec<usize>)> = None;
        let mut others: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
        let mut assignment = vec![0usize; m];
        loop {
            if let Some(sol) = solve_postulate(strategy, &plist, scc, &assignment, &known) {
                others.push((sol, assignment.clone()));
            }
            if !advance(&mut assignment, nx) {
                break;
            }
        }
        if others.is_empty() {
            let choice = iterate_component(strategy, &plist, scc, &mut known);
            for (&p, c) in scc.iter().zip(choice) {
                chosen[p] = c;
            }
            continue;
        }
        let mut min = vec![f64::INFINITY; m];
        for (sol, _) in &others {
            for (a, b) in min.iter_mut().zip(sol) {
                *a = a.min(*b);
            }
        }
        // Lexicographically first assignment attaining the minimum
        // everywhere; otherwise the first attaining it entry by entry.
        for (sol, asg) in &others {
            if sol.iter().zip(&min).all(|(a, b)| a - b <= 1e-13) {
                best = Some((sol.clone(), asg.clone()));
                break;
            }
        }
        match best {
            Some((_, asg)) => {
                for (&p, x) in scc.iter().zip(asg) {
                    chosen[p] = x;
                }
            }
            None => {
                for (k, &p) in scc.iter().enumerate() {
                    let (_, asg) = others.iter().find(|(sol, _)| sol[k] - min[k] <= 1e-13).expect("minimum attained");
                    chosen[p] = asg[k];
                }
            }
        }
        for (&p, v) in scc.iter().zip(min) {
            known[p] = v;
        }
    }
    let mut values = Matrix::identity(ns);
    let mut argmin = vec![None; ns * ns];
    for (p, &(s, t)) in plist.iter().enumerate() {
        values[(s, t)] = known[p];
        values[(t, s)] = known[p];
        argmin[s * ns + t] = Some(chosen[p]);
        argmin[t * ns + s] = Some(chosen[p]);
    }
    Ok(FidelityBoundTable { method: BoundMethod::Exact, depth: None, values, argmin, singular_fallback: false })
}

/// Iterate to depth `L`, then solve the linear system for the argmins found
/// there. A singular system keeps the iterative values and sets
/// `singular_fallback`.
pub fn fidelity_bound_hybrid(strategy: &Strategy, depth: usize) -> FidelityBoundTable {
    let ns = strategy.num_states();
    let iter = fidelity_bound_iterative(strategy, depth.max(1));
    let plist = pairs(ns);
    let all: Vec<usize> = (0..plist.len()).collect();
    let assignment: Vec<usize> = plist.iter().map(|&(s, t)| iter.argmin(s, t).unwrap_or(0)).collect();
    match solve_postulate(strategy, &plist, &all, &assignment, &[]) {
        Some(sol) => {
            let mut values = Matrix::identity(ns);
            for (p, &(s, t)) in plist.iter().enumerate() {
                values[(s, t)] = sol[p];
                values[(t, s)] = sol[p];
            }
            FidelityBoundTable {
                method: BoundMethod::Hybrid,
                depth: Some(depth),
                values,
                argmin: iter.argmin,
                singular_fallback: false,
            }
        }
        None => FidelityBoundTable { method: BoundMethod::Hybrid, depth: Some(depth), singular_fallback: true, ..iter },
    }
}

/// Pair of strings certifying that junk is required.
#[derive(Debug, Clone, PartialEq)]
pub struct JunkWitness {
    pub s: usize,
    pub t: usize,
    pub stimuli: Vec<usize>,
    pub actions: Vec<usize>,
    pub second_stimuli: Vec<usize>,
    /// `p + p' − 1`
    pub alpha: f64,
    pub p: f64,
    pub p_prime: f64,
    /// Future fidelity of the pair under `second_stimuli`.
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JunkVerdict {
    Required(JunkWitness),
    /// The sufficient condition was not met up to the searched length.
    Inconclusive { max_len: usize },
}

/// Fidelity of the futures of `s` and `t` under a fixed stimulus string.
pub fn string_fidelity(strategy: &Strategy, s: usize, t: usize, xs: &[usize]) -> f64 {
    if xs.is_empty() || s == t {
        return 1.0;
    }
    let x = xs[0];
    let mut v = 0.0;
    for y in 0..strategy.num_actions() {
        let (p, q) = (strategy.prob(s, x, y), strategy.prob(t, x, y));
        if p > 0.0 && q > 0.0 {
            let (a, b) = (strategy.next(s, x, y).unwrap(), strategy.next(t, x, y).unwrap());
            v += libm::sqrt(p * q) * string_fidelity(strategy, a, b, &xs[1..]);
        }
    }
    v
}

struct Search<'a> {
    strategy: &'a Strategy,
    len: usize,
    s: usize,
    t: usize,
    xs: Vec<usize>,
    ys: Vec<usize>,
    fidelities: Option<Vec<f64>>,
}

impl Search<'_> {
    fn fidelities(&mut self) -> &[f64] {
        if self.fidelities.is_none() {
            let nx = self.strategy.num_stimuli();
            let total = nx.pow(self.len as u32);
            let v = (0..total)
                .map(|i| {
                    let xs = crate::strategy::decode_string(i, nx, self.len);
                    string_fidelity(self.strategy, self.s, self.t, &xs)
                })
                .collect();
            self.fidelities = Some(v);
        }
        self.fidelities.as_deref().unwrap()
    }

    fn dfs(&mut self, a: usize, b: usize, p: f64, q: f64) -> Option<JunkWitness> {
        if p + q < 1.0 - WITNESS_TOL {
            return None;
        }
        if self.xs.len() == self.len {
            let alpha = p + q - 1.0;
            if a != b || alpha <= WITNESS_TOL {
                return None;
            }
            let nx = self.strategy.num_stimuli();
            let len = self.len;
            let hit = self.fidelities().iter().position(|&f| f <= alpha / 2.0 + WITNESS_TOL)?;
            let fidelity = self.fidelities()[hit];
            return Some(JunkWitness {
                s: self.s,
                t: self.t,
                stimuli: self.xs.clone(),
                actions: self.ys.clone(),
                second_stimuli: crate::strategy::decode_string(hit, nx, len),
                alpha,
                p,
                p_prime: q,
                fidelity,
            });
        }
        for x in 0..self.strategy.num_stimuli() {
            for y in 0..self.strategy.num_actions() {
                let (pa, pb) = (self.strategy.prob(a, x, y), self.strategy.prob(b, x, y));
                if pa == 0.0 || pb == 0.0 {
                    continue;
                }
                self.xs.push(x);
                self.ys.push(y);
                let found = self.dfs(
                    self.strategy.next(a, x, y).unwrap(),
                    self.strategy.next(b, x, y).unwrap(),
                    p * pa,
                    q * pb,
                );
                self.xs.pop();
                self.ys.pop();
                if found.is_some() {
                    return found;
                }
            }
        }
        None
    }
}

/// Search lengths `1..=max_len`, then state pairs, then stimulus–action
/// strings in lexicographic order for a witness that junk is required.
pub fn junk_necessity_check(strategy: &Strategy, max_len: usize) -> JunkVerdict {
    let ns = strategy.num_states();
    for len in 1..=max_len {
        for (s, t) in pairs(ns) {
            let mut search =
                Search { strategy, len, s, t, xs: Vec::with_capacity(len), ys: Vec::with_capacity(len), fidelities: None };
            if let Some(w) = search.dfs(s, t, 1.0, 1.0) {
                return JunkVerdict::Required(w);
            }
        }
    }
    JunkVerdict::Inconclusive { max_len }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const Q: f64 = 0.4330127018922193; // √3/4

    #[test]
    fn junk_pair_bounds() {
        let s = fixtures::junk_pair();
        assert_eq!(fidelity_bound_iterative(&s, 1).get(0, 1), 0.0);
        assert_eq!(fidelity_bound_iterative(&s, 0).values, Matrix::filled(2, 2, 1.0));
        assert_eq!(fidelity_bound_exact(&s, DEFAULT_ENUMERATION_CAP).unwrap().get(0, 1), 0.0);
        assert_eq!(fidelity_bound_hybrid(&s, 1).get(0, 1), 0.0);
    }

    #[test]
    fn three_state_bounds() {
        let s = fixtures::three_state();
        let ex = fidelity_bound_exact(&s, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((ex.get(0, 1) - Q).abs() < 1e-12);
        assert!((ex.get(1, 2) - Q).abs() < 1e-12);
        assert!(ex.get(0, 2).abs() < 1e-12);
        let it = fidelity_bound_iterative(&s, 30);
        assert!(it.values.max_abs_diff(&ex.values) < 1e-6);
        let hy = fidelity_bound_hybrid(&s, 2);
        assert!(hy.values.max_abs_diff(&ex.values) < 1e-12);
    }

    #[test]
    fn cap_enforced() {
        let s = fixtures::three_state();
        assert!(matches!(fidelity_bound_exact(&s, 1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn junk_pair_witness() {
        let s = fixtures::junk_pair();
        match junk_necessity_check(&s, DEFAULT_JUNK_MAX_LEN) {
            JunkVerdict::Required(w) => {
                assert_eq!((w.s, w.t), (0, 1));
                assert_eq!(w.stimuli, vec![0]);
                assert_eq!(w.actions, vec![0]);
                assert_eq!(w.second_stimuli, vec![1]);
                assert_eq!(w.alpha, 1.0);
                assert_eq!(w.fidelity, 0.0);
            }
            v => panic!("expected witness, got {v:?}"),
        }
    }

    #[test]
    fn trivial_inconclusive() {
        assert_eq!(junk_necessity_check(&fixtures::trivial(), 8), JunkVerdict::Inconclusive { max_len: 8 });
    }

    #[test]
    fn pair_index_is_dense() {
        let idx = pair_index(4);
        let got: Vec<usize> = pairs(4).iter().map(|&(s, t)| idx(t, s).unwrap()).collect();
        assert_eq!(got, (0..6).collect::<Vec<_>>());
    }
}
