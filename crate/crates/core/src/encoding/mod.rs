//! Systematic quantum encoding of a strategy.
//!
//! The pipeline is: solve the substate overlap fixed point
//! ([`solve_overlap_system`]), realise memory and junk states with those
//! overlaps ([`states_from_gram`], [`build_junk_states`]), assemble the
//! policy unitary ([`build_policy_unitary`]) and measure the memory cost
//! ([`quantum_memory_cost`]). [`encode`] runs all of it.

mod states;
mod unitary;

pub use states::{build_junk_states, states_from_gram, GramMatrix, JunkGroup, JunkStateSet, MemoryStateSet};
pub use unitary::{
    build_policy_unitary, density_operator, encode, encode_with, quantum_memory_cost, unitarity_residual,
    verify_encoding_consistency,
    ConsistencyReport, Encoding, PolicyUnitary, RegisterLayout,
};

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::{Error, Result, Strategy};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Eigenvalues below `-PSD_TOL` make a Gram matrix unrealisable.
pub const PSD_TOL: f64 = 1e-10;
/// Relative eigenvalue threshold defining numerical rank.
pub const RANK_TOL: f64 = 1e-14;

/// Which overlap recursion defines the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Overlaps of future statistics over unbounded horizons.
    QInf,
    /// Baseline agent that writes the next causal state into the junk.
    Q1,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::QInf => "qinf",
            Variant::Q1 => "q1",
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qinf" | "q_inf" | "inf" => Ok(Variant::QInf),
            "q1" => Ok(Variant::Q1),
            _ => Err(Error::InvalidArgument { reason: alloc::format!("unknown variant `{s}`") }),
        }
    }
}

/// Per-stimulus substate overlaps `c^x` and their product `c = Π_x c^x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTable {
    pub variant: Variant,
    pub per_stimulus: Vec<Matrix>,
    pub assembled: Matrix,
    pub iterations: usize,
    /// Largest violation of the defining recursion at the returned table.
    pub residual: f64,
}

impl OverlapTable {
    /// Build from explicit parts without checking them. Useful for
    /// injecting faults into the consistency checks.
    pub fn from_parts(variant: Variant, per_stimulus: Vec<Matrix>, assembled: Matrix) -> Self {
        Self { variant, per_stimulus, assembled, iterations: 0, residual: f64::NAN }
    }

    pub fn num_states(&self) -> usize {
        self.assembled.rows()
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.assembled[(s, t)]
    }

    /// Junk overlap `d^z_{ss'}` for `z = (x, y)`. For the baseline variant the
    /// junk also carries the next state, adding `δ_{λ(z,s) λ(z,s')}`.
    pub fn junk_overlap(&self, strategy: &Strategy, x: usize, y: usize, s: usize, t: usize) -> f64 {
        let mut d = 1.0;
        for (xp, cx) in self.per_stimulus.iter().enumerate() {
            if xp != x {
                d *= cx[(s, t)];
            }
        }
        if self.variant == Variant::Q1 && strategy.next(s, x, y) != strategy.next(t, x, y) {
            d = 0.0;
        }
        d
    }
}

fn assemble(per_stimulus: &[Matrix], n: usize) -> Matrix {
    let mut c = Matrix::filled(n, n, 1.0);
    for cx in per_stimulus {
        for i in 0..n {
            for j in 0..n {
                c[(i, j)] *= cx[(i, j)];
            }
        }
    }
    c
}

/// One application of the overlap recursion to `c`, returning the new
/// table and the largest entrywise change.
fn recursion_step(strategy: &Strategy, variant: Variant, c: &[Matrix]) -> (Vec<Matrix>, f64) {
    let (ns, nx, ny) = (strategy.num_states(), strategy.num_stimuli(), strategy.num_actions());
    let prod = assemble(c, ns);
    let mut next = vec![Matrix::identity(ns); nx];
    let mut change: f64 = 0.0;
    for (x, cx) in next.iter_mut().enumerate() {
        for s in 0..ns {
            for t in (s + 1)..ns {
                let mut v = 0.0;
                for y in 0..ny {
                    let (p, q) = (strategy.prob(s, x, y), strategy.prob(t, x, y));
                    if p == 0.0 || q == 0.0 {
                        continue;
                    }
                    let a = strategy.next(s, x, y).expect("support");
                    let b = strategy.next(t, x, y).expect("support");
                    let tail = match variant {
                        Variant::QInf => prod[(a, b)],
                        Variant::Q1 => {
                            if a == b {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                    v += libm::sqrt(p * q) * tail;
                }
                cx[(s, t)] = v;
                cx[(t, s)] = v;
                change = change.max(libm::fabs(v - c[x][(s, t)]));
            }
        }
    }
    (next, change)
}

/// Solve `c^x_{ss'} = Σ_y √(P(y|x,s)P(y|x,s')) Π_{x'} c^{x'}_{λ(z,s)λ(z,s')}`
/// (or its baseline form with `δ_{λλ'}` in place of the product) by
/// iteration from `c ≡ 1`.
pub fn solve_overlap_system(strategy: &Strategy, variant: Variant, tol: f64, max_iter: usize) -> Result<OverlapTable> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument { reason: "tolerance must be positive".into() });
    }
    let (ns, nx) = (strategy.num_states(), strategy.num_stimuli());
    let mut c = vec![Matrix::filled(ns, ns, 1.0); nx];
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < max_iter {
        let (next, delta) = recursion_step(strategy, variant, &c);
        c = next;
        iterations += 1;
        change = delta;
        if delta < tol {
            break;
        }
    }
    // Polish past the tolerance while the step keeps shrinking, since
    // nearly parallel states amplify what is left in the table.
    if change < tol {
        while iterations < max_iter && change > 2.0 * f64::EPSILON {
            let (next, delta) = recursion_step(strategy, variant, &c);
            if delta >= change {
                break;
            }
            c = next;
            iterations += 1;
            change = delta;
        }
    }
    let (_, residual) = recursion_step(strategy, variant, &c);
    if change >= tol {
        return Err(Error::NoConvergence { iterations, residual });
    }
    let assembled = assemble(&c, ns);
    Ok(OverlapTable { variant, per_stimulus: c, assembled, iterations, residual })
}

/// [`solve_overlap_system`] with default tolerance and iteration cap.
pub fn solve_overlaps(strategy: &Strategy, variant: Variant) -> Result<OverlapTable> {
    solve_overlap_system(strategy, variant, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Largest violation of the recursion by an arbitrary table.
pub fn recursion_residual(strategy: &Strategy, table: &OverlapTable) -> f64 {
    let (_, residual) = recursion_step(strategy, table.variant, &table.per_stimulus);
    residual
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn junk_pair_orthogonal() {
        let s = fixtures::junk_pair();
        for v in [Variant::QInf, Variant::Q1] {
            let t = solve_overlaps(&s, v).unwrap();
            assert_eq!(t.get(0, 1), 0.0);
            assert_eq!(t.per_stimulus[0][(0, 1)], 1.0);
            assert!(t.residual < 1e-12);
        }
    }

    #[test]
    fn single_state_unit() {
        let t = solve_overlaps(&fixtures::trivial(), Variant::QInf).unwrap();
        assert_eq!(t.assembled, Matrix::filled(1, 1, 1.0));
    }

    #[test]
    fn three_state_below_bound() {
        let s = fixtures::three_state();
        let t = solve_overlaps(&s, Variant::QInf).unwrap();
        let bound = libm::sqrt(3.0) / 4.0;
        assert!(t.get(0, 1) >= 0.0 && t.get(0, 1) <= bound + 1e-12);
        assert!(t.get(1, 2) >= 0.0 && t.get(1, 2) <= bound + 1e-12);
        assert_eq!(t.get(0, 2), 0.0);
        assert!(t.residual < 1e-11);
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let s = fixtures::three_state();
        assert!(matches!(
            solve_overlap_system(&s, Variant::QInf, 1e-12, 1),
            Err(Error::NoConvergence { iterations: 1, .. })
        ));
    }
}
