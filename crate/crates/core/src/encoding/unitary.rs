//! Policy unitary, consistency checks and memory cost.

use alloc::vec;
use alloc::vec::Vec;

use super::{build_junk_states, solve_overlaps, states_from_gram, GramMatrix, JunkStateSet, MemoryStateSet};
use super::{OverlapTable, Variant};
use crate::entropy::weighted_gram_entropy_bits;
use crate::linalg::{axpy, dot, norm, Matrix};
use crate::{Error, Result, Strategy};

/// Domain and image Grams must agree to this accuracy.
pub const GRAM_MATCH_TOL: f64 = 1e-8;
/// Residual norm below which a vector counts as dependent during
/// orthonormalisation.
const DEPENDENT_TOL: f64 = 1e-7;

/// Ordering of the four registers: memory ⊗ input ⊗ output ⊗ junk, with
/// the junk index varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub memory_dim: usize,
    pub num_stimuli: usize,
    pub num_actions: usize,
    pub junk_dim: usize,
}

impl RegisterLayout {
    pub fn total_dim(&self) -> usize {
        self.memory_dim * self.num_stimuli * self.num_actions * self.junk_dim
    }

    #[inline]
    pub fn index(&self, m: usize, x: usize, y: usize, j: usize) -> usize {
        ((m * self.num_stimuli + x) * self.num_actions + y) * self.junk_dim + j
    }

    /// Dimension of one input sector.
    pub fn sector_dim(&self) -> usize {
        self.memory_dim * self.num_actions * self.junk_dim
    }

    /// Global index of local coordinate `k` of sector `x`.
    pub fn sector_index(&self, x: usize, k: usize) -> usize {
        let j = k % self.junk_dim;
        let y = (k / self.junk_dim) % self.num_actions;
        let m = k / (self.junk_dim * self.num_actions);
        self.index(m, x, y, j)
    }

    /// `|a⟩|x⟩|0⟩|0⟩` for a memory vector `a`.
    pub fn blank(&self, memory: &[f64], x: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.total_dim()];
        for (m, a) in memory.iter().enumerate() {
            v[self.index(m, x, 0, 0)] = *a;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyUnitary {
    pub layout: RegisterLayout,
    pub matrix: Matrix,
    /// `‖UᵀU − I‖_max`
    pub unitarity_residual: f64,
    /// `max_{s,x} ‖U v_{s,x} − w_{s,x}‖`
    pub action_residual: f64,
}

impl PolicyUnitary {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(v)
    }
}

/// `Σ_y √P(y|x,s) |σ_λ(z,s)⟩|x⟩|y⟩|ψ(z,s)⟩`
pub(crate) fn image_vector(
    strategy: &Strategy,
    states: &MemoryStateSet,
    junk: &JunkStateSet,
    layout: &RegisterLayout,
    s: usize,
    x: usize,
) -> Vec<f64> {
    let mut w = vec![0.0; layout.total_dim()];
    for (y, p, next) in strategy.support(s, x) {
        let amp = libm::sqrt(p);
        let psi = junk.get(x, y, s).expect("junk defined on support");
        for (m, a) in states.vectors[next].iter().enumerate() {
            for (j, b) in psi.iter().enumerate() {
                w[layout.index(m, x, y, j)] += amp * a * b;
            }
        }
    }
    w
}

/// Assemble a real orthogonal `U` with `U v_{s,x} = w_{s,x}` for every
/// state and stimulus, acting block-diagonally on input sectors.
pub fn build_policy_unitary(strategy: &Strategy, states: &MemoryStateSet, junk: &JunkStateSet) -> Result<PolicyUnitary> {
    let layout = RegisterLayout {
        memory_dim: states.dim.max(1),
        num_stimuli: strategy.num_stimuli(),
        num_actions: strategy.num_actions(),
        junk_dim: junk.dim.max(1),
    };
    if states.len() != strategy.num_states() {
        return Err(Error::InvalidArgument { reason: "one memory state per causal state required".into() });
    }
    let padded: Vec<Vec<f64>> = states
        .vectors
        .iter()
        .map(|v| {
            let mut p = v.clone();
            p.resize(layout.memory_dim, 0.0);
            p
        })
        .collect();
    let states = MemoryStateSet { dim: layout.memory_dim, vectors: padded };
    let total = layout.total_dim();
    let d = layout.sector_dim();
    let ns = strategy.num_states();
    let mut u = Matrix::zeros(total, total);
    let mut action_residual: f64 = 0.0;
    for x in 0..layout.num_stimuli {
        let to_local = |v: &[f64]| -> Vec<f64> { (0..d).map(|k| v[layout.sector_index(x, k)]).collect() };
        let domain: Vec<Vec<f64>> = (0..ns).map(|s| to_local(&layout.blank(&states.vectors[s], x))).collect();
        let image: Vec<Vec<f64>> =
            (0..ns).map(|s| to_local(&image_vector(strategy, &states, junk, &layout, s, x))).collect();
        let mut deviation: f64 = 0.0;
        for s in 0..ns {
            for t in s..ns {
                deviation = deviation.max(libm::fabs(dot(&domain[s], &domain[t]) - dot(&image[s], &image[t])));
            }
        }
        if deviation > GRAM_MATCH_TOL {
            return Err(Error::GramMismatch { deviation });
        }
        let (mut e, mut f) = matched_gram_schmidt(&domain, &image);
        complete_basis(&mut e, d);
        complete_basis(&mut f, d);
        for (ek, fk) in e.iter().zip(&f) {
            for (a, &fa) in fk.iter().enumerate() {
                if fa == 0.0 {
                    continue;
                }
                let row = layout.sector_index(x, a);
                for (b, &eb) in ek.iter().enumerate() {
                    u[(row, layout.sector_index(x, b))] += fa * eb;
                }
            }
        }
        for s in 0..ns {
            let v = layout.blank(&states.vectors[s], x);
            let w = image_vector(strategy, &states, junk, &layout, s, x);
            let uv = u.mul_vec(&v);
            let r: f64 = uv.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
            action_residual = action_residual.max(libm::sqrt(r));
        }
    }
    let unitarity_residual = unitarity_residual(&u);
    Ok(PolicyUnitary { layout, matrix: u, unitarity_residual, action_residual })
}

/// `‖UᵀU − I‖_max`
pub fn unitarity_residual(u: &Matrix) -> f64 {
    let n = u.rows();
    let mut worst: f64 = 0.0;
    let cols: Vec<Vec<f64>> = (0..n).map(|j| u.column(j)).collect();
    for i in 0..n {
        for j in i..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max(libm::fabs(dot(&cols[i], &cols[j]) - target));
        }
    }
    worst
}

/// Orthonormalise `domain` by modified Gram–Schmidt and apply identical
/// coefficients to `image`. Equal Gram matrices make the image family
/// orthonormal too, up to a final reprojection.
fn matched_gram_schmidt(domain: &[Vec<f64>], image: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut e: Vec<Vec<f64>> = Vec::new();
    let mut f: Vec<Vec<f64>> = Vec::new();
    for (a0, b0) in domain.iter().zip(image) {
        let (mut a, mut b) = (a0.clone(), b0.clone());
        for _pass in 0..2 {
            for (ek, fk) in e.iter().zip(&f) {
                let c = dot(ek, &a);
                axpy(-c, ek, &mut a);
                axpy(-c, fk, &mut b);
            }
        }
        let na = norm(&a);
        if na < DEPENDENT_TOL {
            continue;
        }
        a.iter_mut().for_each(|v| *v /= na);
        b.iter_mut().for_each(|v| *v /= na);
        // Rounding in the overlap table is amplified by `1/na`; project the
        // image onto the orthogonal complement again so `f` stays orthonormal.
        for fk in &f {
            let c = dot(fk, &b);
            axpy(-c, fk, &mut b);
        }
        let nb = norm(&b);
        if nb > 0.0 {
            b.iter_mut().for_each(|v| *v /= nb);
        }
        e.push(a);
        f.push(b);
    }
    (e, f)
}

/// Extend an orthonormal family to a basis of `R^d`, drawing candidates
/// from the standard basis with the largest remaining component first.
fn complete_basis(basis: &mut Vec<Vec<f64>>, d: usize) {
    let mut residual: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut c = vec![0.0; d];
            c[i] = 1.0;
            for q in basis.iter() {
                axpy(-q[i], q, &mut c);
            }
            c
        })
        .collect();
    while basis.len() < d {
        let (best, _) = residual
            .iter()
            .enumerate()
            .map(|(i, r)| (i, dot(r, r)))
            .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        let mut v = residual[best].clone();
        for q in basis.iter() {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|a| *a /= nv);
        for r in residual.iter_mut() {
            let c = dot(&v, r);
            axpy(-c, &v, r);
        }
        basis.push(v);
    }
}

/// Residuals of the overlap consistency conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Per stimulus: `max_{s,s'} |c_ss' − Σ_y √(PP') c_λλ' d^z_ss'|` from the table.
    pub per_stimulus: Vec<f64>,
    pub max_residual: f64,
    /// `max |⟨σ_s|σ_s'⟩ − c_ss'|`
    pub state_residual: f64,
    /// `max |⟨ψ(z,s)|ψ(z,s')⟩ − d^z_ss'|` within groups.
    pub junk_residual: f64,
    /// Per stimulus condition re-evaluated from the realised vectors.
    pub vector_residual: f64,
}

pub fn verify_encoding_consistency(
    strategy: &Strategy,
    overlaps: &OverlapTable,
    states: &MemoryStateSet,
    junk: &JunkStateSet,
) -> ConsistencyReport {
    let (ns, nx, ny) = (strategy.num_states(), strategy.num_stimuli(), strategy.num_actions());
    let c = &overlaps.assembled;
    let mut per_stimulus = vec![0.0f64; nx];
    let mut vector_residual: f64 = 0.0;
    for x in 0..nx {
        for s in 0..ns {
            for t in s..ns {
                let mut rhs = 0.0;
                let mut rhs_vec = 0.0;
                for y in 0..ny {
                    let (p, q) = (strategy.prob(s, x, y), strategy.prob(t, x, y));
                    if p == 0.0 || q == 0.0 {
                        continue;
                    }
                    let (a, b) = (strategy.next(s, x, y).unwrap(), strategy.next(t, x, y).unwrap());
                    let w = libm::sqrt(p * q);
                    rhs += w * c[(a, b)] * overlaps.junk_overlap(strategy, x, y, s, t);
                    let jj = dot(junk.get(x, y, s).unwrap(), junk.get(x, y, t).unwrap());
                    rhs_vec += w * dot(&states.vectors[a], &states.vectors[b]) * jj;
                }
                per_stimulus[x] = per_stimulus[x].max(libm::fabs(c[(s, t)] - rhs));
                let lhs_vec = dot(&states.vectors[s], &states.vectors[t]);
                vector_residual = vector_residual.max(libm::fabs(lhs_vec - rhs_vec));
            }
        }
    }
    let state_residual = states.gram().max_abs_diff(c);
    let mut junk_residual: f64 = 0.0;
    for g in &junk.groups {
        for (i, &s) in g.members.iter().enumerate() {
            for (k, &t) in g.members.iter().enumerate() {
                let got = dot(junk.get(g.stimulus, g.action, s).unwrap(), junk.get(g.stimulus, g.action, t).unwrap());
                junk_residual = junk_residual.max(libm::fabs(got - g.overlaps[(i, k)]));
            }
        }
    }
    let max_residual = per_stimulus.iter().copied().fold(0.0, f64::max);
    ConsistencyReport { per_stimulus, max_residual, state_residual, junk_residual, vector_residual }
}

/// `Σ_s P(s) |σ_s⟩⟨σ_s|`
pub fn density_operator(states: &MemoryStateSet, p: &[f64]) -> Matrix {
    let r = states.dim;
    let mut rho = Matrix::zeros(r, r);
    for (v, &w) in states.vectors.iter().zip(p) {
        for i in 0..r {
            for j in 0..r {
                rho[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    rho
}

/// von Neumann entropy of the memory ensemble, via the weighted Gram matrix.
pub fn quantum_memory_cost(states: &MemoryStateSet, p: &[f64]) -> Result<f64> {
    if p.len() != states.len() {
        return Err(Error::InvalidArgument { reason: "distribution length differs from state count".into() });
    }
    weighted_gram_entropy_bits(states.gram(), p)
}

/// Every artefact of the encoding pipeline.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub variant: Variant,
    pub overlaps: OverlapTable,
    pub states: MemoryStateSet,
    pub junk: JunkStateSet,
    pub unitary: PolicyUnitary,
    pub consistency: ConsistencyReport,
}

/// Run the full pipeline on a strategy.
pub fn encode(strategy: &Strategy, variant: Variant) -> Result<Encoding> {
    let overlaps = solve_overlaps(strategy, variant)?;
    encode_with(strategy, overlaps)
}

/// Pipeline from an already solved (or supplied) overlap table.
pub fn encode_with(strategy: &Strategy, overlaps: OverlapTable) -> Result<Encoding> {
    let states = states_from_gram(&GramMatrix::new(overlaps.assembled.clone())?)?;
    let junk = build_junk_states(strategy, &overlaps)?;
    let consistency = verify_encoding_consistency(strategy, &overlaps, &states, &junk);
    let unitary = build_policy_unitary(strategy, &states, &junk)?;
    Ok(Encoding { variant: overlaps.variant, overlaps, states, junk, unitary, consistency })
}
