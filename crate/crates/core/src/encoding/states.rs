//! Memory and junk states realised from their Gram matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use super::{OverlapTable, PSD_TOL, RANK_TOL};
use crate::linalg::{self, cholesky, symmetric_eigen, Matrix, SymmetricEigen};
use crate::{Error, Result, Strategy};

/// Symmetric Gram matrix with a lazily computed eigendecomposition.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    matrix: Matrix,
    eigen: OnceCell<SymmetricEigen>,
}

impl GramMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument { reason: "Gram matrix must be square".into() });
        }
        if matrix.asymmetry() > 1e-12 {
            return Err(Error::InvalidArgument { reason: "Gram matrix must be symmetric".into() });
        }
        Ok(Self { matrix, eigen: OnceCell::new() })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn eigen(&self) -> Result<&SymmetricEigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = symmetric_eigen(&self.matrix)?;
        Ok(self.eigen.get_or_init(|| e))
    }

    /// Number of eigenvalues above `RANK_TOL` times the largest.
    pub fn rank(&self) -> Result<usize> {
        let e = self.eigen()?;
        let top = e.values.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Ok(0);
        }
        Ok(e.values.iter().filter(|&&l| l > RANK_TOL * top).count())
    }
}

/// Unit vectors `|σ_s⟩` in a space of dimension equal to the Gram rank.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryStateSet {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl MemoryStateSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn gram(&self) -> Matrix {
        Matrix::gram_of(&self.vectors)
    }
}

/// Realise unit vectors whose pairwise inner products reproduce `g`.
/// Full-rank Grams use their Cholesky factor; rank-deficient ones the
/// scaled leading eigenvectors.
pub fn states_from_gram(g: &GramMatrix) -> Result<MemoryStateSet> {
    let n = g.dim();
    if n == 0 {
        return Ok(MemoryStateSet { dim: 0, vectors: Vec::new() });
    }
    let e = g.eigen()?;
    let lowest = *e.values.last().expect("nonempty");
    if lowest < -PSD_TOL {
        return Err(Error::NotPsd { eigenvalue: lowest });
    }
    let r = g.rank()?;
    let mut vectors: Vec<Vec<f64>> = if r == n {
        match cholesky(g.matrix()) {
            Some(l) => (0..n).map(|i| l.row(i).to_vec()).collect(),
            None => eigen_vectors(e, n, r),
        }
    } else {
        eigen_vectors(e, n, r)
    };
    for v in &mut vectors {
        let nv = linalg::norm(v);
        if nv > 0.0 {
            v.iter_mut().for_each(|a| *a /= nv);
        }
    }
    Ok(MemoryStateSet { dim: r, vectors })
}

fn eigen_vectors(e: &SymmetricEigen, n: usize, r: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..r).map(|k| libm::sqrt(e.values[k].max(0.0)) * e.vectors[(i, k)]).collect())
        .collect()
}

/// States sharing one `z = (x, y)`: those that emit `y` on `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JunkGroup {
    pub stimulus: usize,
    pub action: usize,
    pub members: Vec<usize>,
    pub overlaps: Matrix,
    pub rank: usize,
}

/// Junk vectors `|ψ(z,s)⟩`, each group embedded independently into a
/// common space of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct JunkStateSet {
    pub dim: usize,
    pub num_stimuli: usize,
    pub num_actions: usize,
    pub groups: Vec<JunkGroup>,
    /// Indexed `(s * |X| + x) * |Y| + y`; `None` off the emission support.
    pub vectors: Vec<Option<Vec<f64>>>,
}

impl JunkStateSet {
    pub fn get(&self, x: usize, y: usize, s: usize) -> Option<&[f64]> {
        self.vectors[(s * self.num_stimuli + x) * self.num_actions + y].as_deref()
    }
}

/// Build junk states with overlaps `d^z_{ss'}` inside each `z` group.
pub fn build_junk_states(strategy: &Strategy, overlaps: &OverlapTable) -> Result<JunkStateSet> {
    let (ns, nx, ny) = (strategy.num_states(), strategy.num_stimuli(), strategy.num_actions());
    let mut groups = Vec::new();
    let mut embedded = Vec::new();
    for x in 0..nx {
        for y in 0..ny {
            let members: Vec<usize> = (0..ns).filter(|&s| strategy.prob(s, x, y) > 0.0).collect();
            if members.is_empty() {
                continue;
            }
            let m = members.len();
            let d = Matrix::from_fn(m, m, |i, j| {
                if i == j {
                    1.0
                } else {
                    overlaps.junk_overlap(strategy, x, y, members[i], members[j])
                }
            });
            let set = states_from_gram(&GramMatrix::new(d.clone())?)?;
            groups.push(JunkGroup { stimulus: x, action: y, members, overlaps: d, rank: set.dim });
            embedded.push(set);
        }
    }
    let dim = groups.iter().map(|g| g.rank).max().unwrap_or(0).max(1);
    let mut vectors = vec![None; ns * nx * ny];
    for (g, set) in groups.iter().zip(embedded) {
        for (&s, v) in g.members.iter().zip(set.vectors) {
            let mut padded = vec![0.0; dim];
            if v.is_empty() {
                padded[0] = 1.0;
            } else {
                padded[..v.len()].copy_from_slice(&v);
            }
            vectors[(s * nx + g.stimulus) * ny + g.action] = Some(padded);
        }
    }
    Ok(JunkStateSet { dim, num_stimuli: nx, num_actions: ny, groups, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{solve_overlaps, Variant};
    use crate::fixtures;

    fn realise(m: Matrix) -> MemoryStateSet {
        states_from_gram(&GramMatrix::new(m).unwrap()).unwrap()
    }

    #[test]
    fn identity_gives_orthonormal_pair() {
        let set = realise(Matrix::identity(2));
        assert_eq!(set.dim, 2);
        assert!(set.gram().max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn all_ones_is_rank_one() {
        let set = realise(Matrix::filled(3, 3, 1.0));
        assert_eq!(set.dim, 1);
        for v in &set.vectors {
            assert!((v[0].abs() - 1.0).abs() < 1e-12);
            assert!((v[0] - set.vectors[0][0]).abs() < 1e-12);
        }
    }

    #[test]
    fn two_state_cholesky() {
        let c = libm::sqrt(3.0) / 2.0;
        let set = realise(Matrix::from_rows(2, 2, vec![1.0, c, c, 1.0]));
        assert_eq!(set.vectors[0], vec![1.0, 0.0]);
        assert!((set.vectors[1][0] - c).abs() < 1e-12);
        assert!((set.vectors[1][1] - 0.5).abs() < 1e-12);
        assert!((linalg::dot(&set.vectors[0], &set.vectors[1]) - c).abs() < 1e-12);
    }

    #[test]
    fn indefinite_rejected() {
        let g = GramMatrix::new(Matrix::from_rows(2, 2, vec![1.0, 1.5, 1.5, 1.0])).unwrap();
        assert!(matches!(states_from_gram(&g), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn junk_pair_junk_orthogonal() {
        let s = fixtures::junk_pair();
        for v in [Variant::QInf, Variant::Q1] {
            let t = solve_overlaps(&s, v).unwrap();
            let junk = build_junk_states(&s, &t).unwrap();
            let a = junk.get(0, 0, 0).unwrap();
            let b = junk.get(0, 0, 1).unwrap();
            assert!(linalg::dot(a, b).abs() < 1e-12);
            assert_eq!(junk.dim, 2);
        }
    }

    #[test]
    fn single_stimulus_junk_trivial() {
        let s = fixtures::trivial();
        let t = solve_overlaps(&s, Variant::QInf).unwrap();
        let junk = build_junk_states(&s, &t).unwrap();
        assert_eq!(junk.dim, 1);
        assert_eq!(junk.get(0, 0, 0), Some(&[1.0][..]));
    }
}
