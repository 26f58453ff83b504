//! Shannon and von Neumann entropies in bits.

use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Eigenvalues in `[-EIGEN_CLIP, 0)` are treated as zero.
pub const EIGEN_CLIP: f64 = 1e-12;

/// `-Σ p log2 p`, with `0 log 0 = 0`.
pub fn shannon_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * libm::log2(x)).sum()
}

/// Entropy of a spectrum, clipping tiny negative eigenvalues.
pub fn spectrum_entropy_bits(eigenvalues: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &l in eigenvalues {
        if l < -EIGEN_CLIP {
            return Err(Error::NegativeEigenvalue { eigenvalue: l });
        }
        if l > 0.0 {
            h -= l * libm::log2(l);
        }
    }
    Ok(h.max(0.0))
}

/// von Neumann entropy of a symmetric positive semidefinite operator with
/// unit trace.
pub fn von_neumann_bits(rho: Matrix) -> Result<f64> {
    let trace = rho.trace();
    if libm::fabs(trace - 1.0) > 1e-10 {
        return Err(Error::TraceMismatch { trace });
    }
    spectrum_entropy_bits(&linalg::symmetric_eigenvalues(rho)?)
}

/// Weighted Gram matrix `√(P(s)P(s')) c_ss'`, in place on `overlaps`.
pub fn weight_gram(overlaps: &mut Matrix, p: &[f64]) {
    let n = overlaps.rows();
    assert_eq!(n, p.len());
    let sq: alloc::vec::Vec<f64> = p.iter().map(|x| libm::sqrt(x.max(0.0))).collect();
    for i in 0..n {
        let si = sq[i];
        for (j, v) in overlaps.row_mut(i).iter_mut().enumerate() {
            *v *= si * sq[j];
        }
    }
}

/// Memory cost of pure states with overlaps `c` occupied with probabilities
/// `p`: the entropy of the weighted Gram matrix, which shares its nonzero
/// spectrum with `Σ p_s |σ_s><σ_s|`.
pub fn weighted_gram_entropy_bits(mut overlaps: Matrix, p: &[f64]) -> Result<f64> {
    weight_gram(&mut overlaps, p);
    von_neumann_bits(overlaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn shannon_examples() {
        assert!((shannon_bits(&[2.0 / 3.0, 1.0 / 3.0]) - 0.918_295_834_054_489_6).abs() < 1e-12);
        assert_eq!(shannon_bits(&[1.0]), 0.0);
        assert!((shannon_bits(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert_eq!(shannon_bits(&[0.0, 1.0]), 0.0);
    }

    #[test]
    fn identical_states_cost_nothing() {
        let c = Matrix::filled(2, 2, 1.0);
        let h = weighted_gram_entropy_bits(c, &[0.5, 0.5]).unwrap();
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn orthogonal_states_reduce_to_shannon() {
        let h = weighted_gram_entropy_bits(Matrix::identity(2), &[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((h - shannon_bits(&[2.0 / 3.0, 1.0 / 3.0])).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_trace_and_negative_spectrum() {
        assert!(matches!(
            von_neumann_bits(Matrix::identity(2)),
            Err(Error::TraceMismatch { .. })
        ));
        let m = Matrix::from_rows(2, 2, vec![1.5, 0.0, 0.0, -0.5]);
        assert!(matches!(von_neumann_bits(m), Err(Error::NegativeEigenvalue { .. })));
    }
}
