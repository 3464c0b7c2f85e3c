//! Shared dense linear-algebra helpers: norms, eigenvalues, numerical rank,
//! and eigenvalue multiset matching.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Induced infinity norm: maximum absolute row sum.
pub fn inf_norm_mat(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        let mut sum = 0.0;
        for j in 0..m.ncols() {
            sum += m[(i, j)].abs();
        }
        worst = worst.max(sum);
    }
    worst
}

/// Vector infinity norm.
pub fn inf_norm_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

/// All eigenvalues of a real square matrix, with multiplicity, sorted by
/// (real, imaginary) part for deterministic output.
///
/// The QR iteration has no exceptional shifts and can stagnate on highly
/// structured matrices (block-decoupled formations produce exactly those),
/// so non-convergence falls back to eigenvalue-preserving similarities:
/// first balancing, then a fixed orthogonal change of basis that breaks the
/// structural symmetry. Every path is deterministic. Remaining
/// non-convergence is surfaced as a numerical failure carrying a condition
/// estimate of the matrix.
pub fn complex_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let dim = m.nrows();
    if dim != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }

    let schur = schur_ladder(m)
        .or_else(|| {
            let mut balanced = m.clone();
            nalgebra::linalg::balancing::balance_parlett_reinsch(&mut balanced);
            schur_ladder(&balanced)
        })
        .or_else(|| {
            let q = fixed_orthogonal(dim);
            schur_ladder(&(q.transpose() * m * &q))
        })
        .ok_or_else(|| {
            Error::NumericalFailure(format!(
                "Schur iteration did not converge for a {dim}x{dim} matrix \
                 (condition estimate {:.3e})",
                condition_estimate(m)
            ))
        })?;

    let mut eigs: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eigs)
}

/// Progressively looser deflation thresholds; the loosest still leaves
/// eigenvalues far more accurate than any tolerance applied to them.
fn schur_ladder(m: &DMatrix<f64>) -> Option<Schur<f64, nalgebra::Dyn>> {
    [f64::EPSILON, 1e-14, 1e-12]
        .iter()
        .find_map(|&eps| Schur::try_new(m.clone(), eps, 25_000))
}

/// Deterministic dense orthogonal matrix (QR of an LCG-filled matrix).
fn fixed_orthogonal(n: usize) -> DMatrix<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let random = DMatrix::from_fn(n, n, |_, _| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    });
    random.qr().q()
}

/// 2-norm condition number from singular values; infinity when singular.
pub fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    let smin = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Numerical rank from the SVD, plus a flag marking decisions where some
/// singular value sits within two decades of the threshold (those ranks
/// should not be trusted blindly).
pub fn rank_with_gap(m: &DMatrix<f64>) -> (usize, bool) {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let marginal = sv.iter().any(|&s| s > tol / 100.0 && s < tol * 100.0);
    (rank, marginal)
}

/// Greedy nearest-pair matching between two eigenvalue multisets.
///
/// Returns the largest pairing distance, or `None` when the lengths differ.
/// Eigensolvers permute their output and split multiple eigenvalues, so
/// exact positional comparison is useless; greedy matching against a global
/// tolerance is the practical test.
pub fn greedy_match(expected: &[Complex<f64>], got: &[Complex<f64>]) -> Option<f64> {
    if expected.len() != got.len() {
        return None;
    }
    let mut used = vec![false; got.len()];
    let mut worst = 0.0_f64;
    for e in expected {
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in got.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (e - g).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, d) = best?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inf_norms() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, 0.5, 0.25]);
        assert_eq!(inf_norm_mat(&m), 4.0);
        let v = DVector::from_vec(vec![1.0, -5.0, 2.0]);
        assert_eq!(inf_norm_vec(&v), 5.0);
    }

    #[test]
    fn eigenvalues_of_rotation_block() {
        // [[0, 1], [-1, 0]] has eigenvalues ±i
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let eigs = complex_eigenvalues(&m).unwrap();
        assert!((eigs[0] - Complex::new(0.0, -1.0)).norm() < 1e-12);
        assert!((eigs[1] - Complex::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn rank_of_jordan_block() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let (rank, marginal) = rank_with_gap(&m);
        assert_eq!(rank, 1);
        assert!(!marginal);
        let (rank2, _) = rank_with_gap(&(&m * &m));
        assert_eq!(rank2, 0);
    }

    #[test]
    fn greedy_match_handles_permutation() {
        let a = vec![Complex::new(1.0, 0.0), Complex::new(0.0, 2.0)];
        let b = vec![Complex::new(0.0, 2.0 + 1e-10), Complex::new(1.0, 0.0)];
        let worst = greedy_match(&a, &b).unwrap();
        assert!(worst < 1e-9);
        assert!(greedy_match(&a, &b[..1]).is_none());
    }
}
