//! Dense matrix exponential via Padé(13) approximation with scaling and
//! squaring, following Higham (2005), "The Scaling and Squaring Method for
//! the Matrix Exponential Revisited".
//!
//! Also provides the augmented-matrix form that yields the forced-response
//! integral for constant inputs, so LTI propagation stays exact.

use nalgebra::{DMatrix, DVector};

/// Padé(13) applicability threshold on the 1-norm (Higham, Table 10.2).
const THETA_13: f64 = 5.371920351148152;

/// Padé(13) numerator coefficients (integer form).
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Compute exp(A) for a square real matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if n == 1 {
        return DMatrix::from_element(1, 1, a[(0, 0)].exp());
    }

    let norm = one_norm(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };

    let scaled = a / 2.0_f64.powi(squarings as i32);
    let mut result = pade_13(&scaled);
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

fn pade_13(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let w1 = &a6 * PADE_13[13] + &a4 * PADE_13[11] + &a2 * PADE_13[9];
    let w2 = &w1 * &a6 + &a6 * PADE_13[7] + &a4 * PADE_13[5] + &a2 * PADE_13[3] + &eye * PADE_13[1];
    let u = a * w2;

    let v1 = &a6 * PADE_13[12] + &a4 * PADE_13[10] + &a2 * PADE_13[8];
    let v = &v1 * &a6 + &a6 * PADE_13[6] + &a4 * PADE_13[4] + &a2 * PADE_13[2] + &eye * PADE_13[0];

    let denominator = &v - &u;
    let numerator = &v + &u;
    denominator
        .lu()
        .solve(&numerator)
        .expect("Pade denominator is nonsingular once the input is scaled below theta_13")
}

/// 1-norm: maximum absolute column sum.
fn one_norm(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..a.ncols() {
        let mut sum = 0.0;
        for i in 0..a.nrows() {
            sum += a[(i, j)].abs();
        }
        worst = worst.max(sum);
    }
    worst
}

/// One exact step of the forced LTI system x' = A x + b  (b constant):
/// returns (exp(A*dt), ∫₀^dt exp(A τ) dτ · b), computed from the exponential
/// of the augmented matrix [[A, b], [0, 0]] · dt.
pub fn expm_with_input(a: &DMatrix<f64>, b: &DVector<f64>, dt: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm_with_input requires a square matrix");
    assert_eq!(n, b.len(), "input vector length must match the state size");

    if b.iter().all(|&x| x == 0.0) {
        // no forcing: skip the augmentation
        return (expm(&(a * dt)), DVector::zeros(n));
    }

    let mut aug = DMatrix::<f64>::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, 1)).copy_from(b);
    let e = expm(&(aug * dt));
    let step = e.view((0, 0), (n, n)).into_owned();
    let forced = e.view((0, n), (n, 1)).column(0).into_owned();
    (step, forced)
}
