//! Feedback-class certificates: relative feedback with bounded gain and
//! hop-local sparsity.
//!
//! A matrix `A` is q-step implementable with respect to an adjacency matrix
//! `W` and gain `c` when (a) its support lies inside the q-hop reachability
//! pattern of `W`, (b) it represents relative feedback (`A 1 = 0`), and
//! (c) its induced infinity norm is at most `c`. Sparsity is checked on
//! boolean reachability powers of the zero pattern of `W`; numeric powers of
//! a weighted adjacency matrix can underflow or blow up.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{tol_rowsum, LaplacianMatrix, WeightedDigraph};
use crate::linalg::{inf_norm_mat, ones};

/// Relative slack on the gain clause, absorbing rounding in products of
/// matrices that sit exactly on the bound.
const GAIN_SLACK: f64 = 1e-9;

/// One failed clause of the class definition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Nonzero entry outside the q-hop support (0-based indices).
    Sparsity { row: usize, col: usize, value: f64 },
    /// A row sum beyond the relative-feedback tolerance.
    RowSum { row: usize, sum: f64 },
    /// Induced infinity norm above the gain bound.
    Gain { norm: f64, bound: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Sparsity { row, col, value } => write!(
                f,
                "entry ({}, {}) = {value} lies outside the allowed hop pattern",
                row + 1,
                col + 1
            ),
            Violation::RowSum { row, sum } => {
                write!(f, "row {} sums to {sum}, so the feedback is not relative", row + 1)
            }
            Violation::Gain { norm, bound } => {
                write!(f, "gain {norm} exceeds the bound {bound}")
            }
        }
    }
}

/// Outcome of a class-membership check.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackClassCertificate {
    pub q: usize,
    pub gain_bound: f64,
    pub holds: bool,
    pub violations: Vec<Violation>,
}

impl FeedbackClassCertificate {
    fn from_violations(q: usize, gain_bound: f64, violations: Vec<Violation>) -> Self {
        FeedbackClassCertificate {
            q,
            gain_bound,
            holds: violations.is_empty(),
            violations,
        }
    }

    pub fn describe(&self) -> String {
        if self.holds {
            format!("in A^{}(W, {}): yes", self.q, self.gain_bound)
        } else {
            format!(
                "in A^{}(W, {}): no ({} violation{})",
                self.q,
                self.gain_bound,
                self.violations.len(),
                if self.violations.len() == 1 { "" } else { "s" }
            )
        }
    }
}

/// Check whether `a` is q-step implementable with respect to `w` and gain
/// `c`. Every failed clause is recorded; `holds` is true iff no clause
/// failed.
pub fn check_membership(
    a: &DMatrix<f64>,
    w: &WeightedDigraph,
    q: usize,
    c: f64,
) -> Result<FeedbackClassCertificate> {
    let n = w.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "feedback matrix is {}x{} but the base graph has {n} vertices",
            a.nrows(),
            a.ncols()
        )));
    }
    Error::ensure_positive_gain("bound c", c)?;

    let mut violations = Vec::new();

    // (a) sparsity against the boolean q-hop pattern
    let mask = w.hop_mask(q);
    let entry_tol = 1e-12 * inf_norm_mat(a).max(1.0);
    for i in 0..n {
        for j in 0..n {
            let value = a[(i, j)];
            if !mask[i][j] && value.abs() > entry_tol {
                violations.push(Violation::Sparsity { row: i, col: j, value });
            }
        }
    }

    // (b) relative feedback: A 1 = 0
    let residual = a * ones(n);
    let rowsum_tol = tol_rowsum(n) * inf_norm_mat(a).max(1.0);
    for (i, &sum) in residual.iter().enumerate() {
        if sum.abs() > rowsum_tol {
            violations.push(Violation::RowSum { row: i, sum });
        }
    }

    // (c) bounded gain
    let norm = inf_norm_mat(a);
    if norm > c * (1.0 + GAIN_SLACK) {
        violations.push(Violation::Gain { norm, bound: c });
    }

    Ok(FeedbackClassCertificate::from_violations(q, c, violations))
}

/// Certificates produced by [`sparsity_closure`].
#[derive(Debug, Clone)]
pub struct ClosureCertificates {
    /// `l2 + l1` checked at one hop with gain `2c`.
    pub sum: FeedbackClassCertificate,
    /// `l2 * l1` checked at two hops with gain `max(2c, c^2)`.
    pub product: FeedbackClassCertificate,
}

/// Certify that the sum and the product of two 1-step implementable
/// Laplacians stay implementable: `l2 + l1` within one hop at gain `2c`, and
/// `l2 * l1` within two hops at gain `max(2c, c^2)`.
///
/// Both inputs must already lie in `A^1(w, c)`; that precondition is checked
/// and reported per matrix. Given the precondition the closure always holds
/// (row sums and support compose, induced norms are submultiplicative), so a
/// failing output certificate is reported as an internal inconsistency
/// instead of being returned.
pub fn sparsity_closure(
    l1: &LaplacianMatrix,
    l2: &LaplacianMatrix,
    w: &WeightedDigraph,
    c: f64,
) -> Result<ClosureCertificates> {
    for (name, l) in [("l1", l1), ("l2", l2)] {
        let cert = check_membership(l.entries(), w, 1, c)?;
        if !cert.holds {
            let first = cert
                .violations
                .first()
                .map(|v| v.to_string())
                .unwrap_or_default();
            return Err(Error::MembershipPrecondition(format!(
                "{name} is not in A^1(W, {c}): {first}"
            )));
        }
    }

    let sum = check_membership(&(l2.entries() + l1.entries()), w, 1, 2.0 * c)?;
    let product_gain = (2.0 * c).max(c * c);
    let product = check_membership(&(l2.entries() * l1.entries()), w, 2, product_gain)?;

    for (name, cert) in [("sum", &sum), ("product", &product)] {
        if !cert.holds {
            let first = cert
                .violations
                .first()
                .map(|v| v.to_string())
                .unwrap_or_default();
            return Err(Error::InternalInconsistency(format!(
                "closure certificate for the {name} failed although both inputs are in \
                 A^1(W, {c}): {first}"
            )));
        }
    }

    Ok(ClosureCertificates { sum, product })
}
