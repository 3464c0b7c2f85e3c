//! Controller synthesis: the conventional and serial consensus laws as
//! position/velocity feedback matrices plus a constant feedforward.
//!
//! Conventional: `u = u_ref - L1 dx - L0 x`. Serial:
//! `u = u_ref - (L2+L1) dx - L2 L1 x`, which puts two first-order consensus
//! systems in series. The feedforward u_ref = A0 p makes a formation with
//! spacing offsets p behave exactly like the zero-offset formation in
//! translated coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{tol_rowsum, LaplacianMatrix};
use crate::linalg::{inf_norm_vec, ones};

/// Which consensus law a [`ControllerSpec`] realizes.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlLaw {
    /// Velocity feedback `vel`, position feedback `pos`.
    Conventional {
        vel: LaplacianMatrix,
        pos: LaplacianMatrix,
    },
    /// Cascade of first-order consensus systems: `inner` acts on positions
    /// first, `outer` closes the second loop.
    Serial {
        inner: LaplacianMatrix,
        outer: LaplacianMatrix,
    },
}

impl ControlLaw {
    pub fn n(&self) -> usize {
        match self {
            ControlLaw::Conventional { vel, .. } => vel.n(),
            ControlLaw::Serial { inner, .. } => inner.n(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ControlLaw::Conventional { .. } => "conventional",
            ControlLaw::Serial { .. } => "serial",
        }
    }
}

/// A complete controller: the law, desired spacing offsets, and the common
/// reference velocity. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    law: ControlLaw,
    offsets: DVector<f64>,
    v_ref: f64,
    serial_gains: Option<(f64, f64)>,
}

impl ControllerSpec {
    pub fn conventional(vel: LaplacianMatrix, pos: LaplacianMatrix) -> Result<Self> {
        if vel.n() != pos.n() {
            return Err(Error::DimensionMismatch(format!(
                "velocity Laplacian has {} vertices, position Laplacian {}",
                vel.n(),
                pos.n()
            )));
        }
        let n = vel.n();
        Ok(ControllerSpec {
            law: ControlLaw::Conventional { vel, pos },
            offsets: DVector::zeros(n),
            v_ref: 0.0,
            serial_gains: None,
        })
    }

    pub fn serial(inner: LaplacianMatrix, outer: LaplacianMatrix) -> Result<Self> {
        if inner.n() != outer.n() {
            return Err(Error::DimensionMismatch(format!(
                "inner Laplacian has {} vertices, outer Laplacian {}",
                inner.n(),
                outer.n()
            )));
        }
        let n = inner.n();
        Ok(ControllerSpec {
            law: ControlLaw::Serial { inner, outer },
            offsets: DVector::zeros(n),
            v_ref: 0.0,
            serial_gains: None,
        })
    }

    /// Conventional law with both Laplacians proportional to one base:
    /// velocity feedback `r1 * base`, position feedback `r0 * base`.
    pub fn conventional_gains(r1: f64, r0: f64, base: &LaplacianMatrix) -> Result<Self> {
        Error::ensure_positive_gain("r1", r1)?;
        Error::ensure_positive_gain("r0", r0)?;
        Self::conventional(base.scale(r1)?, base.scale(r0)?)
    }

    /// Serial law with both cascade Laplacians proportional to one base:
    /// inner `p1 * base`, outer `p2 * base`. Records the gain pair so the
    /// scalable-performance constant can be evaluated later. Equal gains are
    /// accepted here; the performance analysis rejects them.
    pub fn serial_gains(p1: f64, p2: f64, base: &LaplacianMatrix) -> Result<Self> {
        Error::ensure_positive_gain("p1", p1)?;
        Error::ensure_positive_gain("p2", p2)?;
        let mut spec = Self::serial(base.scale(p1)?, base.scale(p2)?)?;
        spec.serial_gains = Some((p1, p2));
        Ok(spec)
    }

    /// Attach desired spacing offsets and a reference velocity.
    pub fn with_offsets(mut self, offsets: DVector<f64>, v_ref: f64) -> Result<Self> {
        if offsets.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "offset vector has length {}, expected {}",
                offsets.len(),
                self.n()
            )));
        }
        if offsets.iter().any(|x| !x.is_finite()) || !v_ref.is_finite() {
            return Err(Error::Domain("offsets and v_ref must be finite".into()));
        }
        self.offsets = offsets;
        self.v_ref = v_ref;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.law.n()
    }

    pub fn law(&self) -> &ControlLaw {
        &self.law
    }

    pub fn is_serial(&self) -> bool {
        matches!(self.law, ControlLaw::Serial { .. })
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    pub fn v_ref(&self) -> f64 {
        self.v_ref
    }

    /// The `(p1, p2)` pair when this controller was built by
    /// [`serial_gains`]; `None` for conventional or mixed serial designs.
    ///
    /// [`serial_gains`]: ControllerSpec::serial_gains
    pub fn serial_gain_pair(&self) -> Option<(f64, f64)> {
        self.serial_gains
    }

    /// Both underlying graphs contain a connected spanning tree.
    pub fn satisfies_spanning_assumption(&self) -> bool {
        match &self.law {
            ControlLaw::Conventional { vel, pos } => {
                vel.has_spanning_tree() && pos.has_spanning_tree()
            }
            ControlLaw::Serial { inner, outer } => {
                inner.has_spanning_tree() && outer.has_spanning_tree()
            }
        }
    }

    /// Feedback matrices of u = u_ref - A1 dx - A0 x, with the static
    /// feedforward u_ref = A0 * offsets that keeps the translated dynamics
    /// offset-free.
    pub fn synthesize(&self) -> FeedbackMatrices {
        let (a1, a0) = match &self.law {
            ControlLaw::Conventional { vel, pos } => {
                (vel.entries().clone(), pos.entries().clone())
            }
            ControlLaw::Serial { inner, outer } => (
                outer.entries() + inner.entries(),
                outer.entries() * inner.entries(),
            ),
        };
        let u_ref_static = &a0 * &self.offsets;
        let n = self.n();
        debug_assert!(inf_norm_vec(&(&a1 * ones(n))) <= tol_rowsum(n) * 10.0);
        debug_assert!(inf_norm_vec(&(&a0 * ones(n))) <= tol_rowsum(n) * 10.0);
        FeedbackMatrices { a1, a0, u_ref_static }
    }

    /// Map positions into the offset-free frame: x_tilde = x - p - t*v_ref*1.
    pub fn translate_positions(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        x - &self.offsets - ones(self.n()) * (t * self.v_ref)
    }

    /// Inverse of [`translate_positions`]; restores x exactly.
    ///
    /// [`translate_positions`]: ControllerSpec::translate_positions
    pub fn restore_positions(&self, x_tilde: &DVector<f64>, t: f64) -> DVector<f64> {
        x_tilde + &self.offsets + ones(self.n()) * (t * self.v_ref)
    }
}

/// Synthesized feedback: u = u_ref_static - a1 * dx - a0 * x.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackMatrices {
    pub a1: DMatrix<f64>,
    pub a0: DMatrix<f64>,
    pub u_ref_static: DVector<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{named_topology, Topology};
    use nalgebra::{dmatrix, dvector};

    /// Plain triple-loop product, independent of the synthesis path.
    fn naive_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[(i, j)] += a[(i, k)] * b[(k, j)];
                }
            }
        }
        out
    }

    #[test]
    fn serial_synthesis_scaled_path() {
        let base = named_topology(Topology::AheadPath, 3).unwrap().laplacian();
        let spec = ControllerSpec::serial_gains(2.0, 0.5, &base).unwrap();
        let fb = spec.synthesize();

        assert_eq!(fb.a1, base.entries() * 2.5);

        let oracle = naive_product(&(base.entries() * 0.5), &(base.entries() * 2.0));
        assert_eq!(fb.a0, oracle);
        // p1 p2 = 1, so a0 is the plain Laplacian square
        let expected = dmatrix![
            0.0, 0.0, 0.0;
            -1.0, 1.0, 0.0;
            1.0, -2.0, 1.0
        ];
        assert_eq!(fb.a0, expected);
        assert_eq!(fb.u_ref_static, DVector::zeros(3));
    }

    #[test]
    fn conventional_synthesis_scaled_cycle() {
        let base = named_topology(Topology::AheadCycle, 4).unwrap().laplacian();
        let spec = ControllerSpec::conventional_gains(2.5, 1.0, &base).unwrap();
        let fb = spec.synthesize();
        assert_eq!(fb.a1, base.entries() * 2.5);
        assert_eq!(fb.a0, base.entries().clone());
    }

    #[test]
    fn zero_serial_law_has_no_coupling() {
        let zero = LaplacianMatrix::zero(3).unwrap();
        let spec = ControllerSpec::serial(zero.clone(), zero).unwrap();
        let fb = spec.synthesize();
        assert_eq!(fb.a1, DMatrix::zeros(3, 3));
        assert_eq!(fb.a0, DMatrix::zeros(3, 3));
        assert_eq!(fb.u_ref_static, DVector::zeros(3));
    }

    #[test]
    fn feedforward_comes_from_position_feedback() {
        let base = named_topology(Topology::AheadPath, 3).unwrap().laplacian();
        let offsets = dvector![0.0, -1.0, -2.0];
        let spec = ControllerSpec::serial_gains(2.0, 0.5, &base)
            .unwrap()
            .with_offsets(offsets.clone(), 1.0)
            .unwrap();
        let fb = spec.synthesize();
        assert_eq!(fb.u_ref_static, &fb.a0 * &offsets);
    }

    #[test]
    fn translation_examples() {
        let base = named_topology(Topology::AheadPath, 3).unwrap().laplacian();

        // no offsets: the translation is the identity
        let plain = ControllerSpec::serial_gains(1.0, 2.0, &base).unwrap();
        let x = dvector![3.0, -1.0, 0.5];
        assert_eq!(plain.translate_positions(&x, 7.0), x);

        let spec = ControllerSpec::serial_gains(1.0, 2.0, &base)
            .unwrap()
            .with_offsets(dvector![0.0, -1.0, -2.0], 1.0)
            .unwrap();

        // at-rest formation: x = p at t = 0 maps to the origin
        assert_eq!(
            spec.translate_positions(&dvector![0.0, -1.0, -2.0], 0.0),
            DVector::zeros(3)
        );

        // moving formation
        let x = dvector![2.0, 1.0, 0.0];
        assert_eq!(spec.translate_positions(&x, 2.0), DVector::zeros(3));
        assert_eq!(spec.restore_positions(&DVector::zeros(3), 2.0), x);
    }

    #[test]
    fn gain_constructors_reject_nonpositive_gains() {
        let base = named_topology(Topology::AheadPath, 3).unwrap().laplacian();
        assert!(ControllerSpec::serial_gains(0.0, 1.0, &base).is_err());
        assert!(ControllerSpec::serial_gains(1.0, -2.0, &base).is_err());
        assert!(ControllerSpec::conventional_gains(f64::NAN, 1.0, &base).is_err());
        // equal serial gains are allowed at construction
        let eq = ControllerSpec::serial_gains(1.5, 1.5, &base).unwrap();
        assert_eq!(eq.serial_gain_pair(), Some((1.5, 1.5)));
    }

    #[test]
    fn dimension_mismatches_rejected() {
        let a = named_topology(Topology::AheadPath, 3).unwrap().laplacian();
        let b = named_topology(Topology::AheadPath, 4).unwrap().laplacian();
        assert!(ControllerSpec::serial(a.clone(), b.clone()).is_err());
        assert!(ControllerSpec::conventional(a.clone(), b).is_err());
        let spec = ControllerSpec::serial(a.clone(), a).unwrap();
        assert!(spec.with_offsets(dvector![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn spanning_assumption_reflects_both_graphs() {
        let path = named_topology(Topology::AheadPath, 4).unwrap().laplacian();
        let zero = LaplacianMatrix::zero(4).unwrap();
        assert!(ControllerSpec::serial(path.clone(), path.clone())
            .unwrap()
            .satisfies_spanning_assumption());
        assert!(!ControllerSpec::serial(path, zero)
            .unwrap()
            .satisfies_spanning_assumption());
    }
}
