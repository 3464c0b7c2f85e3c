//! Closed-loop assembly: the 2n-state LTI system in physical (x, dx) or
//! cascade (xi1, xi2) coordinates, its spectrum, and the consensus
//! stability classification.

use nalgebra::{Complex, DMatrix, DVector};

use crate::controller::{ControlLaw, ControllerSpec};
use crate::error::{Error, Result};
use crate::linalg::{complex_eigenvalues, inf_norm_mat, rank_with_gap};
use crate::numfmt::fmt_g;

/// State coordinates of an assembled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    /// Stacked (x, dx).
    Physical,
    /// Cascade coordinates (xi1, xi2) = (x, dx + L1 x); serial laws only.
    Xi,
}

/// Positions and velocities of the formation at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

impl StateVector {
    pub fn new(x: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "positions have length {}, velocities {}",
                x.len(),
                v.len()
            )));
        }
        if x.iter().chain(v.iter()).any(|e| !e.is_finite()) {
            return Err(Error::Domain("state entries must be finite".into()));
        }
        Ok(StateVector { x, v })
    }

    pub fn zero(n: usize) -> Self {
        StateVector {
            x: DVector::zeros(n),
            v: DVector::zeros(n),
        }
    }

    /// x(0) = 0 and all velocities zero except the leader's, which is one.
    pub fn leader_impulse(n: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[0] = 1.0;
        StateVector {
            x: DVector::zeros(n),
            v,
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Stack into a 2n vector (positions first).
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.n();
        let mut s = DVector::zeros(2 * n);
        s.rows_mut(0, n).copy_from(&self.x);
        s.rows_mut(n, n).copy_from(&self.v);
        s
    }

    pub fn from_stacked(s: &DVector<f64>) -> Result<Self> {
        if !s.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "a stacked state needs even length, got {}",
                s.len()
            )));
        }
        let n = s.len() / 2;
        Self::new(s.rows(0, n).into_owned(), s.rows(n, n).into_owned())
    }
}

/// The assembled 2n-dimensional closed loop d/dt z = A z + B u_ref.
#[derive(Debug, Clone)]
pub struct ClosedLoopSystem {
    n: usize,
    a_state: DMatrix<f64>,
    b_input: DMatrix<f64>,
    coords: Coordinates,
    spec: ControllerSpec,
    u_ref: DVector<f64>,
}

/// Assemble the closed loop for a controller in the requested coordinates.
///
/// Physical coordinates give A = [[0, I], [-A0, -A1]]; cascade coordinates
/// (serial only) give the block upper-triangular A = [[-L1, I], [0, -L2]].
/// Both feed the constant u_ref into the lower block.
pub fn assemble(spec: &ControllerSpec, coords: Coordinates) -> Result<ClosedLoopSystem> {
    let n = spec.n();
    let fb = spec.synthesize();
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut b = DMatrix::<f64>::zeros(2 * n, n);
    b.view_mut((n, 0), (n, n))
        .copy_from(&DMatrix::identity(n, n));

    match coords {
        Coordinates::Physical => {
            a.view_mut((0, n), (n, n))
                .copy_from(&DMatrix::identity(n, n));
            a.view_mut((n, 0), (n, n)).copy_from(&(-&fb.a0));
            a.view_mut((n, n), (n, n)).copy_from(&(-&fb.a1));
        }
        Coordinates::Xi => {
            let ControlLaw::Serial { inner, outer } = spec.law() else {
                return Err(Error::UnsupportedCoordinates(
                    "cascade coordinates exist only for the serial law".into(),
                ));
            };
            a.view_mut((0, 0), (n, n)).copy_from(&(-inner.entries()));
            a.view_mut((0, n), (n, n))
                .copy_from(&DMatrix::identity(n, n));
            a.view_mut((n, n), (n, n)).copy_from(&(-outer.entries()));
        }
    }

    Ok(ClosedLoopSystem {
        n,
        a_state: a,
        b_input: b,
        coords,
        spec: spec.clone(),
        u_ref: fb.u_ref_static,
    })
}

impl ClosedLoopSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a_state(&self) -> &DMatrix<f64> {
        &self.a_state
    }

    pub fn b_input(&self) -> &DMatrix<f64> {
        &self.b_input
    }

    pub fn coords(&self) -> Coordinates {
        self.coords
    }

    pub fn spec(&self) -> &ControllerSpec {
        &self.spec
    }

    /// The constant input vector (the offset feedforward A0 p).
    pub fn u_ref(&self) -> &DVector<f64> {
        &self.u_ref
    }

    fn inner_laplacian(&self) -> Result<&DMatrix<f64>> {
        match self.spec.law() {
            ControlLaw::Serial { inner, .. } => Ok(inner.entries()),
            ControlLaw::Conventional { .. } => Err(Error::UnsupportedCoordinates(
                "cascade transforms exist only for the serial law".into(),
            )),
        }
    }

    /// Map cascade coordinates to physical: x = xi1, dx = -L1 xi1 + xi2.
    pub fn xi_to_physical(&self, xi: &DVector<f64>) -> Result<StateVector> {
        let n = self.n;
        if xi.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "expected a {}-vector, got length {}",
                2 * n,
                xi.len()
            )));
        }
        let l1 = self.inner_laplacian()?;
        let xi1 = xi.rows(0, n).into_owned();
        let xi2 = xi.rows(n, n).into_owned();
        let v = &xi2 - l1 * &xi1;
        StateVector::new(xi1, v)
    }

    /// Inverse of [`xi_to_physical`]: xi1 = x, xi2 = L1 x + dx.
    ///
    /// [`xi_to_physical`]: ClosedLoopSystem::xi_to_physical
    pub fn physical_to_xi(&self, state: &StateVector) -> Result<DVector<f64>> {
        let n = self.n;
        if state.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected a {n}-agent state, got {}",
                state.n()
            )));
        }
        let l1 = self.inner_laplacian()?;
        let xi2 = l1 * &state.x + &state.v;
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&state.x);
        out.rows_mut(n, n).copy_from(&xi2);
        Ok(out)
    }

    /// Closed-loop poles with multiplicity, sorted by (real, imaginary).
    pub fn spectrum(&self) -> Result<Vec<Complex<f64>>> {
        complex_eigenvalues(&self.a_state)
    }

    /// Decide second-order consensus stability: exactly two eigenvalues in
    /// the zero cluster, forming a single size-2 Jordan block (verified via
    /// rank(A) = 2n-1 and rank(A^2) = 2n-2), with every other eigenvalue
    /// strictly in the left half plane.
    pub fn classify_stability(&self) -> Result<StabilityReport> {
        let eigs = self.spectrum()?;
        let tol_zero = 1e-7 * inf_norm_mat(&self.a_state).max(1.0);

        let zero_eigenvalues = eigs.iter().filter(|e| e.norm() <= tol_zero).count();
        let max_nonzero_real_part = eigs
            .iter()
            .filter(|e| e.norm() > tol_zero)
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max);

        let (rank_a, marginal_a) = rank_with_gap(&self.a_state);
        let (rank_a2, marginal_a2) = rank_with_gap(&(&self.a_state * &self.a_state));
        let dim = 2 * self.n;
        let jordan_pair_ok = rank_a == dim - 1 && rank_a2 == dim - 2;

        let consensus_stable =
            zero_eigenvalues == 2 && jordan_pair_ok && max_nonzero_real_part < -tol_zero;

        Ok(StabilityReport {
            consensus_stable,
            max_nonzero_real_part,
            zero_eigenvalues,
            jordan_pair_ok,
            rank_a,
            rank_a_squared: rank_a2,
            rank_marginal: marginal_a || marginal_a2,
            tol_zero,
        })
    }

    /// Row-major plain-text dump of the state matrix for cross-checking
    /// against external tools: a `rows cols` header, then one line per row
    /// with 17 significant digits.
    pub fn dump_matrix(&self) -> String {
        let m = &self.a_state;
        let mut out = format!("{} {}\n", m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| fmt_g(m[(i, j)], 17)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// What [`ClosedLoopSystem::classify_stability`] found.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub consensus_stable: bool,
    /// Largest real part over eigenvalues outside the zero cluster;
    /// negative infinity when none exist (single free vehicle).
    pub max_nonzero_real_part: f64,
    pub zero_eigenvalues: usize,
    /// rank(A) = 2n-1 and rank(A^2) = 2n-2, i.e. the two zero eigenvalues
    /// form one Jordan block of size two.
    pub jordan_pair_ok: bool,
    pub rank_a: usize,
    pub rank_a_squared: usize,
    /// Some rank decision was close to its threshold; treat the Jordan
    /// verdict with care.
    pub rank_marginal: bool,
    pub tol_zero: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{named_topology, LaplacianMatrix, Topology};
    use crate::linalg::greedy_match;
    use nalgebra::dvector;

    fn serial_unit_gains(n: usize, kind: Topology) -> ControllerSpec {
        let l = named_topology(kind, n).unwrap().laplacian();
        ControllerSpec::serial_gains(1.0, 1.0, &l).unwrap()
    }

    #[test]
    fn physical_assembly_matches_hand_built_blocks() {
        // p1 = p2 = 1 on the two-vehicle path: A = [[0, I], [-L^2, -2L]]
        let spec = serial_unit_gains(2, Topology::AheadPath);
        let sys = assemble(&spec, Coordinates::Physical).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 0.0, 0.0, //
                1.0, -1.0, 2.0, -2.0,
            ],
        );
        assert_eq!(sys.a_state(), &expected);
        // input feeds the velocity block
        assert_eq!(sys.b_input()[(2, 0)], 1.0);
        assert_eq!(sys.b_input()[(0, 0)], 0.0);
    }

    #[test]
    fn single_vehicle_is_a_double_integrator() {
        let zero = LaplacianMatrix::zero(1).unwrap();
        let spec = ControllerSpec::serial(zero.clone(), zero).unwrap();
        let sys = assemble(&spec, Coordinates::Physical).unwrap();
        assert_eq!(
            sys.a_state(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])
        );
        let eigs = sys.spectrum().unwrap();
        assert!(eigs.iter().all(|e| e.norm() < 1e-12));
        let report = sys.classify_stability().unwrap();
        assert!(report.consensus_stable);
        assert_eq!(report.max_nonzero_real_part, f64::NEG_INFINITY);
    }

    #[test]
    fn conventional_assembly_blocks() {
        let l = named_topology(Topology::AheadCycle, 3).unwrap().laplacian();
        let spec = ControllerSpec::conventional_gains(2.5, 1.0, &l).unwrap();
        let sys = assemble(&spec, Coordinates::Physical).unwrap();
        let a = sys.a_state();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(3 + i, j)], -l.entries()[(i, j)]);
                assert_eq!(a[(3 + i, 3 + j)], -2.5 * l.entries()[(i, j)]);
            }
        }
    }

    #[test]
    fn xi_coordinates_are_block_triangular() {
        let l = named_topology(Topology::AheadPath, 3).unwrap().laplacian();
        let spec = ControllerSpec::serial_gains(2.0, 0.5, &l).unwrap();
        let sys = assemble(&spec, Coordinates::Xi).unwrap();
        let a = sys.a_state();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, j)], -2.0 * l.entries()[(i, j)]);
                assert_eq!(a[(3 + i, j)], 0.0);
                assert_eq!(a[(3 + i, 3 + j)], -0.5 * l.entries()[(i, j)]);
            }
        }
    }

    #[test]
    fn xi_rejected_for_conventional_laws() {
        let l = named_topology(Topology::AheadPath, 3).unwrap().laplacian();
        let spec = ControllerSpec::conventional_gains(1.0, 1.0, &l).unwrap();
        assert!(matches!(
            assemble(&spec, Coordinates::Xi),
            Err(Error::UnsupportedCoordinates(_))
        ));
    }

    #[test]
    fn consensus_point_maps_to_flat_state() {
        let spec = serial_unit_gains(4, Topology::AheadCycle);
        let sys = assemble(&spec, Coordinates::Xi).unwrap();
        let mut xi = DVector::zeros(8);
        for i in 0..4 {
            xi[i] = 1.0;
        }
        let state = sys.xi_to_physical(&xi).unwrap();
        assert_eq!(state.x, DVector::from_element(4, 1.0));
        assert_eq!(state.v, DVector::zeros(4));
    }

    #[test]
    fn zero_position_state_is_fixed_by_the_transform() {
        let spec = serial_unit_gains(3, Topology::AheadPath);
        let sys = assemble(&spec, Coordinates::Xi).unwrap();
        let state = StateVector::new(DVector::zeros(3), dvector![1.0, 0.0, 0.0]).unwrap();
        let xi = sys.physical_to_xi(&state).unwrap();
        assert_eq!(xi.as_slice(), &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn cascade_transform_round_trip() {
        let l = named_topology(Topology::UndirPath, 5).unwrap().laplacian();
        let spec = ControllerSpec::serial_gains(1.7, 0.3, &l).unwrap();
        let sys = assemble(&spec, Coordinates::Xi).unwrap();
        let xi = DVector::from_fn(10, |i, _| ((i * 7 + 3) % 11) as f64 / 3.0 - 1.5);
        let back = sys.physical_to_xi(&sys.xi_to_physical(&xi).unwrap()).unwrap();
        for i in 0..10 {
            assert!((back[i] - xi[i]).abs() < 1e-12);
        }
    }

    /// DFT oracle for directed-cycle Laplacian eigenvalues: 1 - exp(2 pi i k / n).
    fn cycle_eigenvalues(n: usize) -> Vec<Complex<f64>> {
        (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Complex::new(1.0 - theta.cos(), -theta.sin())
            })
            .collect()
    }

    #[test]
    fn serial_cycle_spectrum_matches_circulant_oracle() {
        let spec = serial_unit_gains(4, Topology::AheadCycle);
        let sys = assemble(&spec, Coordinates::Physical).unwrap();
        let got = sys.spectrum().unwrap();

        // poles are the union of eig(-L1) and eig(-L2); both equal -eig(L)
        let mut expected: Vec<Complex<f64>> = cycle_eigenvalues(4)
            .into_iter()
            .flat_map(|lam| [-lam, -lam])
            .collect();
        expected.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

        // the doubled eigenvalues are defective, so sqrt(eps) accuracy is
        // the best an eigensolver can do here
        let worst = greedy_match(&expected, &got).unwrap();
        assert!(worst < 1e-6, "worst pairing distance {worst}");
    }

    #[test]
    fn conventional_path_spectrum_matches_per_mode_quadratic() {
        // L0 = r0 L and L1 = r1 L share eigenvectors, so each Laplacian
        // eigenvalue contributes the roots of s^2 + r1 lam s + r0 lam.
        let l = named_topology(Topology::AheadPath, 3).unwrap().laplacian();
        let spec = ControllerSpec::conventional_gains(2.5, 1.0, &l).unwrap();
        let sys = assemble(&spec, Coordinates::Physical).unwrap();
        let got = sys.spectrum().unwrap();

        // path Laplacian eigenvalues: 0, 1, 1; quadratic roots by hand
        let mut expected: Vec<Complex<f64>> = vec![
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(-0.5, 0.0),
            Complex::new(-0.5, 0.0),
            Complex::new(-2.0, 0.0),
            Complex::new(-2.0, 0.0),
        ];
        expected.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        // the path Laplacian's repeated eigenvalue is defective as well
        let worst = greedy_match(&expected, &got).unwrap();
        assert!(worst < 1e-6, "worst pairing distance {worst}");
    }

    #[test]
    fn serial_cycle_is_consensus_stable() {
        let l = named_topology(Topology::AheadCycle, 10).unwrap().laplacian();
        let spec = ControllerSpec::serial_gains(2.0, 0.5, &l).unwrap();
        let sys = assemble(&spec, Coordinates::Physical).unwrap();
        let report = sys.classify_stability().unwrap();
        assert!(report.consensus_stable, "{report:?}");
        assert_eq!(report.zero_eigenvalues, 2);
        assert!(report.jordan_pair_ok);
    }

    #[test]
    fn disconnected_inner_graph_breaks_consensus() {
        // two separate 2-cycles: extra zero eigenvalues
        let g = crate::graph::WeightedDigraph::from_edges(
            4,
            &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)],
        )
        .unwrap();
        let l = g.laplacian();
        let spec = ControllerSpec::serial_gains(1.0, 2.0, &l).unwrap();
        let sys = assemble(&spec, Coordinates::Physical).unwrap();
        let report = sys.classify_stability().unwrap();
        assert!(!report.consensus_stable);
        assert!(report.zero_eigenvalues > 2);
    }

    #[test]
    fn matrix_dump_round_trips_dimensions() {
        let spec = serial_unit_gains(3, Topology::AheadPath);
        let sys = assemble(&spec, Coordinates::Physical).unwrap();
        let dump = sys.dump_matrix();
        let mut lines = dump.lines();
        assert_eq!(lines.next(), Some("6 6"));
        assert_eq!(dump.lines().count(), 7);
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(' ')
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(row, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }
}
