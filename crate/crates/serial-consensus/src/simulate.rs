//! Exact trajectory integration for the assembled closed loops.
//!
//! The systems are LTI with constant input, so each sampling step applies
//! exp(A*dt) plus the forced-response integral once; there is no integrator
//! tuning and no truncation error beyond the sampling grid itself.

use nalgebra::DVector;

use crate::closed_loop::{ClosedLoopSystem, Coordinates, StateVector};
use crate::error::{Error, Result};
use crate::expm::expm_with_input;
use crate::graph::LaplacianMatrix;
use crate::linalg::{inf_norm_vec, ones};
use crate::numfmt::fmt_g;

/// States whose magnitude passes this ceiling stop the integration and mark
/// the trajectory as truncated, so sweeps over unstable designs still
/// produce well-formed reports.
pub const MAGNITUDE_CEILING: f64 = 1e12;

/// How relative position errors are measured: e_p(t) = spacing + L x(t).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetric {
    laplacian: LaplacianMatrix,
    spacing: DVector<f64>,
}

impl ErrorMetric {
    pub fn new(laplacian: LaplacianMatrix, spacing: DVector<f64>) -> Result<Self> {
        if spacing.len() != laplacian.n() {
            return Err(Error::DimensionMismatch(format!(
                "spacing vector has length {}, metric Laplacian has {} vertices",
                spacing.len(),
                laplacian.n()
            )));
        }
        if spacing.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain("spacing entries must be finite".into()));
        }
        Ok(ErrorMetric { laplacian, spacing })
    }

    /// Metric with zero desired spacing.
    pub fn plain(laplacian: LaplacianMatrix) -> Self {
        let n = laplacian.n();
        ErrorMetric {
            laplacian,
            spacing: DVector::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.laplacian.n()
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        &self.laplacian
    }

    pub fn spacing(&self) -> &DVector<f64> {
        &self.spacing
    }

    /// e_p for a position vector.
    pub fn position_error(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.spacing + self.laplacian.entries() * x
    }
}

/// A sampled closed-loop trajectory with its derived error signals.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    ep: Vec<DVector<f64>>,
    ev: Vec<DVector<f64>>,
    sup_norm_running: Vec<f64>,
    truncated: bool,
    v_ref: f64,
    metric: ErrorMetric,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn ep(&self) -> &[DVector<f64>] {
        &self.ep
    }

    pub fn ev(&self) -> &[DVector<f64>] {
        &self.ev
    }

    /// Running maximum of the stacked error norm max(|e_p|_inf, |e_v|_inf).
    pub fn sup_norm_running(&self) -> &[f64] {
        &self.sup_norm_running
    }

    /// True when the state hit the magnitude ceiling and the run stopped
    /// early.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn v_ref(&self) -> f64 {
        self.v_ref
    }

    pub fn metric(&self) -> &ErrorMetric {
        &self.metric
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("a trajectory holds at least t = 0")
    }

    /// Stacked error norm at sample `k`.
    pub fn stacked_error_norm(&self, k: usize) -> f64 {
        inf_norm_vec(&self.ep[k]).max(inf_norm_vec(&self.ev[k]))
    }

    /// CSV export: `t,x_1..x_n,v_1..v_n,ep_1..ep_n,ev_1..ev_n` with ten
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.n());
        let mut out = String::from("t");
        for (tag, m) in [("x", n), ("v", n), ("ep", n), ("ev", n)] {
            for i in 1..=m {
                out.push_str(&format!(",{tag}_{i}"));
            }
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&fmt_g(self.times[k], 10));
            let state = &self.states[k];
            for v in state
                .x
                .iter()
                .chain(state.v.iter())
                .chain(self.ep[k].iter())
                .chain(self.ev[k].iter())
            {
                out.push(',');
                out.push_str(&fmt_g(*v, 10));
            }
            out.push('\n');
        }
        out
    }
}

/// Propagate the system exactly from `init` (always given in physical
/// coordinates) over `[0, horizon]` sampled every `dt`. The final sample is
/// the first grid point at or beyond the horizon.
pub fn integrate(
    sys: &ClosedLoopSystem,
    init: &StateVector,
    horizon: f64,
    dt: f64,
    metric: &ErrorMetric,
) -> Result<Trajectory> {
    let n = sys.n();
    if init.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} agents, system has {n}",
            init.n()
        )));
    }
    if metric.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "error metric has {} vertices, system has {n}",
            metric.n()
        )));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Domain(format!("sampling step must be positive, got {dt}")));
    }

    let steps = ((horizon / dt - 1e-9).ceil() as usize).max(1);
    let v_ref = sys.spec().v_ref();

    let forcing = sys.b_input() * sys.u_ref();
    let (step_matrix, forced) = expm_with_input(sys.a_state(), &forcing, dt);

    let mut current = match sys.coords() {
        Coordinates::Physical => init.stacked(),
        Coordinates::Xi => sys.physical_to_xi(init)?,
    };

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        ep: Vec::with_capacity(steps + 1),
        ev: Vec::with_capacity(steps + 1),
        sup_norm_running: Vec::with_capacity(steps + 1),
        truncated: false,
        v_ref,
        metric: metric.clone(),
    };

    record_sample(&mut traj, sys, 0.0, &current)?;
    for k in 1..=steps {
        current = &step_matrix * &current + &forced;
        if current.iter().any(|e| !e.is_finite())
            || inf_norm_vec(&current) > MAGNITUDE_CEILING
        {
            traj.truncated = true;
            break;
        }
        record_sample(&mut traj, sys, k as f64 * dt, &current)?;
    }
    Ok(traj)
}

fn record_sample(
    traj: &mut Trajectory,
    sys: &ClosedLoopSystem,
    t: f64,
    current: &DVector<f64>,
) -> Result<()> {
    let state = match sys.coords() {
        Coordinates::Physical => StateVector::from_stacked(current)?,
        Coordinates::Xi => sys.xi_to_physical(current)?,
    };
    let ep = traj.metric.position_error(&state.x);
    let ev = &state.v - ones(state.n()) * traj.v_ref;
    let norm = inf_norm_vec(&ep).max(inf_norm_vec(&ev));
    let running = traj
        .sup_norm_running
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(norm);
    traj.times.push(t);
    traj.states.push(state);
    traj.ep.push(ep);
    traj.ev.push(ev);
    traj.sup_norm_running.push(running);
    Ok(())
}

/// Check the stored error signals against recomputation from the states;
/// the largest absolute deviation should be at rounding level.
pub fn derived_signal_residual(traj: &Trajectory) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..traj.len() {
        let ep = traj.metric.position_error(&traj.states[k].x);
        let ev = &traj.states[k].v - ones(traj.states[k].n()) * traj.v_ref;
        worst = worst.max(inf_norm_vec(&(&ep - &traj.ep[k])));
        worst = worst.max(inf_norm_vec(&(&ev - &traj.ev[k])));
    }
    worst
}
