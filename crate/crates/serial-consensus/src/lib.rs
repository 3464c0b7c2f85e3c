//! Consensus control designs for vehicle formations.
//!
//! The crate builds weighted digraph topologies and their Laplacians,
//! synthesizes the conventional (`u = u_ref - L1 dx - L0 x`) and serial
//! (`u = u_ref - (L2+L1) dx - L2 L1 x`) second-order consensus laws,
//! assembles the closed loops, propagates them exactly with matrix
//! exponentials, and evaluates stability and worst-case transient
//! performance. The serial design keeps the consensus equilibrium stable
//! whenever both underlying graphs contain a connected spanning tree, and
//! for scalar gains (p1, p2) on one base graph its transient amplification
//! is bounded by a constant independent of the formation size.
//!
//! Start with the `examples/` directory: each file exercises one capability
//! end to end. The `serial-consensus` binary runs scenario configs and the
//! bundled presets.

pub mod closed_loop;
pub mod controller;
pub mod error;
pub mod expm;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod membership;
pub mod numfmt;
pub mod performance;
pub mod scenario;
pub mod simulate;

pub use closed_loop::{assemble, ClosedLoopSystem, Coordinates, StabilityReport, StateVector};
pub use controller::{ControlLaw, ControllerSpec, FeedbackMatrices};
pub use error::{Error, Result};
pub use graph::{named_topology, tol_rowsum, LaplacianMatrix, Topology, WeightedDigraph};
pub use membership::{
    check_membership, sparsity_closure, ClosureCertificates, FeedbackClassCertificate, Violation,
};
pub use performance::{
    alpha_of, closed_form_errors, evaluate_performance, sweep, PerformanceReport, SweepRow,
};
pub use simulate::{integrate, ErrorMetric, Trajectory, MAGNITUDE_CEILING};
