//! The scalar-gain serial design admits closed-form error propagation
//! through matrix exponentials of the base Laplacian; here it is checked
//! against the generic integrator sample by sample.

use serial_consensus::closed_loop::{assemble, Coordinates, StateVector};
use serial_consensus::linalg::inf_norm_vec;
use serial_consensus::performance::closed_form_errors;
use serial_consensus::simulate::{integrate, ErrorMetric};
use serial_consensus::{named_topology, ControllerSpec, Topology};

fn main() {
    let n = 5;
    let (p1, p2) = (2.0, 0.5);
    let base = named_topology(Topology::AheadPath, n).unwrap().laplacian();
    let spec = ControllerSpec::serial_gains(p1, p2, &base).unwrap();
    let sys = assemble(&spec, Coordinates::Physical).unwrap();
    let metric = ErrorMetric::plain(base.clone());

    let traj = integrate(&sys, &StateVector::leader_impulse(n), 5.0, 0.01, &metric).unwrap();
    let ep0 = traj.ep()[0].clone();
    let ev0 = traj.ev()[0].clone();

    println!("directed path, n = {n}, p1 = {p1}, p2 = {p2}, leader impulse\n");
    println!(
        "{:>6}  {:>14} {:>14}  {:>12}",
        "t", "|e_p|", "|e_v|", "deviation"
    );
    for &t in &[0.0, 0.5, 1.0, 2.0, 3.5, 5.0] {
        let k = traj.times().iter().position(|&s| (s - t).abs() < 1e-12).unwrap();
        let (ep, ev) = closed_form_errors(&base, p1, p2, &ep0, &ev0, traj.times()[k]).unwrap();
        let deviation = inf_norm_vec(&(&ep - &traj.ep()[k]))
            .max(inf_norm_vec(&(&ev - &traj.ev()[k])));
        println!(
            "{t:>6.2}  {:>14.8} {:>14.8}  {deviation:>12.3e}",
            inf_norm_vec(&ep),
            inf_norm_vec(&ev),
        );
    }

    println!(
        "\nsup of the stacked error norm over the horizon: {:.8}",
        traj.sup_norm_running().last().unwrap()
    );
    println!("initial stacked error norm: {:.8}", traj.stacked_error_norm(0));
}
