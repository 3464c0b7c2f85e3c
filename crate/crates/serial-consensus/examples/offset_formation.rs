//! A formation with desired spacing and a cruise velocity: the feedforward
//! u_ref = A0 p makes the offset formation behave exactly like the
//! zero-offset one in translated coordinates.

use nalgebra::DVector;
use serial_consensus::closed_loop::{assemble, Coordinates, StateVector};
use serial_consensus::linalg::inf_norm_vec;
use serial_consensus::simulate::{integrate, ErrorMetric};
use serial_consensus::{named_topology, ControllerSpec, Topology};

fn main() {
    let n = 6;
    let base = named_topology(Topology::AheadPath, n).unwrap().laplacian();

    // vehicles 5 apart, cruising at v_ref = 2
    let spacing_gap = 5.0;
    let offsets = DVector::from_fn(n, |i, _| -(i as f64) * spacing_gap);
    let v_ref = 2.0;
    let spec = ControllerSpec::serial_gains(2.0, 0.5, &base)
        .unwrap()
        .with_offsets(offsets.clone(), v_ref)
        .unwrap();

    // start scrambled around the desired formation
    let x0 = DVector::from_fn(n, |i, _| -(i as f64) * spacing_gap + ((i * 7 % 3) as f64 - 1.0));
    let v0 = DVector::from_fn(n, |i, _| v_ref + if i == 0 { 1.0 } else { 0.0 });
    let init = StateVector::new(x0, v0).unwrap();

    // e_p measures deviation from the desired gaps: d = -L p
    let spacing = -(base.entries() * &offsets);
    let metric = ErrorMetric::new(base.clone(), spacing).unwrap();

    let sys = assemble(&spec, Coordinates::Physical).unwrap();
    let traj = integrate(&sys, &init, 20.0, 0.05, &metric).unwrap();

    println!("directed path of {n} vehicles, gap {spacing_gap}, cruise velocity {v_ref}\n");
    println!("{:>6}  {:>12} {:>12}  positions", "t", "|e_p|", "|e_v|");
    for &t in &[0.0, 2.0, 5.0, 10.0, 20.0] {
        let k = traj.times().iter().position(|&s| (s - t).abs() < 1e-9).unwrap();
        let x = &traj.states()[k].x;
        let shown: Vec<String> = x.iter().map(|v| format!("{v:7.2}")).collect();
        println!(
            "{t:>6.1}  {:>12.6} {:>12.6}  [{}]",
            inf_norm_vec(&traj.ep()[k]),
            inf_norm_vec(&traj.ev()[k]),
            shown.join(", ")
        );
    }

    // the translated trajectory must match the zero-offset run exactly
    let plain = ControllerSpec::serial_gains(2.0, 0.5, &base).unwrap();
    let plain_sys = assemble(&plain, Coordinates::Physical).unwrap();
    let plain_init = StateVector::new(
        spec.translate_positions(&init.x, 0.0),
        &init.v - DVector::from_element(n, v_ref),
    )
    .unwrap();
    let plain_traj = integrate(
        &plain_sys,
        &plain_init,
        20.0,
        0.05,
        &ErrorMetric::plain(base),
    )
    .unwrap();

    let mut worst = 0.0_f64;
    for k in 0..traj.len() {
        let t = traj.times()[k];
        let translated = spec.translate_positions(&traj.states()[k].x, t);
        worst = worst.max(inf_norm_vec(&(&translated - &plain_traj.states()[k].x)));
    }
    println!("\nworst deviation from the translated zero-offset run: {worst:.3e}");

    let last = traj.final_state();
    println!(
        "final gaps: [{}]",
        (1..n)
            .map(|i| format!("{:.4}", last.x[i - 1] - last.x[i]))
            .collect::<Vec<_>>()
            .join(", ")
    );
}
