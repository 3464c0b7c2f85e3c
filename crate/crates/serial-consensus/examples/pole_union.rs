//! The serial closed loop inherits its poles from the two cascade
//! Laplacians: the 2n poles are exactly the eigenvalues of -L1 and -L2.

use serial_consensus::closed_loop::{assemble, Coordinates};
use serial_consensus::harness::{pole_union, serial_instance};
use serial_consensus::linalg::greedy_match;
use serial_consensus::{named_topology, ControllerSpec, Topology, WeightedDigraph};

fn main() {
    // mixed design: cascade of a cycle stage and a weighted path stage
    // (distinct path weights keep every pole simple and the pairing tight)
    let n = 6;
    let cycle = named_topology(Topology::AheadCycle, n).unwrap().laplacian();
    let edges: Vec<(usize, usize, f64)> =
        (1..n).map(|i| (i, i - 1, 0.4 + 0.2 * i as f64)).collect();
    let path = WeightedDigraph::from_edges(n, &edges).unwrap().laplacian();
    let spec = ControllerSpec::serial(cycle.clone(), path.clone()).unwrap();
    let sys = assemble(&spec, Coordinates::Physical).unwrap();

    println!("cascade of directed cycle (inner) and weighted directed path (outer), n = {n}\n");
    println!("{:<28} {:<28}", "closed-loop pole", "nearest union member");
    let got = sys.spectrum().unwrap();
    let expected = pole_union(&cycle, &path).unwrap();
    for (g, e) in got.iter().zip(expected.iter()) {
        println!(
            "{:>12.8} {:+.8}i   {:>12.8} {:+.8}i",
            g.re, g.im, e.re, e.im
        );
    }
    let worst = greedy_match(&expected, &got).unwrap();
    println!("\nworst pairing distance: {worst:.3e}");

    println!("\nrandom serial systems:");
    for index in 0..5 {
        let inst = serial_instance(7, index, 1e-3);
        let sys = assemble(&inst.spec, Coordinates::Physical).unwrap();
        let worst = greedy_match(
            &pole_union(&inst.l1, &inst.l2).unwrap(),
            &sys.spectrum().unwrap(),
        )
        .unwrap();
        println!("  n = {:>2}: worst pairing distance {worst:.3e}", inst.n);
    }
}
