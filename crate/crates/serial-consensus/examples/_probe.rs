use serial_consensus::closed_loop::{assemble, Coordinates};
use serial_consensus::harness::{pole_union, serial_instance};
use serial_consensus::linalg::greedy_match;

fn main() {
    let inst = serial_instance(2024, 31, 1e-3);
    eprintln!("n = {}", inst.n);
    eprintln!("L1 = {:.6}", inst.l1.entries());
    eprintln!("L2 = {:.6}", inst.l2.entries());
    let expected = pole_union(&inst.l1, &inst.l2).unwrap();
    let sys = assemble(&inst.spec, Coordinates::Physical).unwrap();
    let got = sys.spectrum().unwrap();
    eprintln!("expected:");
    for e in &expected { eprintln!("  {:+.12e} {:+.12e}i", e.re, e.im); }
    eprintln!("got:");
    for g in &got { eprintln!("  {:+.12e} {:+.12e}i", g.re, g.im); }
    eprintln!("worst = {:e}", greedy_match(&expected, &got).unwrap());
    // minimum pairwise separation in the expected union (excluding self)
    let mut min_sep = f64::INFINITY;
    for i in 0..expected.len() {
        for j in 0..expected.len() {
            if i != j {
                min_sep = min_sep.min((expected[i] - expected[j]).norm());
            }
        }
    }
    eprintln!("min pairwise separation in union = {:e}", min_sep);
}
