//! Feedback-class certificates: which matrices can be realized with
//! relative measurements confined to a q-hop neighborhood of a base graph,
//! and how sums and products of one-hop Laplacians stay implementable.

use serial_consensus::{check_membership, named_topology, sparsity_closure, Topology};

fn main() {
    let n = 10;
    let w = named_topology(Topology::UndirPath, n).unwrap();
    let ahead = named_topology(Topology::AheadPath, n).unwrap().laplacian();
    let behind = named_topology(Topology::BehindPath, n).unwrap().laplacian();

    println!("base graph: undirected path, n = {n}\n");

    println!("single Laplacians:");
    for (name, l) in [("look-ahead", &ahead), ("look-behind", &behind)] {
        let cert = check_membership(l.entries(), &w, 1, 2.0).unwrap();
        println!("  {name:<12} {}", cert.describe());
    }

    println!("\nsum and product (the serial controller's feedback terms):");
    let sum = behind.entries() + ahead.entries();
    let product = behind.entries() * ahead.entries();
    println!(
        "  sum          {}",
        check_membership(&sum, &w, 1, 4.0).unwrap().describe()
    );
    println!(
        "  product      {}",
        check_membership(&product, &w, 1, 4.0).unwrap().describe()
    );
    println!("\nproduct matrix (tridiagonal, so one hop suffices):");
    println!("{}", product.view((0, 0), (5, 5)));

    println!("a squared undirected-path Laplacian needs two hops:");
    let undir = w.laplacian();
    let squared = undir.entries() * undir.entries();
    let one_hop = check_membership(&squared, &w, 1, 16.0).unwrap();
    println!("  {}", one_hop.describe());
    for v in one_hop.violations.iter().take(3) {
        println!("    {v}");
    }
    let two_hop = check_membership(&squared, &w, 2, 16.0).unwrap();
    println!("  {}", two_hop.describe());

    println!("\nclosure guarantee for arbitrary one-hop pairs:");
    let certs = sparsity_closure(&ahead, &behind, &w, 2.0).unwrap();
    println!("  sum     {}", certs.sum.describe());
    println!("  product {}", certs.product.describe());
}
