//! Build the named formation topologies, inspect their Laplacians, and
//! round-trip the edge-list text format.

use serial_consensus::{named_topology, Topology, WeightedDigraph};

fn main() {
    println!("=== Named topologies (n = 5) ===\n");

    for kind in Topology::ALL {
        let g = named_topology(kind, 5).unwrap();
        let l = g.laplacian();
        println!("{kind}:");
        println!("{}", l.entries());
        match g.spanning_tree_root() {
            Some(root) => println!("  connected spanning tree rooted at vehicle {}", root + 1),
            None => println!("  no connected spanning tree"),
        }
        println!("  max |row sum| = {:.1e}", l.max_abs_row_sum());
        println!();
    }

    println!("=== Edge-list serialization ===\n");
    let g = WeightedDigraph::from_edges(4, &[(1, 0, 0.5), (2, 1, 1.25), (3, 2, 2.0), (0, 3, 0.75)])
        .unwrap();
    let text = g.to_edge_list();
    print!("{text}");
    let back = WeightedDigraph::from_edge_list(&text).unwrap();
    println!("round trip equal: {}", back == g);

    println!("\n=== Custom weighted graph ===\n");
    let g = WeightedDigraph::from_edges(2, &[(0, 1, 2.0), (1, 0, 3.0)]).unwrap();
    println!("{}", g.laplacian().entries());
}
