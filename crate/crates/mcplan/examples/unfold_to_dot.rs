//! Unfold a coupled three-submodel model into its iteration-level task
//! graph and emit GraphViz DOT on stdout.
//!
//! Render with: cargo run --example unfold_to_dot | dot -Tsvg > graph.svg

use std::collections::BTreeMap;

use mcplan::taskgraph::{critical_path, to_dot};
use mcplan::{parse_model, unfold};

const ISR3D: &str = include_str!("data/isr3d.mmd");

fn main() {
    let model = parse_model(ISR3D).expect("fixture parses");
    let graph = unfold(&model, 2, &BTreeMap::new()).expect("fixture unfolds");
    eprintln!("{} nodes, {} edges", graph.nodes().len(), graph.edges().len());

    // Node weights for the critical path: one unit per task.
    let costs: BTreeMap<_, _> = graph.nodes().iter().map(|n| (n.id.clone(), 1.0)).collect();
    let (length, path) = critical_path(&graph, &costs).expect("graph is acyclic");
    eprintln!(
        "critical path ({length} units): {}",
        path.iter().map(|id| id.as_str()).collect::<Vec<_>>().join(" -> ")
    );

    print!("{}", to_dot(&graph));
}
