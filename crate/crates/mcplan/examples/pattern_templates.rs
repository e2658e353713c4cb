//! Every pattern has a canonical task-graph template. Print the shape of
//! each one and dump the extreme-scaling template as DOT.

use mcplan::patterns::{template, PatternKind, TemplateParams};
use mcplan::taskgraph::to_dot;

fn main() {
    let params = TemplateParams {
        micro_slots: 3,
        replicas: 4,
        feedback_rounds: 2,
        exchange_interval: 2,
        ..Default::default()
    };

    for kind in [
        PatternKind::Es,
        PatternKind::Hmc,
        PatternKind::RcStatic,
        PatternKind::RcDynamic,
        PatternKind::RcExchange,
    ] {
        let g = template(kind, &params).expect("parameters fit every template");
        println!("{:<12} {:>3} nodes {:>3} edges", kind.to_string(), g.nodes().len(), g.edges().len());
    }

    let es = template(PatternKind::Es, &params).expect("parameters fit");
    eprintln!();
    eprint!("{}", to_dot(&es));
}
