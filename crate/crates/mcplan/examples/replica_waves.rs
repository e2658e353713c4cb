//! Plan a replica ensemble onto a small cluster, print the launch documents
//! the middleware would receive, and show the quality-threshold policy.

use std::collections::BTreeMap;

use mcplan::engine::rc::{rc_on_failure, RcState};
use mcplan::engine::{emit_middleware_config, parse_machine_file, plan, simulate, PlanOptions};
use mcplan::patterns::{embed_rc, Role};
use mcplan::perf::parse_perf_file;
use mcplan::{parse_model, unfold};

const MODEL: &str = include_str!("data/replicas.mmd");
const PERF: &str = include_str!("data/replicas.perf");
const MACHINE: &str = include_str!("data/cluster.machine");

fn main() {
    let model = parse_model(MODEL).expect("fixture parses");
    let graph = unfold(&model, 1, &BTreeMap::new()).expect("fixture unfolds");
    let embedding = embed_rc(&graph, &model).expect("ensemble embeds");

    let perf_refs = parse_perf_file(PERF).expect("fixture parses");
    let perf: BTreeMap<Role, _> = [
        (Role::Replica, perf_refs["walker"].clone()),
        (Role::Master, perf_refs["collect"].clone()),
    ]
    .into_iter()
    .collect();
    let machine = parse_machine_file(MACHINE).expect("machine parses");

    // Two cores per replica: four replicas share eight cores in one wave.
    let options = PlanOptions { replica_cores: 2, ..Default::default() };
    let plan = plan(&embedding, &graph, &perf, &machine, &options).expect("ensemble plans");
    println!("period {} s across {} cores", plan.period, plan.allocated_cores());
    for (replica, cores) in &plan.replica_slots {
        println!("  replica {replica} -> cores {}", cores.ranges());
    }

    println!("\nlaunch documents:");
    for (name, body) in emit_middleware_config(&plan) {
        println!("--- {name}");
        print!("{body}");
    }

    let report = simulate(&plan, &graph, &perf, &machine, 7).expect("within retry budget");
    println!(
        "\nsimulated: makespan {} s, quality {:?}",
        report.makespan,
        report.quality.expect("replica runs report quality")
    );

    // The master can fold a partial ensemble as long as enough replicas
    // survive; below the threshold the run restarts the lost replica.
    println!("\nquality policy at threshold 0.7, 4 replicas:");
    for failed in 0..3 {
        let state = RcState { n_replicas: 4, completed: 0, failed, quality_threshold: 0.7 };
        println!("  {failed} failed -> {:?}", rc_on_failure(&state));
    }
}
