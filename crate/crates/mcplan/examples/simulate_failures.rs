//! Plan a pipeline onto a partition with a block of flaky cores, then run
//! the failure-injecting simulator and show where the retries landed.

use std::collections::BTreeMap;

use mcplan::engine::{parse_machine_file, plan, simulate, PlanOptions};
use mcplan::patterns::{embed_es, Role};
use mcplan::perf::parse_perf_file;
use mcplan::{parse_model, unfold};

const MODEL: &str = include_str!("data/pipeline.mmd");
const PERF: &str = include_str!("data/pipeline.perf");

// Cores 5-8 fail fifty times as often as the rest.
const MACHINE: &str = "\
nodes=21
cores_per_node=1
f_levels=0.5,0.75,1
p_static=1
p_dyn=3
alpha=3
lambda_core=2e-5
reliability=5..8:50
";

fn main() {
    let model = parse_model(MODEL).expect("fixture parses");
    let jobs = 20;
    let graph = unfold(&model, jobs, &BTreeMap::new()).expect("fixture unfolds");
    let embedding = embed_es(&graph, &model, "solver").expect("pipeline embeds");

    let perf_refs = parse_perf_file(PERF).expect("fixture parses");
    let perf: BTreeMap<Role, _> = [
        (Role::Primary, perf_refs["solver"].clone()),
        (Role::SerialAux, perf_refs["analysis"].clone()),
    ]
    .into_iter()
    .collect();
    let machine = parse_machine_file(MACHINE).expect("machine parses");

    let plan = plan(&embedding, &graph, &perf, &machine, &PlanOptions::default())
        .expect("pipeline plans");
    println!("plan: {} mode, period {} s", plan.mode, plan.period);

    let report = simulate(&plan, &graph, &perf, &machine, 42).expect("within retry budget");
    println!(
        "simulated {jobs} jobs: makespan {} s, {} J, observed efficiency {:.3}",
        report.makespan, report.energy_joules, report.efficiency_observed
    );

    println!("\n{} failures:", report.failures.len());
    for f in &report.failures {
        println!("  t={:>8.2}  {} ({} cores)", f.time, f.task, f.cores);
    }
    println!("\ntasks that needed retries:");
    for (task, stats) in &report.per_task {
        if stats.retries > 0 {
            println!("  {task}: {} retries, done at {:.2} s", stats.retries, stats.end);
        }
    }
}
