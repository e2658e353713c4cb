//! Sweep the core-split optimizer across partition sizes for a two-stage
//! pipeline and print how the split and both efficiency figures evolve.

use mcplan::perf::{es_efficiency, optimal_split, parse_perf_file};

const PERF: &str = include_str!("data/pipeline.perf");

fn main() {
    let models = parse_perf_file(PERF).expect("fixture parses");
    let (pr, aux) = (&models["solver"], &models["analysis"]);

    println!("{:>5} {:>5} {:>5} {:>10} {:>12} {:>18} {:>18}", "P", "P1", "P2", "mode", "period_s", "efficiency_exact", "efficiency_eq2");
    for p in [2u32, 4, 8, 16, 21, 32, 48, 64] {
        let split = optimal_split(pr, aux, p).expect("both stages have a cost");
        let eff = es_efficiency(pr, aux, p).expect("both stages have a cost");
        println!(
            "{p:>5} {:>5} {:>5} {:>10} {:>12.3} {:>18.4} {:>18.4}",
            split.p1, split.p2, split.mode, split.period, eff.exact, eff.approx
        );
    }

    // The fixed-cost analysis stage caps scaling: past the point where the
    // solver matches its 50 s, extra cores only shave the solver side.
    let split = optimal_split(pr, aux, 21).expect("cost known");
    println!(
        "\nat 21 cores the optimizer interleaves {} solver cores against {} analysis core(s), period {} s",
        split.p1, split.p2, split.period
    );
}
