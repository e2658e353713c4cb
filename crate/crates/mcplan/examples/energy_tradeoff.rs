//! When two interleaved stages have unequal periods, the shorter side can
//! run at a lower frequency without stretching the cycle. This example
//! prints the full frequency grid and the assignment the optimizer picks.

use mcplan::perf::{energy_optimize_interleave, optimal_split, EnergyModel, PerfModel};

fn main() {
    // A solver that scales perfectly against a fixed 25 s analysis stage:
    // at 21 cores the solver side needs 50 s, so the analysis core idles
    // half of every cycle unless it slows down.
    let solver = PerfModel::perfect(1000.0).expect("positive cost");
    let analysis = PerfModel::serial(25.0).expect("positive cost");
    let alloc = optimal_split(&solver, &analysis, 21).expect("cost known");
    println!(
        "split: {} solver cores ({} s) vs {} analysis core(s) ({} s), period {} s",
        alloc.p1, alloc.t_pr, alloc.p2, alloc.t_aux, alloc.period
    );

    let energy_model = EnergyModel::new(1.0, 3.0, 3.0, vec![0.5, 0.75, 1.0]).expect("levels ok");
    let energy = |f_pr: f64, f_aux: f64| {
        alloc.p1 as f64 * energy_model.power(f_pr) * (alloc.t_pr / f_pr)
            + alloc.p2 as f64 * energy_model.power(f_aux) * (alloc.t_aux / f_aux)
    };

    println!("\n{:>6} {:>6} {:>10} {:>10}", "f_pr", "f_aux", "cycle_s", "energy_J");
    for &f_pr in &energy_model.f_levels {
        for &f_aux in &energy_model.f_levels {
            let cycle = (alloc.t_pr / f_pr).max(alloc.t_aux / f_aux);
            let tag = if cycle > alloc.period { "  (slower)" } else { "" };
            println!("{f_pr:>6} {f_aux:>6} {cycle:>10.2} {:>10.2}{tag}", energy(f_pr, f_aux));
        }
    }

    let picked = energy_optimize_interleave(&alloc, &energy_model, 0.0);
    println!(
        "\npicked f_pr={} f_aux={}: {:.2} J instead of {:.2} J at full tilt, same {} s cycle",
        picked.f_pr,
        picked.f_aux,
        energy(picked.f_pr, picked.f_aux),
        energy(1.0, 1.0),
        alloc.period
    );
}
