//! Drive the micro-result database with a macro-model query stream and show
//! how reuse and interpolation replace most micro launches.

use mcplan::engine::hmc::replay_queries;
use mcplan::engine::{HmcDatabase, HmcPolicy, Interpolation};

fn main() {
    // Scalar micro model f(x) = x^2. The macro model scans a coarse grid,
    // then revisits it, then asks for the midpoints between grid nodes.
    let coarse: Vec<Vec<f64>> = (0..=8).map(|i| vec![-1.0 + i as f64 * 0.25]).collect();
    let midpoints: Vec<Vec<f64>> = (0..8).map(|i| vec![-0.875 + i as f64 * 0.25]).collect();
    let queries: Vec<Vec<f64>> =
        coarse.iter().chain(coarse.iter()).chain(midpoints.iter()).cloned().collect();

    let micro_cost_s = 2.0;
    let micro = |x: &[f64]| vec![x[0] * x[0]];
    let no_cache = queries.len() as f64 * micro_cost_s;

    for (label, interpolation) in [
        ("reuse only", Interpolation::None),
        ("reuse + interpolation", Interpolation::LinearWithinHull),
    ] {
        let policy = HmcPolicy { delta_reuse: 0.01, interpolation, ..Default::default() };
        let mut db = HmcDatabase::new(policy).expect("policy is sane");
        let trace = replay_queries(&mut db, &queries, micro_cost_s, micro).expect("replays");
        println!(
            "{label:<22} launches={:<3} reuses={:<3} interpolations={:<3} time {:>3.0} s (vs {:.0} s uncached)",
            trace.launches, trace.reuses, trace.interpolations, trace.time_s, no_cache
        );
    }

    // Midpoint queries answered by interpolation carry an O(h^2) error here:
    // f is quadratic, the cache is linear between neighbors.
    let policy = HmcPolicy { delta_reuse: 0.01, ..Default::default() };
    let mut db = HmcDatabase::new(policy).expect("policy is sane");
    replay_queries(&mut db, &coarse, micro_cost_s, micro).expect("replays");
    match db.decide(&[0.125]).expect("dimensions match") {
        mcplan::engine::HmcDecision::Interpolated(v) => {
            println!("\nf(0.125) interpolated as {:.5}, true value {:.5}", v[0], 0.125f64 * 0.125);
        }
        other => println!("\nunexpected decision: {other:?}"),
    }

    // Precompute: fill the largest gaps ahead of an anticipated fine scan.
    // Without interpolation, anything beyond the reuse radius would launch.
    let policy = HmcPolicy {
        delta_reuse: 0.05,
        interpolation: Interpolation::None,
        ..Default::default()
    };
    let mut db = HmcDatabase::new(policy).expect("policy is sane");
    for x in [-1.0, 0.0, 1.0] {
        db.insert(vec![x], micro(&[x])).expect("fresh point");
    }
    let anticipated: Vec<Vec<f64>> = (0..=16).map(|i| vec![-1.0 + i as f64 * 0.125]).collect();
    let picked = db.precompute_candidates(&anticipated, 4).expect("same dimension");
    println!(
        "precompute fills the {} widest gaps first: {:?}",
        picked.len(),
        picked.iter().map(|p| p[0]).collect::<Vec<_>>()
    );
}
