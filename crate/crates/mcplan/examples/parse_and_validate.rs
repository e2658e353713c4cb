//! Parse a model file, inspect its pieces, and show how validation
//! diagnostics map back to source lines.

use mcplan::model::{parse_model_with_map, validate_model};

const PIPELINE: &str = include_str!("data/pipeline.mmd");

fn main() {
    let (model, _) = parse_model_with_map(PIPELINE).expect("fixture parses");
    println!("model '{}':", model.name);
    for s in &model.submodels {
        let perf = s.perf.as_deref().unwrap_or("-");
        println!("  submodel {:<10} dt={}s total={}s perf={perf}", s.id, s.dt, s.t_total);
    }
    for c in &model.couplings {
        println!("  couple {} -> {} kind={}", c.from, c.to, c.kind);
    }
    assert!(validate_model(&model).is_empty());
    println!("  validates cleanly\n");

    // Grammatically fine, semantically broken: a time box smaller than its
    // own step, and two submodels locked in a cycle nothing can start.
    let broken = "\
model broken
submodel a dt=5s total=2s dx=1m extent=2m
submodel b dt=1s total=9s dx=1m extent=2m
couple a -> b kind=per_cycle
couple b -> a kind=per_cycle
";
    let (model, map) = parse_model_with_map(broken).expect("grammar is fine");
    println!("model '{}':", model.name);
    for d in validate_model(&model) {
        match d.line(&map) {
            Some(line) => println!("  line {line}: {d}"),
            None => println!("  {d}"),
        }
    }
}
