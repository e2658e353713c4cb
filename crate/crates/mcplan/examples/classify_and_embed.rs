//! Classify three models into their computing patterns and embed each
//! unfolded graph, printing the role every submodel ends up with.

use std::collections::BTreeMap;

use mcplan::model::MultiscaleModel;
use mcplan::patterns::{classify, embed_es, embed_hmc, embed_rc, PatternEmbedding, PatternKind};
use mcplan::perf::{parse_perf_file, TimeModel};
use mcplan::{parse_model, unfold};

const CASES: [(&str, &str, &str); 3] = [
    ("isr3d", include_str!("data/isr3d.mmd"), include_str!("data/isr3d.perf")),
    ("hmc", include_str!("data/hmc.mmd"), include_str!("data/hmc.perf")),
    ("replicas", include_str!("data/replicas.mmd"), include_str!("data/replicas.perf")),
];

/// Single-core cost per submodel, the classifier's cost-share input.
fn submodel_costs(m: &MultiscaleModel, perf_text: &str) -> BTreeMap<String, f64> {
    let by_ref = parse_perf_file(perf_text).expect("perf fixture parses");
    m.submodels
        .iter()
        .map(|s| {
            let r = s.perf.as_deref().expect("fixture submodels carry perf refs");
            (s.id.clone(), by_ref[r].eval_time(1).expect("positive core count"))
        })
        .collect()
}

fn main() {
    for (name, model_text, perf_text) in CASES {
        let model = parse_model(model_text).expect("fixture parses");
        let costs = submodel_costs(&model, perf_text);
        let kind = classify(&model, &costs, 0.9).expect("fixtures are unambiguous");
        println!("{name}: pattern {kind}");

        // Dynamic submodels need an instance count before unfolding.
        let instances: BTreeMap<String, u32> = model
            .submodels
            .iter()
            .filter(|s| s.multiplicity.is_dynamic())
            .map(|s| (s.id.clone(), 2))
            .collect();
        let graph = unfold(&model, 2, &instances).expect("fixture unfolds");

        let embedding: PatternEmbedding = match kind {
            PatternKind::Es => {
                let (primary, _) = costs
                    .iter()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("nonempty model");
                embed_es(&graph, &model, primary)
            }
            PatternKind::Hmc => embed_hmc(&graph, &model),
            _ => embed_rc(&graph, &model),
        }
        .expect("classified models embed");

        for (submodel, role) in &embedding.role_of {
            println!("  {submodel:<10} -> {role}");
        }
        println!("  repeating units: {}\n", embedding.unit_count);
    }
}
