//! Pattern detection, role embedding, and generic pattern templates.
//!
//! Three patterns cover the multiscale applications this planner targets:
//!
//! * extreme scaling (`ES`): one primary submodel dominates the cost and
//!   gets nearly all processors; the rest are auxiliaries.
//! * heterogeneous multiscale computing (`HMC`): a macro model drives a
//!   dynamically sized swarm of micro runs through a shared database.
//! * replica computing (`RC`): many instances of the same submodel run
//!   independently and feed a master that combines them. Static replicas run
//!   once; dynamic replicas are respawned from master feedback; exchange
//!   replicas trade state through the master while running.
//!
//! [`classify`] maps a model onto one of these by structure first (dynamic
//! multiplicity, replica fan-in) and cost dominance second. [`embed_es`]
//! assigns task-graph nodes to template roles. [`template`] materializes a
//! small canonical graph per pattern for documentation and as an embedding
//! target.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{CouplingKind, Multiplicity, MultiscaleModel, PatternHint, RoleHint};
use crate::taskgraph::{NodeId, Phase, TaskGraph, TaskNode};

pub const DEFAULT_THETA_ES: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum PatternKind {
    Es,
    Hmc,
    RcStatic,
    RcDynamic,
    RcExchange,
}

impl PatternKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PatternKind::Es => "ES",
            PatternKind::Hmc => "HMC",
            PatternKind::RcStatic => "RC-static",
            PatternKind::RcDynamic => "RC-dynamic",
            PatternKind::RcExchange => "RC-exchange",
        }
    }

    /// Pattern forced by a model-file hint, if any.
    pub fn from_hint(hint: PatternHint) -> Option<PatternKind> {
        match hint {
            PatternHint::Auto => None,
            PatternHint::Es => Some(PatternKind::Es),
            PatternHint::Hmc => Some(PatternKind::Hmc),
            PatternHint::RcStatic => Some(PatternKind::RcStatic),
            PatternHint::RcDynamic => Some(PatternKind::RcDynamic),
            PatternHint::RcExchange => Some(PatternKind::RcExchange),
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ES" => Ok(PatternKind::Es),
            "HMC" => Ok(PatternKind::Hmc),
            "RC-static" => Ok(PatternKind::RcStatic),
            "RC-dynamic" => Ok(PatternKind::RcDynamic),
            "RC-exchange" => Ok(PatternKind::RcExchange),
            other => Err(format!(
                "unknown pattern `{other}` (expected ES, HMC, RC-static, RC-dynamic or RC-exchange)"
            )),
        }
    }
}

/// Template role a submodel can play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Role {
    /// ES primary model, written `A`.
    Primary,
    /// ES serial auxiliary, written `B_s`.
    SerialAux,
    /// ES parallel auxiliary, written `B_p`.
    ParallelAux,
    Macro,
    Database,
    Micro,
    /// RC replica, written `A_1`.
    Replica,
    /// RC master, written `A_2`.
    Master,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Primary => "A",
            Role::SerialAux => "B_s",
            Role::ParallelAux => "B_p",
            Role::Macro => "macro",
            Role::Database => "database",
            Role::Micro => "micro",
            Role::Replica => "A_1",
            Role::Master => "A_2",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Assignment of task-graph structure to the roles of one pattern template.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternEmbedding {
    pub kind: PatternKind,
    pub role_of: BTreeMap<String, Role>,
    /// Number of repetitions of the template's repeating unit in the graph.
    pub unit_count: u32,
    /// Nodes outside the repeating units: initialization and post-processing.
    pub residual: Vec<NodeId>,
}

impl PatternEmbedding {
    pub fn role(&self, submodel: &str) -> Option<Role> {
        self.role_of.get(submodel).copied()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ClassifyError {
    #[error("both a dynamic-multiplicity submodel and a replica group are present; pass an explicit pattern to disambiguate")]
    Ambiguous { candidates: Vec<PatternKind> },
    #[error("no pattern matched: {reason}")]
    Unclassified { reason: String },
    #[error("submodel `{0}` needs a positive cost")]
    BadCost(String),
    #[error("dominance threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EmbedError {
    #[error("submodel `{0}` does not exist")]
    UnknownSubmodel(String),
    #[error("submodel `{0}` has no repeating (per-cycle) nodes in the graph")]
    NoRepeatingUnit(String),
    #[error("model does not have the expected {0} structure: {1}")]
    StructureMismatch(&'static str, String),
}

fn multiplicity_factor(m: Multiplicity) -> f64 {
    match m {
        Multiplicity::Fixed(k) => k as f64,
        Multiplicity::Dynamic => 1.0,
    }
}

/// True when neither the submodel author nor the hint claims a non-replica
/// role for `s`.
fn replica_candidate_role(hint: Option<RoleHint>) -> bool {
    matches!(hint, None | Some(RoleHint::Replica) | Some(RoleHint::None))
}

/// HMC structure: the single dynamic-multiplicity submodel plus its single
/// per-cycle neighbor.
fn detect_hmc(m: &MultiscaleModel) -> Option<(String, String)> {
    let mut dynamic = m
        .submodels
        .iter()
        .filter(|s| s.multiplicity.is_dynamic())
        .map(|s| s.id.clone());
    let micro = dynamic.next()?;
    if dynamic.next().is_some() {
        return None;
    }
    let mut neighbors = BTreeSet::new();
    for c in &m.couplings {
        if c.kind != CouplingKind::PerCycle {
            continue;
        }
        if c.from == micro {
            neighbors.insert(c.to.clone());
        } else if c.to == micro {
            neighbors.insert(c.from.clone());
        }
    }
    if neighbors.len() == 1 {
        let macro_side = neighbors.into_iter().next().expect("one neighbor");
        Some((micro, macro_side))
    } else {
        None
    }
}

/// RC structure: a fixed k >= 2 submodel whose couplings all go to a single
/// master, which it feeds. Instances never couple spatially in this format,
/// so independence among replicas is implied. Returns (replica, master,
/// variant).
fn detect_rc(m: &MultiscaleModel) -> Result<Option<(String, String, PatternKind)>, ClassifyError> {
    let mut hits = Vec::new();
    for s in &m.submodels {
        if !matches!(s.multiplicity, Multiplicity::Fixed(k) if k >= 2) {
            continue;
        }
        if !replica_candidate_role(s.role_hint) {
            continue;
        }
        let mut partners = BTreeSet::new();
        for c in &m.couplings {
            if c.from == s.id {
                partners.insert(c.to.clone());
            } else if c.to == s.id {
                partners.insert(c.from.clone());
            }
        }
        if partners.len() != 1 {
            continue;
        }
        let master = partners.into_iter().next().expect("one partner");
        let master_sub = m.submodel(&master).expect("endpoints validated");
        if master_sub.multiplicity != Multiplicity::Fixed(1) {
            continue;
        }
        let feeds_master = m.couplings.iter().any(|c| {
            c.from == s.id
                && c.to == master
                && matches!(c.kind, CouplingKind::PerCycle | CouplingKind::Final)
        });
        if !feeds_master {
            continue;
        }
        let per_cycle_back = m.couplings.iter().any(|c| {
            c.from == master && c.to == s.id && c.kind == CouplingKind::PerCycle
        });
        let per_cycle_forth = m
            .couplings
            .iter()
            .any(|c| c.from == s.id && c.to == master && c.kind == CouplingKind::PerCycle);
        let init_back = m
            .couplings
            .iter()
            .any(|c| c.from == master && c.to == s.id && c.kind == CouplingKind::Init);
        let variant = if per_cycle_back && per_cycle_forth {
            PatternKind::RcExchange
        } else if init_back {
            PatternKind::RcDynamic
        } else {
            PatternKind::RcStatic
        };
        hits.push((s.id.clone(), master, variant));
    }
    match hits.len() {
        0 => Ok(None),
        1 => Ok(hits.pop()),
        _ => Err(ClassifyError::Unclassified {
            reason: "multiple replica groups found; pass an explicit pattern".into(),
        }),
    }
}

/// Submodel with the largest aggregate cost share (cost times multiplicity)
/// and that share. Dynamic multiplicities count once.
pub fn dominant_submodel(
    m: &MultiscaleModel,
    costs: &BTreeMap<String, f64>,
) -> Result<(String, f64), ClassifyError> {
    let mut total = 0.0;
    let mut best: Option<(String, f64)> = None;
    for s in &m.submodels {
        let cost = *costs.get(&s.id).ok_or_else(|| ClassifyError::BadCost(s.id.clone()))?;
        if !(cost.is_finite() && cost > 0.0) {
            return Err(ClassifyError::BadCost(s.id.clone()));
        }
        let aggregate = cost * multiplicity_factor(s.multiplicity);
        total += aggregate;
        let better = best.as_ref().map_or(true, |(_, b)| aggregate > *b);
        if better {
            best = Some((s.id.clone(), aggregate));
        }
    }
    let (id, aggregate) =
        best.ok_or_else(|| ClassifyError::Unclassified { reason: "model has no submodels".into() })?;
    Ok((id, aggregate / total))
}

/// Decides which pattern a model follows.
///
/// A non-auto hint in the model file wins outright. Otherwise structure is
/// checked first: a single dynamic-multiplicity submodel talking to one
/// neighbor means HMC; a fixed k >= 2 submodel feeding a single master means
/// RC (exchange when state flows both ways per cycle, dynamic when the
/// master initializes replicas, static otherwise). Both shapes at once is an
/// error, not a guess. With no structural match, the model is ES when the
/// largest aggregate cost share reaches `theta_es`.
pub fn classify(
    m: &MultiscaleModel,
    costs: &BTreeMap<String, f64>,
    theta_es: f64,
) -> Result<PatternKind, ClassifyError> {
    if let Some(kind) = m.pattern_hint.and_then(PatternKind::from_hint) {
        return Ok(kind);
    }
    if !(theta_es > 0.0 && theta_es <= 1.0) {
        return Err(ClassifyError::BadThreshold(theta_es));
    }
    let hmc = detect_hmc(m);
    let rc = detect_rc(m)?;
    match (hmc, rc) {
        (Some(_), Some((_, _, variant))) => Err(ClassifyError::Ambiguous {
            candidates: vec![PatternKind::Hmc, variant],
        }),
        (Some(_), None) => Ok(PatternKind::Hmc),
        (None, Some((_, _, variant))) => Ok(variant),
        (None, None) => {
            if m.submodels.iter().any(|s| s.multiplicity.is_dynamic()) {
                return Err(ClassifyError::Unclassified {
                    reason: "a dynamic-multiplicity submodel exists but is not coupled like a micro model"
                        .into(),
                });
            }
            let (_, share) = dominant_submodel(m, costs)?;
            if share >= theta_es {
                Ok(PatternKind::Es)
            } else {
                Err(ClassifyError::Unclassified {
                    reason: format!(
                        "largest cost share {share:.3} is below the dominance threshold {theta_es}"
                    ),
                })
            }
        }
    }
}

fn cycle_nodes_by_submodel(g: &TaskGraph) -> BTreeMap<&str, Vec<&TaskNode>> {
    let mut map: BTreeMap<&str, Vec<&TaskNode>> = BTreeMap::new();
    for n in g.nodes() {
        if n.phase == Phase::Cycle {
            map.entry(n.submodel.as_str()).or_default().push(n);
        }
    }
    map
}

fn residual_nodes(g: &TaskGraph) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = g
        .nodes()
        .iter()
        .filter(|n| n.phase != Phase::Cycle)
        .map(|n| n.id.clone())
        .collect();
    out.sort();
    out
}

/// Embeds an unfolded graph into the ES template around `primary`.
///
/// A submodel whose per-cycle nodes are ordered against the primary's within
/// the same iteration sits on the serial path (`B_s`); one that can run
/// concurrently with the primary is a parallel auxiliary (`B_p`).
/// Initialization and post-processing nodes are residual.
pub fn embed_es(
    g: &TaskGraph,
    m: &MultiscaleModel,
    primary: &str,
) -> Result<PatternEmbedding, EmbedError> {
    if m.submodel(primary).is_none() {
        return Err(EmbedError::UnknownSubmodel(primary.to_string()));
    }
    let by_submodel = cycle_nodes_by_submodel(g);
    let primary_nodes = by_submodel
        .get(primary)
        .ok_or_else(|| EmbedError::NoRepeatingUnit(primary.to_string()))?;
    let unit_count = primary_nodes
        .iter()
        .map(|n| n.iteration)
        .collect::<BTreeSet<_>>()
        .len() as u32;

    let mut role_of = BTreeMap::new();
    role_of.insert(primary.to_string(), Role::Primary);
    for (&sub, nodes) in &by_submodel {
        if sub == primary {
            continue;
        }
        let mut comparable = false;
        'outer: for a in primary_nodes.iter() {
            for b in nodes {
                if a.iteration != b.iteration {
                    continue;
                }
                if g.has_path(&a.id, &b.id) || g.has_path(&b.id, &a.id) {
                    comparable = true;
                    break 'outer;
                }
            }
        }
        let role = if comparable { Role::SerialAux } else { Role::ParallelAux };
        role_of.insert(sub.to_string(), role);
    }

    Ok(PatternEmbedding {
        kind: PatternKind::Es,
        role_of,
        unit_count,
        residual: residual_nodes(g),
    })
}

/// Embeds an unfolded graph into the HMC template. The dynamic submodel is
/// the micro role; its per-cycle neighbor is the database when a third
/// submodel exists behind it, otherwise the macro directly.
pub fn embed_hmc(g: &TaskGraph, m: &MultiscaleModel) -> Result<PatternEmbedding, EmbedError> {
    let (micro, neighbor) = detect_hmc(m).ok_or(EmbedError::StructureMismatch(
        "HMC",
        "expected exactly one dynamic-multiplicity submodel with a single per-cycle neighbor"
            .to_string(),
    ))?;
    let mut role_of = BTreeMap::new();
    role_of.insert(micro.clone(), Role::Micro);
    let others: Vec<&str> = m
        .submodels
        .iter()
        .map(|s| s.id.as_str())
        .filter(|id| *id != micro && *id != neighbor)
        .collect();
    if others.is_empty() {
        role_of.insert(neighbor, Role::Macro);
    } else if others.len() == 1 {
        role_of.insert(neighbor, Role::Database);
        role_of.insert(others[0].to_string(), Role::Macro);
    } else {
        return Err(EmbedError::StructureMismatch(
            "HMC",
            format!("expected at most three submodels, found {}", m.submodels.len()),
        ));
    }
    let by_submodel = cycle_nodes_by_submodel(g);
    let unit_count = role_of
        .keys()
        .filter_map(|sub| by_submodel.get(sub.as_str()))
        .map(|nodes| nodes.iter().map(|n| n.iteration).collect::<BTreeSet<_>>().len() as u32)
        .max()
        .unwrap_or(0);
    Ok(PatternEmbedding { kind: PatternKind::Hmc, role_of, unit_count, residual: residual_nodes(g) })
}

/// Embeds an unfolded graph into the RC template: the replicated submodel is
/// `A_1`, the master `A_2`. The unit count is the replica multiplicity.
pub fn embed_rc(g: &TaskGraph, m: &MultiscaleModel) -> Result<PatternEmbedding, EmbedError> {
    let (replica, master, variant) = detect_rc(m)
        .map_err(|e| EmbedError::StructureMismatch("RC", e.to_string()))?
        .ok_or(EmbedError::StructureMismatch(
            "RC",
            "expected a fixed multiplicity >= 2 submodel feeding a single master".to_string(),
        ))?;
    if m.submodels.len() > 2 {
        return Err(EmbedError::StructureMismatch(
            "RC",
            "expected only the replica and master submodels".to_string(),
        ));
    }
    let unit_count = match m.submodel(&replica).expect("detected").multiplicity {
        Multiplicity::Fixed(k) => k,
        Multiplicity::Dynamic => unreachable!("replicas have fixed multiplicity"),
    };
    let mut role_of = BTreeMap::new();
    role_of.insert(replica, Role::Replica);
    role_of.insert(master, Role::Master);
    Ok(PatternEmbedding { kind: variant, role_of, unit_count, residual: residual_nodes(g) })
}

/// Role multiplicities for [`template`]. Fields irrelevant to the requested
/// kind are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemplateParams {
    pub serial_aux: bool,
    pub parallel_aux: bool,
    pub micro_slots: u32,
    pub replicas: u32,
    /// Replica respawn rounds (dynamic variant).
    pub feedback_rounds: u32,
    /// Iterations between state exchanges (exchange variant).
    pub exchange_interval: u32,
}

impl Default for TemplateParams {
    fn default() -> Self {
        TemplateParams {
            serial_aux: true,
            parallel_aux: true,
            micro_slots: 2,
            replicas: 3,
            feedback_rounds: 2,
            exchange_interval: 2,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid template parameters: {0}")]
pub struct TemplateError(String);

/// Materializes the canonical graph for a pattern: one repeating unit for ES
/// and HMC, the full replica-to-master shape for RC. The output is always
/// acyclic; cross-unit edges are not drawn.
pub fn template(kind: PatternKind, params: &TemplateParams) -> Result<TaskGraph, TemplateError> {
    let mut g = TaskGraph::new();
    let add = |g: &mut TaskGraph, sub: &str, inst: u32, iter: u32| -> NodeId {
        let node = TaskNode::labeled(sub, inst, iter, Phase::Cycle);
        let id = node.id.clone();
        g.add_node(node).expect("template nodes are distinct");
        id
    };
    let link = |g: &mut TaskGraph, from: &NodeId, to: &NodeId| {
        g.add_edge(from, to, 0).expect("template edges are well formed");
    };
    match kind {
        PatternKind::Es => {
            let a = add(&mut g, Role::Primary.as_str(), 0, 0);
            let sink = if params.serial_aux {
                let bs = add(&mut g, Role::SerialAux.as_str(), 0, 0);
                link(&mut g, &a, &bs);
                Some(bs)
            } else {
                None
            };
            if params.parallel_aux {
                let bp = add(&mut g, Role::ParallelAux.as_str(), 0, 0);
                if let Some(bs) = &sink {
                    link(&mut g, &bp, bs);
                }
            }
        }
        PatternKind::Hmc => {
            if params.micro_slots < 1 {
                return Err(TemplateError("HMC template needs at least one micro slot".into()));
            }
            let mac = add(&mut g, Role::Macro.as_str(), 0, 0);
            let dispatch = add(&mut g, Role::Database.as_str(), 0, 0);
            let collect = add(&mut g, Role::Database.as_str(), 0, 1);
            link(&mut g, &mac, &dispatch);
            for i in 0..params.micro_slots {
                let micro = add(&mut g, Role::Micro.as_str(), i, 0);
                link(&mut g, &dispatch, &micro);
                link(&mut g, &micro, &collect);
            }
        }
        PatternKind::RcStatic => {
            if params.replicas < 1 {
                return Err(TemplateError("RC template needs at least one replica".into()));
            }
            let master = add(&mut g, Role::Master.as_str(), 0, 0);
            for i in 0..params.replicas {
                let r = add(&mut g, Role::Replica.as_str(), i, 0);
                link(&mut g, &r, &master);
            }
        }
        PatternKind::RcDynamic => {
            if params.replicas < 1 || params.feedback_rounds < 1 {
                return Err(TemplateError(
                    "RC dynamic template needs at least one replica and one round".into(),
                ));
            }
            let mut prev_master: Option<NodeId> = None;
            for round in 0..params.feedback_rounds {
                let master = add(&mut g, Role::Master.as_str(), 0, round);
                for i in 0..params.replicas {
                    let r = add(&mut g, Role::Replica.as_str(), i, round);
                    if let Some(pm) = &prev_master {
                        link(&mut g, pm, &r);
                    }
                    link(&mut g, &r, &master);
                }
                prev_master = Some(master);
            }
        }
        PatternKind::RcExchange => {
            if params.replicas < 1 || params.exchange_interval < 1 {
                return Err(TemplateError(
                    "RC exchange template needs at least one replica and a positive interval".into(),
                ));
            }
            let master = add(&mut g, Role::Master.as_str(), 0, params.exchange_interval - 1);
            for i in 0..params.replicas {
                let mut prev: Option<NodeId> = None;
                for k in 0..params.exchange_interval {
                    let r = add(&mut g, Role::Replica.as_str(), i, k);
                    if let Some(p) = &prev {
                        link(&mut g, p, &r);
                    }
                    prev = Some(r);
                }
                link(&mut g, prev.as_ref().expect("interval >= 1"), &master);
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::taskgraph::{topological_order, unfold};
    use proptest::prelude::*;

    const ISR3D: &str = "\
model isr3d
submodel smc dt=1s total=10s dx=1mm extent=10mm
submodel bf dt=1ms total=1s dx=10um extent=10mm
submodel dd dt=1ms total=1s dx=10um extent=10mm
couple smc -> bf kind=per_cycle
couple smc -> dd kind=per_cycle
couple bf -> smc kind=per_cycle
couple dd -> smc kind=per_cycle
couple bf -> smc kind=init
";

    const HMC_MODEL: &str = "\
model greedy
submodel lattice dt=1s total=100s dx=1mm extent=1m role=macro
submodel cache dt=1s total=100s dx=1mm extent=1m
submodel pore dt=1us total=1ms dx=1um extent=1mm multiplicity=dynamic role=micro
couple lattice -> cache kind=per_cycle
couple cache -> pore kind=per_cycle
couple pore -> cache kind=per_cycle
couple lattice -> cache kind=init
";

    const RC_STATIC_MODEL: &str = "\
model ensemble
submodel walker dt=1s total=100s dx=1mm extent=1m multiplicity=100
submodel collector dt=1s total=1s dx=1mm extent=1m role=master
couple walker -> collector kind=final
";

    fn isr3d_costs() -> BTreeMap<String, f64> {
        [("bf", 1000.0), ("dd", 10.0), ("smc", 1.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    #[test]
    fn classifies_dominant_primary_as_es() {
        let m = parse_model(ISR3D).unwrap();
        let kind = classify(&m, &isr3d_costs(), DEFAULT_THETA_ES).unwrap();
        assert_eq!(kind, PatternKind::Es);
        let (id, share) = dominant_submodel(&m, &isr3d_costs()).unwrap();
        assert_eq!(id, "bf");
        assert!((share - 1000.0 / 1011.0).abs() < 1e-12);
    }

    #[test]
    fn classifies_dynamic_micro_as_hmc() {
        let m = parse_model(HMC_MODEL).unwrap();
        let costs = BTreeMap::new(); // structure wins before costs are read
        assert_eq!(classify(&m, &costs, DEFAULT_THETA_ES).unwrap(), PatternKind::Hmc);
    }

    #[test]
    fn classifies_replica_fanin_as_rc() {
        let m = parse_model(RC_STATIC_MODEL).unwrap();
        let costs = BTreeMap::new();
        assert_eq!(classify(&m, &costs, DEFAULT_THETA_ES).unwrap(), PatternKind::RcStatic);
    }

    #[test]
    fn rc_variant_detection() {
        let exchange = "\
model rex
submodel walker dt=1s total=10s dx=1m extent=1m multiplicity=8
submodel hub dt=1s total=10s dx=1m extent=1m
couple walker -> hub kind=per_cycle
couple hub -> walker kind=per_cycle
couple hub -> walker kind=init
";
        let m = parse_model(exchange).unwrap();
        assert_eq!(
            classify(&m, &BTreeMap::new(), DEFAULT_THETA_ES).unwrap(),
            PatternKind::RcExchange
        );

        let dynamic = "\
model rdyn
submodel walker dt=1s total=10s dx=1m extent=1m multiplicity=8
submodel hub dt=1s total=10s dx=1m extent=1m
couple walker -> hub kind=final
couple hub -> walker kind=init
";
        let m = parse_model(dynamic).unwrap();
        assert_eq!(
            classify(&m, &BTreeMap::new(), DEFAULT_THETA_ES).unwrap(),
            PatternKind::RcDynamic
        );
    }

    #[test]
    fn role_hint_blocks_replica_candidacy() {
        let text = "\
model susp
submodel f dt=1s total=10s dx=1m extent=1m role=primary
submodel p dt=1s total=10s dx=1m extent=1m multiplicity=2 role=auxiliary
couple p -> f kind=per_cycle
couple f -> p kind=per_cycle
couple f -> p kind=init
";
        let m = parse_model(text).unwrap();
        let costs: BTreeMap<String, f64> =
            [("f".to_string(), 1000.0), ("p".to_string(), 10.0)].into_iter().collect();
        assert_eq!(classify(&m, &costs, DEFAULT_THETA_ES).unwrap(), PatternKind::Es);
    }

    #[test]
    fn hint_overrides_structure() {
        let mut text = RC_STATIC_MODEL.to_string();
        text.push_str("pattern RC-exchange\n");
        let m = parse_model(&text).unwrap();
        assert_eq!(
            classify(&m, &BTreeMap::new(), DEFAULT_THETA_ES).unwrap(),
            PatternKind::RcExchange
        );
    }

    #[test]
    fn ambiguous_structures_are_an_error() {
        let text = "\
model both
submodel driver dt=1s total=10s dx=1m extent=1m
submodel pore dt=1s total=10s dx=1m extent=1m multiplicity=dynamic
submodel walker dt=1s total=10s dx=1m extent=1m multiplicity=4
submodel hub dt=1s total=10s dx=1m extent=1m
couple driver -> pore kind=per_cycle
couple pore -> driver kind=per_cycle
couple walker -> hub kind=final
couple driver -> pore kind=init
";
        let m = parse_model(text).unwrap();
        let err = classify(&m, &BTreeMap::new(), DEFAULT_THETA_ES).unwrap_err();
        assert!(matches!(err, ClassifyError::Ambiguous { .. }), "{err:?}");
    }

    #[test]
    fn balanced_costs_stay_unclassified() {
        let text = "\
model flat
submodel a dt=1s total=10s dx=1m extent=1m
submodel b dt=1s total=10s dx=1m extent=1m
couple a -> b kind=per_cycle
couple b -> a kind=per_cycle
couple a -> b kind=init
";
        let m = parse_model(text).unwrap();
        let costs: BTreeMap<String, f64> =
            [("a".to_string(), 1.0), ("b".to_string(), 1.0)].into_iter().collect();
        let err = classify(&m, &costs, DEFAULT_THETA_ES).unwrap_err();
        assert!(matches!(err, ClassifyError::Unclassified { .. }), "{err:?}");
    }

    #[test]
    fn embed_es_isr3d_roles() {
        let m = parse_model(ISR3D).unwrap();
        let g = unfold(&m, 3, &BTreeMap::new()).unwrap();
        let emb = embed_es(&g, &m, "bf").unwrap();
        assert_eq!(emb.role("bf"), Some(Role::Primary));
        assert_eq!(emb.role("dd"), Some(Role::ParallelAux));
        assert_eq!(emb.role("smc"), Some(Role::SerialAux));
        assert_eq!(emb.unit_count, 3);
        assert_eq!(emb.residual.len(), 1);
        assert!(emb.residual[0].as_str().contains("init"));
    }

    #[test]
    fn embed_es_two_scale_chain_has_no_parallel_aux() {
        let text = "\
model susp
submodel f dt=1s total=10s dx=1m extent=1m
submodel p dt=1s total=10s dx=1m extent=1m multiplicity=2 role=auxiliary
couple p -> f kind=per_cycle
couple f -> p kind=per_cycle
couple f -> p kind=init
";
        let m = parse_model(text).unwrap();
        let g = unfold(&m, 2, &BTreeMap::new()).unwrap();
        let emb = embed_es(&g, &m, "f").unwrap();
        assert_eq!(emb.role("f"), Some(Role::Primary));
        assert_eq!(emb.role("p"), Some(Role::SerialAux));
        assert!(!emb.role_of.values().any(|r| *r == Role::ParallelAux));
    }

    #[test]
    fn embed_es_single_submodel_degenerates() {
        let text = "\
model solo
submodel a dt=1s total=10s dx=1m extent=1m
";
        let m = parse_model(text).unwrap();
        let g = unfold(&m, 4, &BTreeMap::new()).unwrap();
        let emb = embed_es(&g, &m, "a").unwrap();
        assert_eq!(emb.role_of.len(), 1);
        assert_eq!(emb.unit_count, 4);
    }

    #[test]
    fn embed_es_rejects_unknown_primary() {
        let m = parse_model(ISR3D).unwrap();
        let g = unfold(&m, 1, &BTreeMap::new()).unwrap();
        assert_eq!(
            embed_es(&g, &m, "nope").unwrap_err(),
            EmbedError::UnknownSubmodel("nope".into())
        );
    }

    #[test]
    fn embed_hmc_assigns_three_roles() {
        let m = parse_model(HMC_MODEL).unwrap();
        let counts: BTreeMap<String, u32> = [("pore".to_string(), 3)].into_iter().collect();
        let g = unfold(&m, 2, &counts).unwrap();
        let emb = embed_hmc(&g, &m).unwrap();
        assert_eq!(emb.role("lattice"), Some(Role::Macro));
        assert_eq!(emb.role("cache"), Some(Role::Database));
        assert_eq!(emb.role("pore"), Some(Role::Micro));
        assert_eq!(emb.unit_count, 2);
    }

    #[test]
    fn embed_rc_counts_replicas() {
        let m = parse_model(RC_STATIC_MODEL).unwrap();
        let g = unfold(&m, 1, &BTreeMap::new()).unwrap();
        let emb = embed_rc(&g, &m).unwrap();
        assert_eq!(emb.kind, PatternKind::RcStatic);
        assert_eq!(emb.role("walker"), Some(Role::Replica));
        assert_eq!(emb.role("collector"), Some(Role::Master));
        assert_eq!(emb.unit_count, 100);
    }

    #[test]
    fn templates_have_documented_shapes() {
        let params = TemplateParams::default();
        let es = template(PatternKind::Es, &params).unwrap();
        assert_eq!((es.nodes().len(), es.edges().len()), (3, 2));

        let es_bare = template(
            PatternKind::Es,
            &TemplateParams { serial_aux: false, parallel_aux: false, ..params },
        )
        .unwrap();
        assert_eq!(es_bare.nodes().len(), 1);

        let hmc = template(PatternKind::Hmc, &params).unwrap();
        assert_eq!((hmc.nodes().len(), hmc.edges().len()), (5, 5));

        let rc = template(PatternKind::RcStatic, &params).unwrap();
        assert_eq!((rc.nodes().len(), rc.edges().len()), (4, 3));

        let rd = template(PatternKind::RcDynamic, &params).unwrap();
        assert_eq!(rd.nodes().len() as u32, params.feedback_rounds * (params.replicas + 1));

        let rx = template(PatternKind::RcExchange, &params).unwrap();
        assert_eq!(rx.nodes().len() as u32, params.replicas * params.exchange_interval + 1);
    }

    #[test]
    fn pattern_kind_round_trips_through_strings() {
        for kind in [
            PatternKind::Es,
            PatternKind::Hmc,
            PatternKind::RcStatic,
            PatternKind::RcDynamic,
            PatternKind::RcExchange,
        ] {
            assert_eq!(kind.as_str().parse::<PatternKind>().unwrap(), kind);
        }
        assert!("nope".parse::<PatternKind>().is_err());
    }

    // -- properties ----------------------------------------------------------

    fn arb_chain_model() -> impl Strategy<Value = MultiscaleModel> {
        (2usize..6).prop_flat_map(|n| {
            Just({
                let mut text = String::from("model chain\n");
                for i in 0..n {
                    text.push_str(&format!("submodel s{i} dt=1s total=10s dx=1m extent=1m\n"));
                }
                for i in 1..n {
                    text.push_str(&format!("couple s{} -> s{} kind=per_cycle\n", i - 1, i));
                }
                text.push_str("couple s1 -> s0 kind=init\n");
                parse_model(&text).expect("generated model parses")
            })
        })
    }

    proptest! {
        #[test]
        fn classify_is_scale_invariant(m in arb_chain_model(), exp in -10i32..10, cycles in 1u32..4) {
            let _ = cycles;
            let mut costs = BTreeMap::new();
            for (i, s) in m.submodels.iter().enumerate() {
                costs.insert(s.id.clone(), if i == 0 { 4096.0 } else { 2.0 });
            }
            let base = classify(&m, &costs, DEFAULT_THETA_ES);
            let factor = 2.0f64.powi(exp);
            let scaled: BTreeMap<String, f64> =
                costs.iter().map(|(k, v)| (k.clone(), v * factor)).collect();
            let after = classify(&m, &scaled, DEFAULT_THETA_ES);
            prop_assert_eq!(base.is_ok(), after.is_ok());
            if let (Ok(a), Ok(b)) = (base, after) {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn embed_es_partitions_all_nodes(m in arb_chain_model(), cycles in 1u32..4) {
            let g = unfold(&m, cycles, &BTreeMap::new()).unwrap();
            let emb = embed_es(&g, &m, "s0").unwrap();
            for node in g.nodes() {
                let is_residual = emb.residual.contains(&node.id);
                let has_role = emb.role_of.contains_key(&node.submodel);
                if node.phase == Phase::Cycle {
                    prop_assert!(!is_residual && has_role, "cycle node {:?} unmapped", node.id);
                } else {
                    prop_assert!(is_residual, "non-cycle node {:?} not residual", node.id);
                }
            }
        }

        #[test]
        fn es_classification_implies_embeddable_primary(m in arb_chain_model(), cycles in 1u32..4) {
            let mut costs = BTreeMap::new();
            for (i, s) in m.submodels.iter().enumerate() {
                costs.insert(s.id.clone(), if i == 1 { 1e6 } else { 1.0 });
            }
            if classify(&m, &costs, DEFAULT_THETA_ES) == Ok(PatternKind::Es) {
                let (primary, _) = dominant_submodel(&m, &costs).unwrap();
                let g = unfold(&m, cycles, &BTreeMap::new()).unwrap();
                prop_assert!(embed_es(&g, &m, &primary).is_ok());
            }
        }

        #[test]
        fn templates_are_acyclic(
            kind_idx in 0usize..5,
            replicas in 1u32..6,
            micro_slots in 1u32..6,
            rounds in 1u32..4,
            interval in 1u32..4,
        ) {
            let kind = [
                PatternKind::Es,
                PatternKind::Hmc,
                PatternKind::RcStatic,
                PatternKind::RcDynamic,
                PatternKind::RcExchange,
            ][kind_idx];
            let params = TemplateParams {
                serial_aux: true,
                parallel_aux: true,
                micro_slots,
                replicas,
                feedback_rounds: rounds,
                exchange_interval: interval,
            };
            let g = template(kind, &params).unwrap();
            prop_assert!(topological_order(&g).is_ok());
        }
    }
}
