//! Turns a pattern embedding plus machine description into a concrete
//! execution plan.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::patterns::{PatternEmbedding, PatternKind, Role};
use crate::perf::{
    choose_mode, energy_optimize_interleave, optimal_split, ExecMode, PerfError, PerfModel,
    TimeModel, DEFAULT_R_SEQ,
};
use crate::taskgraph::{topological_order, Phase, TaskGraph};

use super::{CoreSet, ExecutionPlan, MachineModel, RecoveryPolicy, TaskAssignment};

pub const DEFAULT_QUALITY: f64 = 0.9;
pub const DEFAULT_MAX_RETRIES: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub r_seq: f64,
    pub slack_tol: f64,
    /// RC ensemble quality threshold.
    pub q: f64,
    /// Reserve an HMC micro slot even when no micro work is expected.
    pub precompute: bool,
    /// Force sequential or interleaved instead of choosing by model.
    pub mode_override: Option<ExecMode>,
    pub max_retries: u32,
    /// Cores per RC replica task.
    pub replica_cores: u32,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            r_seq: DEFAULT_R_SEQ,
            slack_tol: 0.0,
            q: DEFAULT_QUALITY,
            precompute: false,
            mode_override: None,
            max_retries: DEFAULT_MAX_RETRIES,
            replica_cores: 1,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlanError {
    #[error("embedding lacks required role {0}")]
    MissingRole(Role),
    #[error("no performance model for role {0}")]
    MissingPerf(Role),
    #[error("submodel `{0}` has no role in the embedding")]
    UnmappedSubmodel(String),
    #[error("infeasible plan: {0}")]
    Infeasible(String),
    #[error("task graph rejected: {0}")]
    Graph(String),
    #[error(transparent)]
    Perf(#[from] PerfError),
}

/// A performance model evaluated as `copies` back-to-back tasks.
struct Scaled<'a> {
    inner: &'a PerfModel,
    copies: f64,
}

impl TimeModel for Scaled<'_> {
    fn eval_time(&self, p: u32) -> Result<f64, PerfError> {
        Ok(self.copies * self.inner.eval_time(p)?)
    }
}

/// Serial composition of several scaled models; empty means zero time.
struct Group<'a>(Vec<Scaled<'a>>);

impl TimeModel for Group<'_> {
    fn eval_time(&self, p: u32) -> Result<f64, PerfError> {
        let mut total = 0.0;
        for m in &self.0 {
            total += m.eval_time(p)?;
        }
        Ok(total)
    }
}

/// Distinct (submodel, instance) pairs per role among cycle nodes.
fn instances_per_role(g: &TaskGraph, emb: &PatternEmbedding) -> BTreeMap<Role, u32> {
    let mut seen: BTreeMap<Role, BTreeSet<(&str, u32)>> = BTreeMap::new();
    for n in g.nodes() {
        if n.phase != Phase::Cycle {
            continue;
        }
        if let Some(role) = emb.role(&n.submodel) {
            seen.entry(role).or_default().insert((n.submodel.as_str(), n.instance));
        }
    }
    seen.into_iter().map(|(r, s)| (r, s.len() as u32)).collect()
}

fn require_perf<'a>(
    perf: &'a BTreeMap<Role, PerfModel>,
    role: Role,
) -> Result<&'a PerfModel, PlanError> {
    perf.get(&role).ok_or(PlanError::MissingPerf(role))
}

/// Computes per-task core sets, frequencies, start order, and recovery
/// policies for an embedded model on a machine.
///
/// ES splits the machine per the analytic optimizer and downclocks the slack
/// side; HMC pins the macro model and database and packs micro slots onto
/// the remaining cores; RC packs replicas into waves and runs the master on
/// the whole machine after the fan-in.
pub fn plan(
    embedding: &PatternEmbedding,
    g: &TaskGraph,
    perf: &BTreeMap<Role, PerfModel>,
    machine: &MachineModel,
    options: &PlanOptions,
) -> Result<ExecutionPlan, PlanError> {
    let order = topological_order(g).map_err(|e| PlanError::Graph(e.to_string()))?;
    let counts = instances_per_role(g, embedding);

    // Every node must belong to a role-mapped submodel.
    for n in g.nodes() {
        if embedding.role(&n.submodel).is_none() {
            return Err(PlanError::UnmappedSubmodel(n.submodel.clone()));
        }
    }

    let mut builder = match embedding.kind {
        PatternKind::Es => plan_es(embedding, g, perf, machine, options, &counts)?,
        PatternKind::Hmc => plan_hmc(embedding, g, perf, machine, options, &counts)?,
        PatternKind::RcStatic | PatternKind::RcDynamic | PatternKind::RcExchange => {
            plan_rc(embedding, g, perf, machine, options, &counts)?
        }
    };
    builder.order = order;
    builder.quality_threshold = options.q;
    builder.max_retries = options.max_retries;
    builder.role_of = embedding.role_of.clone();
    builder.pattern = embedding.kind;
    Ok(builder)
}

fn empty_plan() -> ExecutionPlan {
    ExecutionPlan {
        pattern: PatternKind::Es,
        mode: ExecMode::Sequential,
        assignments: BTreeMap::new(),
        order: Vec::new(),
        recovery: BTreeMap::new(),
        role_of: BTreeMap::new(),
        period: 0.0,
        es: None,
        quality_threshold: DEFAULT_QUALITY,
        max_retries: DEFAULT_MAX_RETRIES,
        replica_slots: BTreeMap::new(),
    }
}

fn assign_role_nodes(
    plan: &mut ExecutionPlan,
    g: &TaskGraph,
    emb: &PatternEmbedding,
    role: Role,
    cores: &CoreSet,
    frequency: f64,
) {
    for n in g.nodes() {
        if emb.role(&n.submodel) == Some(role) {
            plan.assignments.insert(
                n.id.clone(),
                TaskAssignment { cores: cores.clone(), frequency },
            );
        }
    }
}

fn plan_es(
    emb: &PatternEmbedding,
    g: &TaskGraph,
    perf: &BTreeMap<Role, PerfModel>,
    machine: &MachineModel,
    options: &PlanOptions,
    counts: &BTreeMap<Role, u32>,
) -> Result<ExecutionPlan, PlanError> {
    if !emb.role_of.values().any(|r| *r == Role::Primary) {
        return Err(PlanError::MissingRole(Role::Primary));
    }
    let pr = Scaled {
        inner: require_perf(perf, Role::Primary)?,
        copies: counts.get(&Role::Primary).copied().unwrap_or(1).max(1) as f64,
    };
    let mut aux_parts = Vec::new();
    for role in [Role::SerialAux, Role::ParallelAux] {
        if emb.role_of.values().any(|r| *r == role) {
            aux_parts.push(Scaled {
                inner: require_perf(perf, role)?,
                copies: counts.get(&role).copied().unwrap_or(0) as f64,
            });
        }
    }
    let aux = Group(aux_parts);
    let p_total = machine.total_cores();

    let mode = if aux.0.is_empty() {
        if options.mode_override == Some(ExecMode::Interleaved) {
            return Err(PlanError::Infeasible(
                "interleaving needs an auxiliary role to overlap with".into(),
            ));
        }
        ExecMode::Sequential
    } else {
        match options.mode_override {
            Some(m) => m,
            None => choose_mode(&pr, &aux, p_total, options.r_seq)?,
        }
    };

    let mut plan = empty_plan();
    plan.mode = mode;
    let ordered_cores = machine.cores_by_reliability();

    match mode {
        ExecMode::Sequential => {
            let all = CoreSet::new(ordered_cores);
            plan.period = pr.eval_time(p_total)? + aux.eval_time(p_total)?;
            for role in [Role::Primary, Role::SerialAux, Role::ParallelAux] {
                assign_role_nodes(&mut plan, g, emb, role, &all, 1.0);
            }
        }
        ExecMode::Interleaved => {
            if p_total < 2 {
                return Err(PlanError::Infeasible(
                    "interleaving needs at least two cores".into(),
                ));
            }
            let alloc = optimal_split(&pr, &aux, p_total)?;
            let freqs = energy_optimize_interleave(&alloc, &machine.energy, options.slack_tol);
            // The primary is the cost-critical side: most reliable cores.
            let a_cores = CoreSet::new(ordered_cores[..alloc.p1 as usize].to_vec());
            let b_cores = CoreSet::new(
                ordered_cores[alloc.p1 as usize..(alloc.p1 + alloc.p2) as usize].to_vec(),
            );
            assign_role_nodes(&mut plan, g, emb, Role::Primary, &a_cores, freqs.f_pr);
            assign_role_nodes(&mut plan, g, emb, Role::SerialAux, &b_cores, freqs.f_aux);
            assign_role_nodes(&mut plan, g, emb, Role::ParallelAux, &b_cores, freqs.f_aux);
            plan.period = alloc.period;
            plan.es = Some(alloc);
        }
    }
    plan.recovery = emb
        .role_of
        .values()
        .map(|r| (*r, RecoveryPolicy::RestartTask))
        .collect();
    Ok(plan)
}

fn chunk_slots(cores: &[u32], n_slots: u32) -> Vec<CoreSet> {
    let n_slots = n_slots as usize;
    if n_slots == 0 || cores.is_empty() {
        return Vec::new();
    }
    if n_slots >= cores.len() {
        // More slots than cores: one core per slot, wrapping.
        return (0..n_slots).map(|s| CoreSet::new(vec![cores[s % cores.len()]])).collect();
    }
    let per = cores.len() / n_slots;
    (0..n_slots)
        .map(|s| {
            let lo = s * per;
            let hi = if s == n_slots - 1 { cores.len() } else { lo + per };
            CoreSet::new(cores[lo..hi].to_vec())
        })
        .collect()
}

fn plan_hmc(
    emb: &PatternEmbedding,
    g: &TaskGraph,
    perf: &BTreeMap<Role, PerfModel>,
    machine: &MachineModel,
    options: &PlanOptions,
    counts: &BTreeMap<Role, u32>,
) -> Result<ExecutionPlan, PlanError> {
    for role in [Role::Macro, Role::Micro] {
        if !emb.role_of.values().any(|r| *r == role) {
            return Err(PlanError::MissingRole(role));
        }
    }
    let macro_pm = require_perf(perf, Role::Macro)?;
    let ordered = machine.cores_by_reliability();
    let p_total = ordered.len();

    let macro_take = (machine.cores_per_node as usize).min(p_total);
    let macro_cores = CoreSet::new(ordered[..macro_take].to_vec());
    let has_db = emb.role_of.values().any(|r| *r == Role::Database);
    let mut next = macro_take;
    let db_cores = if next < p_total {
        let c = CoreSet::new(vec![ordered[next]]);
        next += 1;
        c
    } else {
        macro_cores.clone()
    };

    let n_micro = counts.get(&Role::Micro).copied().unwrap_or(0);
    let n_slots = n_micro.max(if options.precompute { 1 } else { 0 });
    let remaining: Vec<u32> =
        if next < p_total { ordered[next..].to_vec() } else { macro_cores.iter().collect() };
    let slots = chunk_slots(&remaining, n_slots);

    let mut plan = empty_plan();
    plan.mode = ExecMode::Sequential;
    assign_role_nodes(&mut plan, g, emb, Role::Macro, &macro_cores, 1.0);
    if has_db {
        assign_role_nodes(&mut plan, g, emb, Role::Database, &db_cores, 1.0);
    }
    if n_micro > 0 {
        for n in g.nodes() {
            if emb.role(&n.submodel) == Some(Role::Micro) {
                let slot = &slots[(n.instance as usize) % slots.len()];
                plan.assignments.insert(
                    n.id.clone(),
                    TaskAssignment { cores: slot.clone(), frequency: 1.0 },
                );
            }
        }
    }

    // Predicted time for one macro cycle: macro step, database step, then
    // the micro swarm in waves over the slots.
    let mut period = macro_pm.eval_time(macro_cores.len())?;
    if has_db {
        if let Some(db_pm) = perf.get(&Role::Database) {
            period += db_pm.eval_time(db_cores.len())?;
        }
    }
    if n_micro > 0 {
        let micro_pm = require_perf(perf, Role::Micro)?;
        let waves = n_micro.div_ceil(slots.len() as u32);
        period += waves as f64 * micro_pm.eval_time(slots[0].len())?;
    }
    plan.period = period;

    plan.recovery = emb
        .role_of
        .values()
        .map(|r| {
            let policy = if *r == Role::Micro {
                RecoveryPolicy::MustRestart
            } else {
                RecoveryPolicy::RestartTask
            };
            (*r, policy)
        })
        .collect();
    Ok(plan)
}

fn plan_rc(
    emb: &PatternEmbedding,
    g: &TaskGraph,
    perf: &BTreeMap<Role, PerfModel>,
    machine: &MachineModel,
    options: &PlanOptions,
    counts: &BTreeMap<Role, u32>,
) -> Result<ExecutionPlan, PlanError> {
    for role in [Role::Replica, Role::Master] {
        if !emb.role_of.values().any(|r| *r == role) {
            return Err(PlanError::MissingRole(role));
        }
    }
    let replica_pm = require_perf(perf, Role::Replica)?;
    let master_pm = require_perf(perf, Role::Master)?;

    let p_total = machine.total_cores();
    let rc = options.replica_cores.max(1);
    if rc > p_total {
        return Err(PlanError::Infeasible(format!(
            "a replica needs {rc} cores but the machine has {p_total}"
        )));
    }
    let ordered = machine.cores_by_reliability();
    let n_slots = p_total / rc;
    let slots: Vec<CoreSet> = (0..n_slots as usize)
        .map(|s| CoreSet::new(ordered[s * rc as usize..(s + 1) * rc as usize].to_vec()))
        .collect();

    let mut plan = empty_plan();
    plan.mode = ExecMode::Sequential;
    let all = CoreSet::new(ordered.clone());
    assign_role_nodes(&mut plan, g, emb, Role::Master, &all, 1.0);
    for n in g.nodes() {
        if emb.role(&n.submodel) == Some(Role::Replica) {
            let slot = &slots[(n.instance as usize) % slots.len()];
            plan.assignments.insert(
                n.id.clone(),
                TaskAssignment { cores: slot.clone(), frequency: 1.0 },
            );
            if n.phase == Phase::Cycle {
                plan.replica_slots.insert(n.instance, slot.clone());
            }
        }
    }

    let n_replicas = counts.get(&Role::Replica).copied().unwrap_or(0).max(1);
    let waves = n_replicas.div_ceil(n_slots);
    plan.period = waves as f64 * replica_pm.eval_time(rc)? + master_pm.eval_time(p_total)?;

    plan.recovery = emb
        .role_of
        .values()
        .map(|r| {
            let policy = if *r == Role::Replica {
                RecoveryPolicy::SkipIfQualityOk
            } else {
                RecoveryPolicy::RestartTask
            };
            (*r, policy)
        })
        .collect();
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::patterns::{embed_es, embed_hmc, embed_rc};
    use crate::perf::EnergyModel;
    use crate::taskgraph::{unfold, NodeId};

    const PIPE: &str = "\
model pipe
submodel prim dt=1s total=10s dx=1m extent=10m role=primary
submodel aux dt=1s total=10s dx=1m extent=10m role=auxiliary
couple prim -> aux kind=per_cycle
couple aux -> prim kind=init
";

    fn machine(cores: u32) -> MachineModel {
        MachineModel::new(
            cores,
            1,
            EnergyModel::new(1.0, 3.0, 3.0, vec![0.5, 0.75, 1.0]).unwrap(),
            0.0,
            Vec::new(),
        )
        .unwrap()
    }

    fn es_inputs(cycles: u32) -> (crate::model::MultiscaleModel, TaskGraph, PatternEmbedding) {
        let m = parse_model(PIPE).unwrap();
        let g = unfold(&m, cycles, &BTreeMap::new()).unwrap();
        let emb = embed_es(&g, &m, "prim").unwrap();
        (m, g, emb)
    }

    fn es_perf() -> BTreeMap<Role, PerfModel> {
        [
            (Role::Primary, PerfModel::perfect(1000.0).unwrap()),
            (Role::SerialAux, PerfModel::serial(50.0).unwrap()),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn es_interleaves_dominant_serial_aux() {
        let (_m, g, emb) = es_inputs(3);
        let p = plan(&emb, &g, &es_perf(), &machine(21), &PlanOptions::default()).unwrap();
        assert_eq!(p.mode, ExecMode::Interleaved);
        let alloc = p.es.as_ref().unwrap();
        assert_eq!((alloc.p1, alloc.p2), (20, 1));
        assert_eq!(p.period, 50.0);
        let a = &p.assignments[&NodeId::from("prim[i0]@0/cycle")];
        assert_eq!(a.cores.len(), 20);
        let b = &p.assignments[&NodeId::from("aux[i0]@0/cycle")];
        assert_eq!(b.cores.len(), 1);
        // every node is assigned, including the residual init node
        assert_eq!(p.assignments.len(), g.nodes().len());
    }

    #[test]
    fn es_sequential_when_aux_negligible() {
        let (_m, g, emb) = es_inputs(2);
        let perf: BTreeMap<Role, PerfModel> = [
            (Role::Primary, PerfModel::perfect(1000.0).unwrap()),
            (Role::SerialAux, PerfModel::serial(0.05).unwrap()),
        ]
        .into_iter()
        .collect();
        let p = plan(&emb, &g, &perf, &machine(21), &PlanOptions::default()).unwrap();
        assert_eq!(p.mode, ExecMode::Sequential);
        assert!(p.es.is_none());
        let a = &p.assignments[&NodeId::from("prim[i0]@0/cycle")];
        assert_eq!(a.cores.len(), 21);
        let expected = 1000.0 / 21.0 + 0.05;
        assert!((p.period - expected).abs() < 1e-9);
    }

    #[test]
    fn es_primary_lands_on_reliable_cores() {
        let (_m, g, emb) = es_inputs(1);
        let mut mach = machine(21);
        // node 20 is flaky, nodes 0..19 fine; primary must avoid node 20
        mach.reliability.push(super::super::ReliabilityClass {
            first_node: 20,
            last_node: 20,
            multiplier: 100.0,
        });
        let p = plan(&emb, &g, &es_perf(), &mach, &PlanOptions::default()).unwrap();
        let a = &p.assignments[&NodeId::from("prim[i0]@0/cycle")];
        assert!(!a.cores.iter().any(|c| c == 20));
        let b = &p.assignments[&NodeId::from("aux[i0]@0/cycle")];
        assert_eq!(b.cores.iter().collect::<Vec<_>>(), vec![20]);
    }

    #[test]
    fn es_missing_perf_is_reported() {
        let (_m, g, emb) = es_inputs(1);
        let perf: BTreeMap<Role, PerfModel> =
            [(Role::Primary, PerfModel::perfect(1000.0).unwrap())].into_iter().collect();
        assert_eq!(
            plan(&emb, &g, &perf, &machine(4), &PlanOptions::default()).unwrap_err(),
            PlanError::MissingPerf(Role::SerialAux)
        );
    }

    #[test]
    fn rc_packs_replicas_in_waves() {
        let text = "\
model ensemble
submodel walker dt=1s total=10s dx=1m extent=1m multiplicity=4
submodel collector dt=1s total=1s dx=1m extent=1m role=master
couple walker -> collector kind=final
";
        let m = parse_model(text).unwrap();
        let g = unfold(&m, 1, &BTreeMap::new()).unwrap();
        let emb = embed_rc(&g, &m).unwrap();
        let perf: BTreeMap<Role, PerfModel> = [
            (Role::Replica, PerfModel::serial(10.0).unwrap()),
            (Role::Master, PerfModel::serial(1.0).unwrap()),
        ]
        .into_iter()
        .collect();
        let p = plan(&emb, &g, &perf, &machine(2), &PlanOptions::default()).unwrap();
        // 4 replicas on 2 cores: two waves of two, then the master
        assert_eq!(p.period, 21.0);
        assert_eq!(p.replica_slots.len(), 4);
        let c0 = &p.assignments[&NodeId::from("walker[i0]@0/cycle")];
        let c2 = &p.assignments[&NodeId::from("walker[i2]@0/cycle")];
        assert_eq!(c0.cores, c2.cores); // same slot, consecutive waves
        assert_eq!(
            p.recovery[&Role::Replica],
            RecoveryPolicy::SkipIfQualityOk
        );
        assert_eq!(p.recovery[&Role::Master], RecoveryPolicy::RestartTask);
    }

    #[test]
    fn rc_rejects_oversized_replicas() {
        let text = "\
model ensemble
submodel walker dt=1s total=10s dx=1m extent=1m multiplicity=2
submodel collector dt=1s total=1s dx=1m extent=1m role=master
couple walker -> collector kind=final
";
        let m = parse_model(text).unwrap();
        let g = unfold(&m, 1, &BTreeMap::new()).unwrap();
        let emb = embed_rc(&g, &m).unwrap();
        let perf: BTreeMap<Role, PerfModel> = [
            (Role::Replica, PerfModel::serial(10.0).unwrap()),
            (Role::Master, PerfModel::serial(1.0).unwrap()),
        ]
        .into_iter()
        .collect();
        let opts = PlanOptions { replica_cores: 8, ..Default::default() };
        assert!(matches!(
            plan(&emb, &g, &perf, &machine(2), &opts).unwrap_err(),
            PlanError::Infeasible(_)
        ));
    }

    #[test]
    fn hmc_pins_macro_and_database() {
        let text = "\
model greedy
submodel lattice dt=1s total=100s dx=1mm extent=1m role=macro
submodel cache dt=1s total=100s dx=1mm extent=1m
submodel pore dt=1us total=1ms dx=1um extent=1mm multiplicity=dynamic role=micro
couple lattice -> cache kind=per_cycle
couple cache -> pore kind=per_cycle
couple pore -> cache kind=per_cycle
couple lattice -> cache kind=init
";
        let m = parse_model(text).unwrap();
        let counts: BTreeMap<String, u32> = [("pore".to_string(), 3)].into_iter().collect();
        let g = unfold(&m, 1, &counts).unwrap();
        let emb = embed_hmc(&g, &m).unwrap();
        let perf: BTreeMap<Role, PerfModel> = [
            (Role::Macro, PerfModel::serial(5.0).unwrap()),
            (Role::Database, PerfModel::serial(0.1).unwrap()),
            (Role::Micro, PerfModel::serial(2.0).unwrap()),
        ]
        .into_iter()
        .collect();
        let mach = MachineModel::new(
            2,
            4,
            EnergyModel::new(1.0, 3.0, 3.0, vec![1.0]).unwrap(),
            0.0,
            Vec::new(),
        )
        .unwrap();
        let p = plan(&emb, &g, &perf, &mach, &PlanOptions::default()).unwrap();
        let mac = &p.assignments[&NodeId::from("lattice[i0]@0/cycle")];
        assert_eq!(mac.cores.len(), 4); // one full node
        let db = &p.assignments[&NodeId::from("cache[i0]@0/cycle")];
        assert_eq!(db.cores.len(), 1);
        let micro0 = &p.assignments[&NodeId::from("pore[i0]@0/cycle")];
        let micro1 = &p.assignments[&NodeId::from("pore[i1]@0/cycle")];
        assert!(micro0.cores != micro1.cores); // separate slots
        assert_eq!(p.recovery[&Role::Micro], RecoveryPolicy::MustRestart);
        // macro 5 + db 0.1 + one wave of micros 2
        assert!((p.period - 7.1).abs() < 1e-9);
    }

    #[test]
    fn hmc_reserves_no_micro_cores_without_demand() {
        let text = "\
model greedy
submodel lattice dt=1s total=100s dx=1mm extent=1m role=macro
submodel cache dt=1s total=100s dx=1mm extent=1m
submodel pore dt=1us total=1ms dx=1um extent=1mm multiplicity=dynamic role=micro
couple lattice -> cache kind=per_cycle
couple cache -> pore kind=per_cycle
couple pore -> cache kind=per_cycle
couple lattice -> cache kind=init
";
        let m = parse_model(text).unwrap();
        let counts: BTreeMap<String, u32> = [("pore".to_string(), 0)].into_iter().collect();
        let g = unfold(&m, 1, &counts).unwrap();
        let emb = embed_hmc(&g, &m).unwrap();
        let perf: BTreeMap<Role, PerfModel> = [
            (Role::Macro, PerfModel::serial(5.0).unwrap()),
            (Role::Micro, PerfModel::serial(2.0).unwrap()),
        ]
        .into_iter()
        .collect();
        let p = plan(&emb, &g, &perf, &machine(8), &PlanOptions::default()).unwrap();
        // no micro nodes exist, so nothing references the micro partition
        assert!(p.assignments.keys().all(|id| !id.as_str().starts_with("pore")));
        assert!((p.period - 5.1).abs() < 1e-9 || (p.period - 5.0).abs() < 1e-9);
    }
}
