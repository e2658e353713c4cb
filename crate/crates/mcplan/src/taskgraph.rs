//! Task graphs unfolded from coupled multiscale models.
//!
//! Unfolding turns the cyclic coupling structure of a model into an acyclic
//! graph of task nodes, one per (submodel, instance, iteration, phase). A
//! per_cycle coupling whose realization at equal iteration would close a
//! cycle is shifted to the next iteration instead: it becomes a feedback
//! edge. Which couplings are feedback follows from a deterministic ordering
//! of submodels seeded by the ones that can start on their own (init-coupling
//! targets and submodels without per_cycle predecessors).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::model::{CouplingKind, MultiscaleModel};

/// Opaque node identifier. Unfolded graphs use the node label as its id;
/// hand-built graphs may use any unique string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Init,
    Cycle,
    Final,
}

impl Phase {
    fn as_str(&self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Cycle => "cycle",
            Phase::Final => "final",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskNode {
    pub id: NodeId,
    pub submodel: String,
    pub instance: u32,
    pub iteration: u32,
    pub phase: Phase,
    /// Optional work size in seconds at one core and full frequency; takes
    /// precedence over the role performance model during simulation.
    pub cost_hint: Option<f64>,
}

impl TaskNode {
    /// Node with an explicit id (hand-built graphs).
    pub fn with_id(
        id: impl Into<String>,
        submodel: impl Into<String>,
        instance: u32,
        iteration: u32,
        phase: Phase,
    ) -> Self {
        TaskNode {
            id: NodeId::new(id),
            submodel: submodel.into(),
            instance,
            iteration,
            phase,
            cost_hint: None,
        }
    }

    /// Node whose id is its label, the scheme unfold uses.
    pub fn labeled(submodel: impl Into<String>, instance: u32, iteration: u32, phase: Phase) -> Self {
        let submodel = submodel.into();
        let id = format!("{submodel}[i{instance}]@{iteration}/{phase}");
        TaskNode { id: NodeId::new(id), submodel, instance, iteration, phase, cost_hint: None }
    }

    pub fn label(&self) -> String {
        format!("{}[i{}]@{}/{}", self.submodel, self.instance, self.iteration, self.phase)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub payload_bytes: u64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(NodeId),
    #[error("edge endpoint `{0}` is not a node")]
    UnknownNode(NodeId),
    #[error("graph contains a cycle")]
    Cycle,
    #[error("no cost given for node `{0}`")]
    MissingCost(NodeId),
    #[error("negative cost for node `{0}`")]
    NegativeCost(NodeId),
}

#[derive(Debug, Clone, Default)]
pub struct TaskGraph {
    nodes: Vec<TaskNode>,
    edges: Vec<TaskEdge>,
    index: HashMap<NodeId, usize>,
}

impl TaskGraph {
    pub fn new() -> Self {
        TaskGraph::default()
    }

    pub fn add_node(&mut self, node: TaskNode) -> Result<(), GraphError> {
        if self.index.contains_key(&node.id) {
            return Err(GraphError::DuplicateNode(node.id));
        }
        self.index.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(())
    }

    pub fn add_edge(&mut self, from: &NodeId, to: &NodeId, payload_bytes: u64) -> Result<(), GraphError> {
        if !self.index.contains_key(from) {
            return Err(GraphError::UnknownNode(from.clone()));
        }
        if !self.index.contains_key(to) {
            return Err(GraphError::UnknownNode(to.clone()));
        }
        self.edges.push(TaskEdge { from: from.clone(), to: to.clone(), payload_bytes });
        Ok(())
    }

    pub fn nodes(&self) -> &[TaskNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[TaskEdge] {
        &self.edges
    }

    pub fn node(&self, id: &NodeId) -> Option<&TaskNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub(crate) fn node_pos(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Successor lists by node position.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[self.index[&e.from]].push(self.index[&e.to]);
        }
        adj
    }

    pub(crate) fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for e in &self.edges {
            deg[self.index[&e.to]] += 1;
        }
        deg
    }

    /// True if `to` is reachable from `from` along directed edges.
    pub fn has_path(&self, from: &NodeId, to: &NodeId) -> bool {
        let (Some(&s), Some(&t)) = (self.index.get(from), self.index.get(to)) else {
            return false;
        };
        if s == t {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if v == t {
                    return true;
                }
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }
}

// ---------------------------------------------------------------------------
// Deadlock detection and submodel ordering
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeadlockCheck {
    Ok,
    /// Submodels forming a per_cycle cycle with no entry point, sorted by id.
    Deadlock { cycle: Vec<String> },
}

/// Reports a deadlock iff some group of submodels waits on each other through
/// same-iteration per_cycle couplings with no init coupling or free submodel
/// to break the cycle.
pub fn detect_deadlock(m: &MultiscaleModel) -> DeadlockCheck {
    match cycle_ordering(m) {
        Ok(_) => DeadlockCheck::Ok,
        Err(cycle) => DeadlockCheck::Deadlock { cycle },
    }
}

/// Deterministic submodel ordering within one iteration. Seeded by starting
/// submodels in id order, extended breadth-first over per_cycle couplings
/// (targets visited in id order). A coupling whose source is not ordered
/// before its target realizes as a feedback edge to the next iteration.
fn cycle_ordering(m: &MultiscaleModel) -> Result<BTreeMap<&str, usize>, Vec<String>> {
    let mut pos: BTreeMap<&str, usize> = BTreeMap::new();
    let mut queue: VecDeque<&str> = VecDeque::new();
    for id in crate::model::starting_submodels(m) {
        pos.insert(id, pos.len());
        queue.push_back(id);
    }
    while let Some(u) = queue.pop_front() {
        let mut targets: Vec<&str> = m
            .couplings
            .iter()
            .filter(|c| c.kind == CouplingKind::PerCycle && c.from == u)
            .map(|c| c.to.as_str())
            .collect();
        targets.sort_unstable();
        targets.dedup();
        for v in targets {
            if !pos.contains_key(v) && m.submodel(v).is_some() {
                pos.insert(v, pos.len());
                queue.push_back(v);
            }
        }
    }

    let blocked: Vec<&str> = m
        .submodels
        .iter()
        .map(|s| s.id.as_str())
        .filter(|id| !pos.contains_key(id))
        .collect();
    if blocked.is_empty() {
        return Ok(pos);
    }

    // Every blocked submodel has only blocked per_cycle predecessors, so a
    // predecessor walk must close a cycle. Follow the smallest predecessor
    // from the smallest blocked id for a deterministic report.
    let blocked_set: BTreeSet<&str> = blocked.iter().copied().collect();
    let mut walk: Vec<&str> = Vec::new();
    let mut cur = *blocked_set.iter().next().expect("nonempty");
    loop {
        if let Some(at) = walk.iter().position(|&x| x == cur) {
            let mut cycle: Vec<String> = walk[at..].iter().map(|s| s.to_string()).collect();
            cycle.sort_unstable();
            return Err(cycle);
        }
        walk.push(cur);
        cur = m
            .couplings
            .iter()
            .filter(|c| c.kind == CouplingKind::PerCycle && c.to == cur && blocked_set.contains(c.from.as_str()))
            .map(|c| c.from.as_str())
            .min()
            .expect("blocked submodel must have a blocked predecessor");
    }
}

// ---------------------------------------------------------------------------
// Unfolding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq)]
pub enum UnfoldError {
    #[error("cycles must be at least 1")]
    InvalidCycles,
    #[error("model does not validate: {0}")]
    InvalidModel(String),
    #[error("deadlock among submodels: {}", cycle.join(", "))]
    Deadlock { cycle: Vec<String> },
    #[error("missing instance count for dynamic submodel `{0}`")]
    MissingInstanceCount(String),
}

/// Unfolds `cycles` iterations of the model into an acyclic task graph.
///
/// Node inventory: one init node per instance of every starting submodel,
/// one cycle node per (submodel, instance, iteration), and one final node
/// per instance of every final-coupling source. Dynamic submodels take
/// their instance count from `instance_counts` (a count of 0 is allowed:
/// the submodel contributes no nodes).
///
/// Edge realization per coupling `u -> v`:
/// * per_cycle, u ordered before v: `u@k -> v@k` for every iteration k;
/// * per_cycle otherwise (feedback): `u@k -> v@k+1`, dropped at the last
///   iteration;
/// * init: `init(u) -> init(v)` when both init nodes exist (the data is a
///   time-zero constant otherwise);
/// * final: `u@last -> final(u)` plus `final(u) -> v@0`, gating the
///   consumer's cycle work on the producer's completion.
/// Instances couple densely: every instance of u feeds every instance of v.
pub fn unfold(
    m: &MultiscaleModel,
    cycles: u32,
    instance_counts: &BTreeMap<String, u32>,
) -> Result<TaskGraph, UnfoldError> {
    if cycles < 1 {
        return Err(UnfoldError::InvalidCycles);
    }
    let diags = crate::model::validate_model(m);
    if !diags.is_empty() {
        let msgs: Vec<String> = diags.iter().map(|d| d.message.clone()).collect();
        return Err(UnfoldError::InvalidModel(msgs.join("; ")));
    }
    let order = cycle_ordering(m).map_err(|cycle| UnfoldError::Deadlock { cycle })?;

    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for s in &m.submodels {
        let k = match s.multiplicity {
            crate::model::Multiplicity::Fixed(k) => k,
            crate::model::Multiplicity::Dynamic => *instance_counts
                .get(&s.id)
                .ok_or_else(|| UnfoldError::MissingInstanceCount(s.id.clone()))?,
        };
        counts.insert(&s.id, k);
    }

    let starting = crate::model::starting_submodels(m);
    let final_sources: BTreeSet<&str> = m
        .couplings
        .iter()
        .filter(|c| c.kind == CouplingKind::Final)
        .map(|c| c.from.as_str())
        .collect();

    let mut g = TaskGraph::new();
    for s in &m.submodels {
        let n = counts[s.id.as_str()];
        for i in 0..n {
            if starting.contains(s.id.as_str()) {
                g.add_node(TaskNode::labeled(&s.id, i, 0, Phase::Init)).expect("unique");
            }
            for k in 0..cycles {
                g.add_node(TaskNode::labeled(&s.id, i, k, Phase::Cycle)).expect("unique");
            }
            if final_sources.contains(s.id.as_str()) {
                g.add_node(TaskNode::labeled(&s.id, i, cycles, Phase::Final)).expect("unique");
            }
        }
    }

    let id_of = |sub: &str, i: u32, k: u32, phase: Phase| {
        NodeId::new(format!("{sub}[i{i}]@{k}/{phase}"))
    };

    // Init phase precedes the first cycle of the same instance.
    for s in &m.submodels {
        if !starting.contains(s.id.as_str()) {
            continue;
        }
        for i in 0..counts[s.id.as_str()] {
            let init = id_of(&s.id, i, 0, Phase::Init);
            if cycles > 0 {
                g.add_edge(&init, &id_of(&s.id, i, 0, Phase::Cycle), 0).expect("endpoint");
            }
        }
    }
    // A final node follows the last cycle of its instance.
    for s in &m.submodels {
        if !final_sources.contains(s.id.as_str()) {
            continue;
        }
        for i in 0..counts[s.id.as_str()] {
            let last = id_of(&s.id, i, cycles - 1, Phase::Cycle);
            g.add_edge(&last, &id_of(&s.id, i, cycles, Phase::Final), 0).expect("endpoint");
        }
    }

    // Coupling edges, deduplicated per (from, to) with payloads summed.
    let mut realized: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
    let mut realize = |from: NodeId, to: NodeId, bytes: u64| {
        *realized.entry((from, to)).or_insert(0) += bytes;
    };
    for c in &m.couplings {
        let (nu, nv) = (counts[c.from.as_str()], counts[c.to.as_str()]);
        match c.kind {
            CouplingKind::PerCycle => {
                let forward = order[c.from.as_str()] < order[c.to.as_str()];
                for k in 0..cycles {
                    let target_k = if forward { k } else { k + 1 };
                    if target_k >= cycles {
                        continue;
                    }
                    for i in 0..nu {
                        for j in 0..nv {
                            realize(
                                id_of(&c.from, i, k, Phase::Cycle),
                                id_of(&c.to, j, target_k, Phase::Cycle),
                                c.payload_bytes,
                            );
                        }
                    }
                }
            }
            CouplingKind::Init => {
                if starting.contains(c.from.as_str()) && starting.contains(c.to.as_str()) {
                    for i in 0..nu {
                        for j in 0..nv {
                            realize(
                                id_of(&c.from, i, 0, Phase::Init),
                                id_of(&c.to, j, 0, Phase::Init),
                                c.payload_bytes,
                            );
                        }
                    }
                }
            }
            CouplingKind::Final => {
                for i in 0..nu {
                    for j in 0..nv {
                        realize(
                            id_of(&c.from, i, cycles, Phase::Final),
                            id_of(&c.to, j, 0, Phase::Cycle),
                            c.payload_bytes,
                        );
                    }
                }
            }
        }
    }
    for ((from, to), bytes) in realized {
        g.add_edge(&from, &to, bytes).expect("endpoint");
    }

    // Acyclicity is checked, not assumed.
    topological_order(&g).map_err(|_| UnfoldError::InvalidModel("unfolded graph has a cycle".into()))?;
    Ok(g)
}

// ---------------------------------------------------------------------------
// Topological order and critical path
// ---------------------------------------------------------------------------

/// Kahn's algorithm with a deterministic tie-break: among ready nodes, the
/// smallest (iteration, submodel id, instance, phase) goes first.
pub fn topological_order(g: &TaskGraph) -> Result<Vec<NodeId>, GraphError> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    fn key(n: &TaskNode) -> (u32, String, u32, u8) {
        let phase_rank = match n.phase {
            Phase::Init => 0,
            Phase::Cycle => 1,
            Phase::Final => 2,
        };
        (n.iteration, n.submodel.clone(), n.instance, phase_rank)
    }

    let adj = g.adjacency();
    let mut deg = g.in_degrees();
    let mut heap: BinaryHeap<Reverse<((u32, String, u32, u8), usize)>> = BinaryHeap::new();
    for (i, n) in g.nodes().iter().enumerate() {
        if deg[i] == 0 {
            heap.push(Reverse((key(n), i)));
        }
    }
    let mut out = Vec::with_capacity(g.nodes().len());
    while let Some(Reverse((_, u))) = heap.pop() {
        out.push(g.nodes()[u].id.clone());
        for &v in &adj[u] {
            deg[v] -= 1;
            if deg[v] == 0 {
                heap.push(Reverse((key(&g.nodes()[v]), v)));
            }
        }
    }
    if out.len() != g.nodes().len() {
        return Err(GraphError::Cycle);
    }
    Ok(out)
}

/// Longest path through the graph, node costs summed along the path.
/// Ties resolve toward the lexicographically smaller node id, so the result
/// is deterministic.
pub fn critical_path(
    g: &TaskGraph,
    costs: &BTreeMap<NodeId, f64>,
) -> Result<(f64, Vec<NodeId>), GraphError> {
    if g.nodes().is_empty() {
        return Ok((0.0, Vec::new()));
    }
    for n in g.nodes() {
        match costs.get(&n.id) {
            None => return Err(GraphError::MissingCost(n.id.clone())),
            Some(c) if *c < 0.0 => return Err(GraphError::NegativeCost(n.id.clone())),
            Some(_) => {}
        }
    }
    let order = topological_order(g)?;
    let adj = g.adjacency();
    let mut best: Vec<f64> = g.nodes().iter().map(|n| costs[&n.id]).collect();
    let mut pred: Vec<Option<usize>> = vec![None; g.nodes().len()];
    for id in &order {
        let u = g.node_pos(id).expect("ordered node");
        for &v in &adj[u] {
            let cand = best[u] + costs[&g.nodes()[v].id];
            let better = cand > best[v]
                || (cand == best[v]
                    && pred[v].map_or(true, |p| g.nodes()[u].id < g.nodes()[p].id));
            if better {
                best[v] = cand;
                pred[v] = Some(u);
            }
        }
    }
    let mut end = 0;
    for i in 1..best.len() {
        if best[i] > best[end] || (best[i] == best[end] && g.nodes()[i].id < g.nodes()[end].id) {
            end = i;
        }
    }
    let mut path = vec![end];
    while let Some(p) = pred[*path.last().unwrap()] {
        path.push(p);
    }
    path.reverse();
    Ok((best[end], path.into_iter().map(|i| g.nodes()[i].id.clone()).collect()))
}

// ---------------------------------------------------------------------------
// DOT emission
// ---------------------------------------------------------------------------

/// Graphviz rendering. Nodes sorted by id, edges by (from, to); the same
/// graph always renders to the same bytes.
pub fn to_dot(g: &TaskGraph) -> String {
    let mut out = String::from("digraph g {\n");
    let mut nodes: Vec<&TaskNode> = g.nodes().iter().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    for n in nodes {
        out.push_str(&format!("  \"{}\" [label=\"{}\"];\n", n.id, n.label()));
    }
    let mut edges: Vec<&TaskEdge> = g.edges().iter().collect();
    edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    for e in edges {
        if e.payload_bytes > 0 {
            out.push_str(&format!("  \"{}\" -> \"{}\" [label=\"{}B\"];\n", e.from, e.to, e.payload_bytes));
        } else {
            out.push_str(&format!("  \"{}\" -> \"{}\";\n", e.from, e.to));
        }
    }
    out.push_str("}\n");
    out
}
