//! Execution planning and deterministic simulation.
//!
//! The engine turns a pattern embedding plus a machine description into an
//! [`ExecutionPlan`] (which task runs on which cores at which frequency, in
//! what order, with what recovery policy) and evaluates plans by
//! discrete-event simulation with exponential fault injection and energy
//! accounting. The HMC database manager and the RC quality policy live in
//! the [`hmc`] and [`rc`] submodules; [`config`] renders plans as
//! middleware-ready key=value documents.

pub mod config;
pub mod hmc;
pub mod plan;
pub mod rc;
pub mod sim;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::patterns::{PatternKind, Role};
use crate::perf::{EnergyModel, EsAllocation, ExecMode};
use crate::taskgraph::NodeId;

pub use config::emit_middleware_config;
pub use hmc::{HmcDatabase, HmcDecision, HmcPolicy, Interpolation};
pub use plan::{plan, PlanError, PlanOptions};
pub use rc::{rc_on_failure, RcDecision, RcState};
pub use sim::{simulate, SimError};

/// Node ranges with a failure-rate multiplier. Lower multipliers mean more
/// reliable hardware.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityClass {
    pub first_node: u32,
    pub last_node: u32,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineModel {
    pub nodes: u32,
    pub cores_per_node: u32,
    pub energy: EnergyModel,
    /// Failures per core-second at multiplier 1.
    pub lambda_core: f64,
    /// Later entries override earlier ones where ranges overlap.
    pub reliability: Vec<ReliabilityClass>,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid machine model: {0}")]
pub struct MachineError(pub String);

impl MachineModel {
    pub fn new(
        nodes: u32,
        cores_per_node: u32,
        energy: EnergyModel,
        lambda_core: f64,
        reliability: Vec<ReliabilityClass>,
    ) -> Result<Self, MachineError> {
        if nodes < 1 || cores_per_node < 1 {
            return Err(MachineError("machine needs at least one node and one core".into()));
        }
        if !(lambda_core >= 0.0 && lambda_core.is_finite()) {
            return Err(MachineError("failure rate must be finite and nonnegative".into()));
        }
        for r in &reliability {
            if r.first_node > r.last_node || r.last_node >= nodes {
                return Err(MachineError(format!(
                    "reliability range {}..{} is outside the machine",
                    r.first_node, r.last_node
                )));
            }
            if !(r.multiplier >= 0.0 && r.multiplier.is_finite()) {
                return Err(MachineError("reliability multiplier must be nonnegative".into()));
            }
        }
        Ok(MachineModel { nodes, cores_per_node, energy, lambda_core, reliability })
    }

    pub fn total_cores(&self) -> u32 {
        self.nodes * self.cores_per_node
    }

    pub fn node_of(&self, core: u32) -> u32 {
        core / self.cores_per_node
    }

    /// Failure-rate multiplier for one core.
    pub fn core_multiplier(&self, core: u32) -> f64 {
        let node = self.node_of(core);
        let mut m = 1.0;
        for r in &self.reliability {
            if node >= r.first_node && node <= r.last_node {
                m = r.multiplier;
            }
        }
        m
    }

    /// All cores sorted most-reliable first (multiplier, then index).
    pub fn cores_by_reliability(&self) -> Vec<u32> {
        let mut cores: Vec<u32> = (0..self.total_cores()).collect();
        cores.sort_by(|a, b| {
            self.core_multiplier(*a)
                .total_cmp(&self.core_multiplier(*b))
                .then(a.cmp(b))
        });
        cores
    }
}

/// Parses a machine description. `key=value` lines, `#` comments:
///
/// ```text
/// nodes=4
/// cores_per_node=8
/// f_levels=0.5,0.75,1
/// p_static=1
/// p_dyn=3
/// alpha=3
/// lambda_core=1e-6
/// reliability=0..1:0.1
/// ```
///
/// `reliability` may repeat; later lines override earlier ones on overlap.
/// Defaults: `f_levels=1`, `p_static=1`, `p_dyn=3`, `alpha=3`,
/// `lambda_core=0`.
pub fn parse_machine_file(text: &str) -> Result<MachineModel, MachineError> {
    let mut nodes: Option<u32> = None;
    let mut cores_per_node: Option<u32> = None;
    let mut f_levels = vec![1.0];
    let mut p_static = 1.0;
    let mut p_dyn = 3.0;
    let mut alpha = crate::perf::DEFAULT_ALPHA;
    let mut lambda_core = 0.0;
    let mut reliability = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| MachineError(format!("line {lineno}: {msg}"));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key=value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "nodes" => {
                nodes = Some(value.parse().map_err(|_| err(format!("invalid count `{value}`")))?)
            }
            "cores_per_node" => {
                cores_per_node =
                    Some(value.parse().map_err(|_| err(format!("invalid count `{value}`")))?)
            }
            "f_levels" => {
                f_levels = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err(format!("invalid frequency list `{value}`")))?;
            }
            "p_static" => {
                p_static = value.parse().map_err(|_| err(format!("invalid power `{value}`")))?
            }
            "p_dyn" => {
                p_dyn = value.parse().map_err(|_| err(format!("invalid power `{value}`")))?
            }
            "alpha" => {
                alpha = value.parse().map_err(|_| err(format!("invalid exponent `{value}`")))?
            }
            "lambda_core" => {
                lambda_core = value.parse().map_err(|_| err(format!("invalid rate `{value}`")))?
            }
            "reliability" => {
                let (range, mult) = value
                    .split_once(':')
                    .ok_or_else(|| err("expected `reliability=<lo>..<hi>:<multiplier>`".into()))?;
                let (lo, hi) = range
                    .split_once("..")
                    .ok_or_else(|| err("expected `<lo>..<hi>` node range".into()))?;
                reliability.push(ReliabilityClass {
                    first_node: lo.trim().parse().map_err(|_| err(format!("invalid node `{lo}`")))?,
                    last_node: hi.trim().parse().map_err(|_| err(format!("invalid node `{hi}`")))?,
                    multiplier: mult
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("invalid multiplier `{mult}`")))?,
                });
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }

    let nodes = nodes.ok_or(MachineError("missing `nodes`".into()))?;
    let cores_per_node = cores_per_node.ok_or(MachineError("missing `cores_per_node`".into()))?;
    let energy = EnergyModel::new(p_static, p_dyn, alpha, f_levels)
        .map_err(|e| MachineError(e.to_string()))?;
    MachineModel::new(nodes, cores_per_node, energy, lambda_core, reliability)
}

/// Cores a task occupies. Kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CoreSet(Vec<u32>);

impl CoreSet {
    pub fn new(mut cores: Vec<u32>) -> Self {
        cores.sort_unstable();
        cores.dedup();
        CoreSet(cores)
    }

    pub fn from_range(lo: u32, hi: u32) -> Self {
        CoreSet((lo..hi).collect())
    }

    pub fn len(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    /// Compact display: contiguous runs as `lo-hi`, comma separated.
    pub fn ranges(&self) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < self.0.len() {
            let start = self.0[i];
            let mut end = start;
            while i + 1 < self.0.len() && self.0[i + 1] == end + 1 {
                i += 1;
                end = self.0[i];
            }
            if !out.is_empty() {
                out.push(',');
            }
            if start == end {
                out.push_str(&start.to_string());
            } else {
                out.push_str(&format!("{start}-{end}"));
            }
            i += 1;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryPolicy {
    /// Re-run the failed task from scratch.
    RestartTask,
    /// Drop the task if the ensemble quality threshold still holds.
    SkipIfQualityOk,
    /// Always re-run; skipping is never allowed for this role.
    MustRestart,
}

impl fmt::Display for RecoveryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecoveryPolicy::RestartTask => "restart_task",
            RecoveryPolicy::SkipIfQualityOk => "skip_if_quality_ok",
            RecoveryPolicy::MustRestart => "must_restart",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskAssignment {
    pub cores: CoreSet,
    pub frequency: f64,
}

/// A fully resolved schedule: what runs where, how fast, in what order, and
/// how each role recovers from failures.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionPlan {
    pub pattern: PatternKind,
    pub mode: ExecMode,
    pub assignments: BTreeMap<NodeId, TaskAssignment>,
    /// Topological start order; the simulator starts ready tasks in this
    /// order whenever cores free up.
    pub order: Vec<NodeId>,
    pub recovery: BTreeMap<Role, RecoveryPolicy>,
    /// Submodel id to template role, carried over from the embedding.
    pub role_of: BTreeMap<String, Role>,
    /// Predicted steady-state time per job.
    pub period: f64,
    /// Processor split details when the pattern is ES.
    pub es: Option<EsAllocation>,
    /// RC ensemble quality threshold.
    pub quality_threshold: f64,
    /// Abort the simulation when one task fails this many times.
    pub max_retries: u32,
    /// RC only: core slot per replica instance, for launch documents.
    pub replica_slots: BTreeMap<u32, CoreSet>,
}

impl ExecutionPlan {
    /// Number of distinct cores referenced by any assignment.
    pub fn allocated_cores(&self) -> u32 {
        let mut cores: Vec<u32> = self.assignments.values().flat_map(|a| a.cores.iter()).collect();
        cores.sort_unstable();
        cores.dedup();
        cores.len() as u32
    }

    pub fn role_of_submodel(&self, submodel: &str) -> Option<Role> {
        self.role_of.get(submodel).copied()
    }
}

/// Timing, energy, and failure accounting for one simulated run.
/// Field order is alphabetical so serialized JSON has sorted keys at every
/// level.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimReport {
    pub core_seconds: f64,
    pub efficiency_observed: f64,
    pub energy_joules: f64,
    pub failures: Vec<FailureRecord>,
    pub makespan: f64,
    pub per_task: BTreeMap<String, TaskStats>,
    pub quality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TaskStats {
    /// False when the task was abandoned under skip_if_quality_ok.
    pub completed: bool,
    pub end: f64,
    pub retries: u32,
    pub start: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FailureRecord {
    pub cores: u32,
    pub task: String,
    pub time: f64,
}

impl SimReport {
    /// Stable serialization: sorted keys, fixed layout, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_machine_file_with_defaults() {
        let m = parse_machine_file("nodes=2\ncores_per_node=4\n").unwrap();
        assert_eq!(m.total_cores(), 8);
        assert_eq!(m.lambda_core, 0.0);
        assert_eq!(m.energy.f_levels, vec![1.0]);
        assert_eq!(m.core_multiplier(5), 1.0);
    }

    #[test]
    fn parses_reliability_classes() {
        let text = "\
# test box
nodes=4
cores_per_node=2
f_levels=0.5,0.75,1
lambda_core=1e-6
reliability=0..3:2
reliability=0..0:0.1
";
        let m = parse_machine_file(text).unwrap();
        assert_eq!(m.core_multiplier(0), 0.1); // node 0: later line wins
        assert_eq!(m.core_multiplier(2), 2.0); // node 1
        let order = m.cores_by_reliability();
        assert_eq!(&order[..2], &[0, 1]); // most reliable node first
    }

    #[test]
    fn machine_file_rejects_bad_input() {
        assert!(parse_machine_file("cores_per_node=4\n").is_err());
        assert!(parse_machine_file("nodes=2\ncores_per_node=4\nbogus=1\n").is_err());
        assert!(parse_machine_file("nodes=2\ncores_per_node=4\nreliability=0..5:1\n").is_err());
        assert!(parse_machine_file("nodes=0\ncores_per_node=4\n").is_err());
    }

    #[test]
    fn core_set_ranges_display() {
        assert_eq!(CoreSet::from_range(0, 20).ranges(), "0-19");
        assert_eq!(CoreSet::new(vec![3, 1, 2, 7]).ranges(), "1-3,7");
        assert_eq!(CoreSet::new(vec![5]).ranges(), "5");
    }
}
