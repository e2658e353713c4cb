//! Discrete-event execution of a plan with stochastic core failures.
//!
//! The simulator replays the task graph against the plan's core
//! assignments. Tasks start in plan order as soon as their predecessors
//! finished and their exact core set is idle. Failures are sampled per
//! attempt from an exponential clock over the task's cores; the recovery
//! policy of the task's role decides what a failure does. Two runs with
//! the same inputs and seed produce identical reports, byte for byte.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::patterns::{PatternKind, Role};
use crate::perf::{PerfError, PerfModel, TimeModel};
use crate::taskgraph::{Phase, TaskGraph};

use super::rc::{rc_on_failure, RcDecision, RcState};
use super::{ExecutionPlan, FailureRecord, MachineModel, RecoveryPolicy, SimReport, TaskStats};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    /// A task exhausted `max_retries`; the run is aborted.
    #[error("task `{task}` still failing after {attempts} attempts")]
    Livelock { task: String, attempts: u32 },
    #[error("plan does not match graph: {0}")]
    BadPlan(String),
    #[error(transparent)]
    Perf(#[from] PerfError),
}

/// Completion or failure of one running attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    /// Lexicographic rank of the task id; orders simultaneous events.
    rank: usize,
    node: usize,
    failed: bool,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.rank.cmp(&other.rank))
            .then(self.failed.cmp(&other.failed))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Stream id for one (task, attempt) pair. Every attempt draws from its
/// own generator so retry timing never perturbs other tasks' draws.
fn attempt_seed(seed: u64, task: &str, attempt: u32) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut h = FNV_OFFSET;
    for b in task.as_bytes() {
        h = (h ^ *b as u64).wrapping_mul(FNV_PRIME);
    }
    for b in attempt.to_le_bytes() {
        h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
    }
    splitmix(seed ^ h)
}

struct Task {
    cores: Vec<u32>,
    frequency: f64,
    /// Duration at f=1; wall duration is this divided by frequency.
    dur_fmax: f64,
    fail_rate: f64,
    policy: RecoveryPolicy,
    is_replica_work: bool,
    preds_left: usize,
    succs: Vec<usize>,
    running: bool,
    done: bool,
    abandoned: bool,
    attempts: u32,
    first_start: f64,
    attempt_start: f64,
    end: f64,
}

/// Runs the plan against the graph and returns the accounting report.
///
/// `seed` fixes the failure sampling; zero `lambda_core` makes the run
/// fully analytic. Fails with [`SimError::Livelock`] when one task exceeds
/// the plan's retry budget and with [`SimError::BadPlan`] when plan and
/// graph disagree.
pub fn simulate(
    plan: &ExecutionPlan,
    g: &TaskGraph,
    perf: &BTreeMap<Role, PerfModel>,
    machine: &MachineModel,
    seed: u64,
) -> Result<SimReport, SimError> {
    let nodes = g.nodes();
    let index: HashMap<&str, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();

    // Ranks give the deterministic tie-break for simultaneous events.
    let mut sorted_ids: Vec<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
    sorted_ids.sort_unstable();
    let rank_of: HashMap<&str, usize> =
        sorted_ids.iter().enumerate().map(|(r, id)| (*id, r)).collect();

    let mut tasks = Vec::with_capacity(nodes.len());
    for n in nodes {
        let a = plan
            .assignments
            .get(&n.id)
            .ok_or_else(|| SimError::BadPlan(format!("no assignment for task `{}`", n.id)))?;
        let role = plan.role_of_submodel(&n.submodel);
        let dur_fmax = match n.cost_hint {
            Some(h) => h,
            // Phase nodes are synchronization points, not work.
            None if n.phase != Phase::Cycle => 0.0,
            None => match role.and_then(|r| perf.get(&r)) {
                Some(pm) => pm.eval_time(a.cores.len())?,
                None => 0.0,
            },
        };
        let fail_rate = machine.lambda_core
            * a.cores.iter().map(|c| machine.core_multiplier(c)).sum::<f64>();
        let policy = role
            .and_then(|r| plan.recovery.get(&r).copied())
            .unwrap_or(RecoveryPolicy::RestartTask);
        tasks.push(Task {
            cores: a.cores.iter().collect(),
            frequency: a.frequency,
            dur_fmax,
            fail_rate,
            policy,
            is_replica_work: role == Some(Role::Replica) && n.phase == Phase::Cycle,
            preds_left: 0,
            succs: Vec::new(),
            running: false,
            done: false,
            abandoned: false,
            attempts: 0,
            first_start: 0.0,
            attempt_start: 0.0,
            end: 0.0,
        });
    }
    for e in g.edges() {
        let (&u, &v) = (
            index.get(e.from.as_str()).expect("edge endpoints exist"),
            index.get(e.to.as_str()).expect("edge endpoints exist"),
        );
        tasks[u].succs.push(v);
        tasks[v].preds_left += 1;
    }

    let order: Vec<usize> = plan
        .order
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| SimError::BadPlan(format!("order names unknown task `{id}`")))
        })
        .collect::<Result<_, _>>()?;
    if order.len() != nodes.len() {
        return Err(SimError::BadPlan(format!(
            "order covers {} of {} tasks",
            order.len(),
            nodes.len()
        )));
    }

    let n_cores = tasks
        .iter()
        .flat_map(|t| t.cores.iter().copied())
        .max()
        .map_or(0, |m| m as usize + 1);
    let mut busy = vec![false; n_cores];

    let total_replicas = tasks.iter().filter(|t| t.is_replica_work).count() as u32;
    let mut rc = RcState::new(total_replicas.max(1), plan.quality_threshold)
        .map_err(|e| SimError::BadPlan(e.to_string()))?;

    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::new();
    let mut energy = 0.0;
    let mut core_seconds = 0.0;
    let mut useful_core_seconds = 0.0;
    let mut failures = Vec::new();
    let mut makespan = 0.0f64;
    let mut free_cores = busy.len();
    // Tasks before this point in the order are terminal and never rescanned.
    let mut cursor = 0usize;

    let start_ready = |tasks: &mut [Task],
                       busy: &mut [bool],
                       heap: &mut BinaryHeap<Reverse<Event>>,
                       free_cores: &mut usize,
                       cursor: &mut usize,
                       now: f64| {
        while *cursor < order.len() {
            let t = &tasks[order[*cursor]];
            if t.done || t.abandoned {
                *cursor += 1;
            } else {
                break;
            }
        }
        for &i in &order[*cursor..] {
            if *free_cores == 0 {
                break;
            }
            let t = &tasks[i];
            if t.running || t.done || t.abandoned || t.preds_left > 0 {
                continue;
            }
            if t.cores.iter().any(|c| busy[*c as usize]) {
                continue;
            }
            let t = &mut tasks[i];
            for c in &t.cores {
                busy[*c as usize] = true;
            }
            *free_cores -= t.cores.len();
            if t.attempts == 0 {
                t.first_start = now;
            }
            t.attempts += 1;
            t.attempt_start = now;
            t.running = true;

            let wall = t.dur_fmax / t.frequency;
            let rank = rank_of[nodes[i].id.as_str()];
            let mut ev = Event { time: now + wall, rank, node: i, failed: false };
            if t.fail_rate > 0.0 && wall > 0.0 {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(attempt_seed(seed, nodes[i].id.as_str(), t.attempts));
                let u: f64 = rng.random();
                let ttf = -(1.0 - u).ln() / t.fail_rate;
                if ttf < wall {
                    ev = Event { time: now + ttf, rank, node: i, failed: true };
                }
            }
            heap.push(Reverse(ev));
        }
    };

    start_ready(&mut tasks, &mut busy, &mut heap, &mut free_cores, &mut cursor, 0.0);

    while let Some(&Reverse(first)) = heap.peek() {
        let now = first.time;
        while let Some(&Reverse(ev)) = heap.peek() {
            if ev.time != now {
                break;
            }
            heap.pop();
            let i = ev.node;
            let elapsed = now - tasks[i].attempt_start;
            let width = tasks[i].cores.len() as f64;
            energy += width * machine.energy.power(tasks[i].frequency) * elapsed;
            core_seconds += width * elapsed;
            for c in &tasks[i].cores {
                busy[*c as usize] = false;
            }
            free_cores += tasks[i].cores.len();
            tasks[i].running = false;

            if !ev.failed {
                tasks[i].done = true;
                tasks[i].end = now;
                useful_core_seconds += width * elapsed;
                makespan = makespan.max(now);
                if tasks[i].is_replica_work {
                    rc.completed += 1;
                }
                for s in 0..tasks[i].succs.len() {
                    let v = tasks[i].succs[s];
                    tasks[v].preds_left -= 1;
                }
                continue;
            }

            failures.push(FailureRecord {
                cores: tasks[i].cores.len() as u32,
                task: nodes[i].id.as_str().to_string(),
                time: now,
            });
            let abandon = match tasks[i].policy {
                RecoveryPolicy::SkipIfQualityOk => {
                    rc.failed += 1;
                    match rc_on_failure(&rc) {
                        RcDecision::Continue => true,
                        RcDecision::RestartReplica => {
                            rc.failed -= 1;
                            false
                        }
                    }
                }
                RecoveryPolicy::RestartTask | RecoveryPolicy::MustRestart => false,
            };
            if abandon {
                tasks[i].abandoned = true;
                tasks[i].end = now;
                makespan = makespan.max(now);
                for s in 0..tasks[i].succs.len() {
                    let v = tasks[i].succs[s];
                    tasks[v].preds_left -= 1;
                }
            } else if tasks[i].attempts > plan.max_retries {
                return Err(SimError::Livelock {
                    task: nodes[i].id.as_str().to_string(),
                    attempts: tasks[i].attempts,
                });
            }
        }
        start_ready(&mut tasks, &mut busy, &mut heap, &mut free_cores, &mut cursor, now);
    }

    let unfinished = tasks.iter().filter(|t| !t.done && !t.abandoned).count();
    if unfinished > 0 {
        return Err(SimError::BadPlan(format!(
            "{unfinished} tasks never became runnable"
        )));
    }

    let allocated = plan.allocated_cores();
    let efficiency_observed = if makespan > 0.0 && allocated > 0 {
        useful_core_seconds / (makespan * allocated as f64)
    } else {
        1.0
    };
    let quality = match plan.pattern {
        PatternKind::RcStatic | PatternKind::RcDynamic | PatternKind::RcExchange => {
            if total_replicas == 0 {
                Some(1.0)
            } else {
                Some(rc.completed as f64 / total_replicas as f64)
            }
        }
        _ => None,
    };

    let per_task = nodes
        .iter()
        .zip(&tasks)
        .map(|(n, t)| {
            (
                n.id.as_str().to_string(),
                TaskStats {
                    completed: t.done,
                    end: t.end,
                    retries: t.attempts.saturating_sub(1),
                    start: t.first_start,
                },
            )
        })
        .collect();

    Ok(SimReport {
        core_seconds,
        efficiency_observed,
        energy_joules: energy,
        failures,
        makespan,
        per_task,
        quality,
    })
}
