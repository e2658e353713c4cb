//! Renders an execution plan as middleware launch documents.
//!
//! Output is a map from document name to full text. `manifest.cfg` carries
//! the run-level summary; ES and HMC plans add one `role.<name>.cfg` per
//! role, RC plans add one `replica.<i>.cfg` per replica instance plus
//! `master.cfg`. Documents are plain `key=value` lines with one optional
//! `[section]` header, and identical plans render identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::patterns::{PatternKind, Role};

use super::{ExecutionPlan, RecoveryPolicy, TaskAssignment};

fn is_rc(kind: PatternKind) -> bool {
    matches!(
        kind,
        PatternKind::RcStatic | PatternKind::RcDynamic | PatternKind::RcExchange
    )
}

/// First assignment belonging to `submodel`, going by the node id prefix
/// `<submodel>[`.
fn assignment_for<'a>(
    plan: &'a ExecutionPlan,
    submodel: &str,
) -> Option<&'a TaskAssignment> {
    let prefix = format!("{submodel}[");
    plan.assignments
        .iter()
        .find(|(id, _)| id.as_str().starts_with(&prefix))
        .map(|(_, a)| a)
}

/// Representative assignment and task count per role.
fn role_summary(plan: &ExecutionPlan) -> BTreeMap<Role, (&TaskAssignment, usize)> {
    let mut out: BTreeMap<Role, (&TaskAssignment, usize)> = BTreeMap::new();
    for (submodel, role) in &plan.role_of {
        let prefix = format!("{submodel}[");
        let count = plan
            .assignments
            .keys()
            .filter(|id| id.as_str().starts_with(&prefix))
            .count();
        if count == 0 {
            continue;
        }
        let a = assignment_for(plan, submodel).expect("counted above");
        out.entry(*role)
            .and_modify(|(_, c)| *c += count)
            .or_insert((a, count));
    }
    out
}

fn recovery_of(plan: &ExecutionPlan, role: Role) -> RecoveryPolicy {
    plan.recovery.get(&role).copied().unwrap_or(RecoveryPolicy::RestartTask)
}

/// Builds the launch documents for a plan.
pub fn emit_middleware_config(plan: &ExecutionPlan) -> BTreeMap<String, String> {
    let mut docs = BTreeMap::new();
    let roles = role_summary(plan);

    let mut manifest = String::new();
    let _ = writeln!(manifest, "pattern={}", plan.pattern);
    let _ = writeln!(manifest, "mode={}", plan.mode);
    let _ = writeln!(manifest, "total_cores={}", plan.allocated_cores());
    let _ = writeln!(manifest, "period_s={}", plan.period);
    if is_rc(plan.pattern) {
        let _ = writeln!(manifest, "replicas={}", plan.replica_slots.len());
        let _ = writeln!(manifest, "quality_threshold={}", plan.quality_threshold);
    }
    for (role, (a, _)) in &roles {
        let _ = writeln!(manifest, "role.{}.cores={}", role.as_str(), a.cores.len());
        let _ = writeln!(manifest, "role.{}.frequency={}", role.as_str(), a.frequency);
    }
    docs.insert("manifest.cfg".to_string(), manifest);

    if is_rc(plan.pattern) {
        for (i, slot) in &plan.replica_slots {
            let mut doc = String::new();
            let _ = writeln!(doc, "[replica.{i}]");
            let _ = writeln!(doc, "cores={}", slot.ranges());
            let _ = writeln!(doc, "frequency=1");
            let _ = writeln!(doc, "recovery={}", recovery_of(plan, Role::Replica));
            docs.insert(format!("replica.{i}.cfg"), doc);
        }
        if let Some((a, count)) = roles.get(&Role::Master) {
            let mut doc = String::new();
            let _ = writeln!(doc, "[master]");
            let _ = writeln!(doc, "cores={}", a.cores.ranges());
            let _ = writeln!(doc, "frequency={}", a.frequency);
            let _ = writeln!(doc, "recovery={}", recovery_of(plan, Role::Master));
            let _ = writeln!(doc, "tasks={count}");
            docs.insert("master.cfg".to_string(), doc);
        }
    } else {
        for (role, (a, count)) in &roles {
            let mut doc = String::new();
            let _ = writeln!(doc, "[role.{}]", role.as_str());
            let _ = writeln!(doc, "cores={}", a.cores.ranges());
            let _ = writeln!(doc, "frequency={}", a.frequency);
            let _ = writeln!(doc, "recovery={}", recovery_of(plan, *role));
            let _ = writeln!(doc, "tasks={count}");
            docs.insert(format!("role.{}.cfg", role.as_str()), doc);
        }
    }
    docs
}
