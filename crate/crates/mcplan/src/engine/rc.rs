//! Replica-computing ensemble quality policy.
//!
//! Replicas are statistically exchangeable, so losing a few does not force a
//! restart as long as the surviving fraction still meets the quality
//! threshold. This is the key operational difference from HMC micro runs,
//! which always restart.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct RcState {
    pub n_replicas: u32,
    pub completed: u32,
    /// Replicas abandoned so far, including the one being decided on.
    pub failed: u32,
    pub quality_threshold: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("inconsistent replica state: {0}")]
pub struct RcStateError(String);

impl RcState {
    pub fn new(n_replicas: u32, quality_threshold: f64) -> Result<Self, RcStateError> {
        if n_replicas < 1 {
            return Err(RcStateError("ensemble needs at least one replica".into()));
        }
        if !(quality_threshold > 0.0 && quality_threshold <= 1.0) {
            return Err(RcStateError(format!(
                "quality threshold must lie in (0, 1], got {quality_threshold}"
            )));
        }
        Ok(RcState { n_replicas, completed: 0, failed: 0, quality_threshold })
    }

    pub fn surviving_fraction(&self) -> f64 {
        (self.n_replicas - self.failed.min(self.n_replicas)) as f64 / self.n_replicas as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcDecision {
    /// Quality still holds; the failed replica is dropped.
    Continue,
    /// Quality would be violated; the failed replica must be re-run.
    RestartReplica,
}

/// Decides whether an ensemble tolerates its latest replica failure.
/// `state.failed` counts that failure already.
pub fn rc_on_failure(state: &RcState) -> RcDecision {
    if state.surviving_fraction() >= state.quality_threshold {
        RcDecision::Continue
    } else {
        RcDecision::RestartReplica
    }
}
