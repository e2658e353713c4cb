//! Performance and energy models for planning.
//!
//! A [`PerfModel`] predicts the wall time of one repeating unit of work as a
//! function of processor count. The extreme-scaling analysis splits a machine
//! between a dominant primary model and its auxiliary models: total unit time
//! is `T_pr + T_aux`, and parallel efficiency comes in an exact form and a
//! cheaper approximation that only needs the primary's scaling behavior.
//! [`optimal_split`] and [`choose_mode`] pick the processor split and the
//! execution mode; [`energy_optimize_interleave`] picks per-side frequencies
//! that exploit slack in the unbalanced side of an interleaved split.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PerfError {
    #[error("processor count must be at least 1")]
    InvalidProcessorCount,
    #[error("invalid performance model: {0}")]
    InvalidModel(String),
    #[error("frequency {0} is not an available level")]
    UnknownFrequency(f64),
    #[error("invalid energy model: {0}")]
    InvalidEnergyModel(String),
    #[error("processor split needs at least 2 processors, got {0}")]
    SplitTooSmall(u32),
}

/// Scaling behavior of one unit of work.
#[derive(Debug, Clone, PartialEq)]
pub enum Scaling {
    /// Fixed time `a`, no speedup from more processors.
    Serial { a: f64 },
    /// `a / P`.
    PerfectScaling { a: f64 },
    /// `a * (s + (1 - s) / P)`: serial fraction `s` caps the speedup.
    Amdahl { a: f64, serial_fraction: f64 },
    /// Measured `(P, time)` points, interpolated linearly in `1/P`.
    Table { points: Vec<(u32, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfModel {
    scaling: Scaling,
    problem_size: f64,
}

impl PerfModel {
    pub fn serial(a: f64) -> Result<Self, PerfError> {
        Self::new(Scaling::Serial { a })
    }

    pub fn perfect(a: f64) -> Result<Self, PerfError> {
        Self::new(Scaling::PerfectScaling { a })
    }

    pub fn amdahl(a: f64, serial_fraction: f64) -> Result<Self, PerfError> {
        Self::new(Scaling::Amdahl { a, serial_fraction })
    }

    pub fn table(points: Vec<(u32, f64)>) -> Result<Self, PerfError> {
        Self::new(Scaling::Table { points })
    }

    pub fn new(scaling: Scaling) -> Result<Self, PerfError> {
        let bad = |msg: &str| Err(PerfError::InvalidModel(msg.into()));
        match &scaling {
            Scaling::Serial { a } | Scaling::PerfectScaling { a } => {
                if !(a.is_finite() && *a > 0.0) {
                    return bad("time coefficient must be positive");
                }
            }
            Scaling::Amdahl { a, serial_fraction } => {
                if !(a.is_finite() && *a > 0.0) {
                    return bad("time coefficient must be positive");
                }
                if !(0.0..=1.0).contains(serial_fraction) {
                    return bad("serial fraction must lie in [0, 1]");
                }
            }
            Scaling::Table { points } => {
                if points.is_empty() {
                    return bad("table needs at least one point");
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return bad("table processor counts must be distinct and increasing");
                    }
                    if w[1].1 > w[0].1 {
                        return bad("table time must be nonincreasing in processor count");
                    }
                }
                if points.iter().any(|&(p, t)| p < 1 || !(t.is_finite() && t > 0.0)) {
                    return bad("table entries need P >= 1 and positive time");
                }
            }
        }
        Ok(PerfModel { scaling, problem_size: 1.0 })
    }

    /// Scales all predicted times linearly. Defaults to 1.
    pub fn with_problem_size(mut self, n: f64) -> Result<Self, PerfError> {
        if !(n.is_finite() && n > 0.0) {
            return Err(PerfError::InvalidModel("problem size must be positive".into()));
        }
        self.problem_size = n;
        Ok(self)
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    /// Predicted time plus a flag telling whether `p` fell outside a table's
    /// measured range and the nearest endpoint was used instead.
    pub fn eval_with_clamp(&self, p: u32) -> Result<(f64, bool), PerfError> {
        if p < 1 {
            return Err(PerfError::InvalidProcessorCount);
        }
        let pf = p as f64;
        let n = self.problem_size;
        let (t, clamped) = match &self.scaling {
            Scaling::Serial { a } => (a * n, false),
            Scaling::PerfectScaling { a } => (a * n / pf, false),
            Scaling::Amdahl { a, serial_fraction: s } => (a * n * (s + (1.0 - s) / pf), false),
            Scaling::Table { points } => {
                let first = points[0];
                let last = *points.last().expect("nonempty");
                if p <= first.0 {
                    (first.1 * n, p != first.0)
                } else if p >= last.0 {
                    (last.1 * n, p != last.0)
                } else {
                    // Linear in 1/P between the bracketing points.
                    let i = points.partition_point(|&(q, _)| q < p);
                    let (p0, t0) = points[i - 1];
                    let (p1, t1) = points[i];
                    let (x, x0, x1) = (1.0 / pf, 1.0 / p0 as f64, 1.0 / p1 as f64);
                    (n * (t1 + (t0 - t1) * (x - x1) / (x0 - x1)), false)
                }
            }
        };
        Ok((t, clamped))
    }
}

/// Anything that predicts unit time from a processor count. Implemented by
/// [`PerfModel`] and by [`SerialStack`] for groups that share a partition.
pub trait TimeModel {
    fn eval_time(&self, p: u32) -> Result<f64, PerfError>;
}

impl TimeModel for PerfModel {
    fn eval_time(&self, p: u32) -> Result<f64, PerfError> {
        self.eval_with_clamp(p).map(|(t, _)| t)
    }
}

/// Work items executed back to back on one partition; times add up.
/// An empty stack evaluates to zero.
pub struct SerialStack<'a>(Vec<&'a PerfModel>);

impl<'a> SerialStack<'a> {
    pub fn new(models: Vec<&'a PerfModel>) -> Self {
        SerialStack(models)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TimeModel for SerialStack<'_> {
    fn eval_time(&self, p: u32) -> Result<f64, PerfError> {
        if p < 1 {
            return Err(PerfError::InvalidProcessorCount);
        }
        let mut total = 0.0;
        for m in &self.0 {
            total += m.eval_time(p)?;
        }
        Ok(total)
    }
}

/// Unit time when primary and auxiliary run back to back.
pub fn es_time(t_pr: f64, t_aux: f64) -> f64 {
    t_pr + t_aux
}

/// Parallel efficiency of the coupled primary+auxiliary unit on P processors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    /// Exact form: single-processor unit time over P times the unit time.
    pub exact: f64,
    /// Approximation needing only the primary's own efficiency and the
    /// aux-to-primary time ratio at P.
    pub approx: f64,
}

/// The primary model's own parallel efficiency, `T_pr(1) / (P * T_pr(P))`.
pub fn primary_efficiency(pr: &impl TimeModel, p: u32) -> Result<f64, PerfError> {
    Ok(pr.eval_time(1)? / (p as f64 * pr.eval_time(p)?))
}

pub fn es_efficiency(
    pr: &impl TimeModel,
    aux: &impl TimeModel,
    p: u32,
) -> Result<Efficiency, PerfError> {
    let pf = p as f64;
    let t_pr_1 = pr.eval_time(1)?;
    let t_aux_1 = aux.eval_time(1)?;
    let t_pr_p = pr.eval_time(p)?;
    let t_aux_p = aux.eval_time(p)?;
    let exact = (t_aux_1 + t_pr_1) / (pf * (t_aux_p + t_pr_p));
    let eps_pr = t_pr_1 / (pf * t_pr_p);
    let approx = eps_pr / (t_aux_p / t_pr_p + 1.0);
    Ok(Efficiency { exact, approx })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    Interleaved,
}

impl fmt::Display for ExecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecMode::Sequential => "sequential",
            ExecMode::Interleaved => "interleaved",
        })
    }
}

/// A processor split between the primary and auxiliary partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct EsAllocation {
    pub p1: u32,
    pub p2: u32,
    pub mode: ExecMode,
    /// Steady-state time per job. `max(t_pr, t_aux)` when interleaved.
    pub period: f64,
    /// `|t_pr - t_aux| / max(t_pr, t_aux)`; 0 is a perfectly balanced split.
    pub imbalance: f64,
    /// Primary unit time at `p1`.
    pub t_pr: f64,
    /// Auxiliary unit time at `p2`.
    pub t_aux: f64,
}

/// Exhaustively splits `p_total` processors into P1 + P2 minimizing the
/// interleaved period `max(T_pr(P1), T_aux(P2))`. Ties prefer the smaller
/// imbalance, then the smaller P2.
pub fn optimal_split(
    pr: &impl TimeModel,
    aux: &impl TimeModel,
    p_total: u32,
) -> Result<EsAllocation, PerfError> {
    if p_total < 2 {
        return Err(PerfError::SplitTooSmall(p_total));
    }
    let mut best: Option<EsAllocation> = None;
    for p1 in 1..p_total {
        let p2 = p_total - p1;
        let t_pr = pr.eval_time(p1)?;
        let t_aux = aux.eval_time(p2)?;
        let period = t_pr.max(t_aux);
        let imbalance = if period > 0.0 { (t_pr - t_aux).abs() / period } else { 0.0 };
        let cand = EsAllocation {
            p1,
            p2,
            mode: ExecMode::Interleaved,
            period,
            imbalance,
            t_pr,
            t_aux,
        };
        let replace = match &best {
            None => true,
            Some(b) => {
                cand.period < b.period
                    || (cand.period == b.period && cand.imbalance < b.imbalance)
                    || (cand.period == b.period && cand.imbalance == b.imbalance && cand.p2 < b.p2)
            }
        };
        if replace {
            best = Some(cand);
        }
    }
    Ok(best.expect("p_total >= 2 yields at least one split"))
}

pub const DEFAULT_R_SEQ: f64 = 0.01;

/// Picks the execution mode with the better steady-state per-job time.
///
/// When the auxiliary load at full machine width is negligible
/// (`T_aux(P)/T_pr(P) <= r_seq`), sequential co-scheduling wins outright and
/// no split is evaluated. Otherwise the interleaved period from
/// [`optimal_split`] is compared against the sequential per-job time
/// `T_pr(P) + T_aux(P)`; exact ties stay sequential.
pub fn choose_mode(
    pr: &impl TimeModel,
    aux: &impl TimeModel,
    p: u32,
    r_seq: f64,
) -> Result<ExecMode, PerfError> {
    if p < 2 {
        return Ok(ExecMode::Sequential);
    }
    let t_pr = pr.eval_time(p)?;
    let t_aux = aux.eval_time(p)?;
    if t_aux / t_pr <= r_seq {
        return Ok(ExecMode::Sequential);
    }
    let split = optimal_split(pr, aux, p)?;
    if split.period < t_pr + t_aux {
        Ok(ExecMode::Interleaved)
    } else {
        Ok(ExecMode::Sequential)
    }
}

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

pub const DEFAULT_ALPHA: f64 = 3.0;

/// Per-core DVFS power model: `power(f) = p_static + p_dyn * f^alpha` with
/// f a fraction of the maximum frequency. Runtime stretches as `t / f`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    pub p_static: f64,
    pub p_dyn: f64,
    pub alpha: f64,
    /// Allowed frequency levels in (0, 1], always containing 1.
    pub f_levels: Vec<f64>,
}

impl EnergyModel {
    pub fn new(p_static: f64, p_dyn: f64, alpha: f64, mut f_levels: Vec<f64>) -> Result<Self, PerfError> {
        let bad = |msg: &str| Err(PerfError::InvalidEnergyModel(msg.into()));
        if !(p_static >= 0.0 && p_dyn >= 0.0 && p_static + p_dyn > 0.0) {
            return bad("power coefficients must be nonnegative and not both zero");
        }
        if !(alpha.is_finite() && alpha >= 1.0) {
            return bad("exponent must be at least 1");
        }
        f_levels.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
        f_levels.dedup();
        if f_levels.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return bad("frequency levels must lie in (0, 1]");
        }
        if f_levels.last() != Some(&1.0) {
            return bad("frequency levels must include 1");
        }
        Ok(EnergyModel { p_static, p_dyn, alpha, f_levels })
    }

    pub fn power(&self, f: f64) -> f64 {
        self.p_static + self.p_dyn * f.powf(self.alpha)
    }

    pub fn has_level(&self, f: f64) -> bool {
        self.f_levels.contains(&f)
    }
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel::new(1.0, 3.0, DEFAULT_ALPHA, vec![1.0]).expect("valid defaults")
    }
}

/// Energy spent by `cores` running a task that takes `time_at_fmax` seconds
/// at full frequency, when clocked at level `f`.
pub fn energy_of(time_at_fmax: f64, cores: u32, f: f64, em: &EnergyModel) -> Result<f64, PerfError> {
    if !em.has_level(f) {
        return Err(PerfError::UnknownFrequency(f));
    }
    if cores < 1 {
        return Err(PerfError::InvalidProcessorCount);
    }
    Ok(cores as f64 * em.power(f) * (time_at_fmax / f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyAssignment {
    pub f_pr: f64,
    pub f_aux: f64,
}

/// Grid search over frequency levels for both sides of an interleaved split,
/// minimizing energy per period without stretching the period by more than
/// `slack_tol`. The shorter side's slack is what a lower level can absorb;
/// ties keep the higher frequencies.
pub fn energy_optimize_interleave(
    alloc: &EsAllocation,
    em: &EnergyModel,
    slack_tol: f64,
) -> FrequencyAssignment {
    let bound = alloc.period * (1.0 + slack_tol);
    let mut best = FrequencyAssignment { f_pr: 1.0, f_aux: 1.0 };
    let mut best_energy = f64::INFINITY;
    for &f_pr in em.f_levels.iter().rev() {
        for &f_aux in em.f_levels.iter().rev() {
            let t1 = alloc.t_pr / f_pr;
            let t2 = alloc.t_aux / f_aux;
            if t1.max(t2) > bound {
                continue;
            }
            let energy = alloc.p1 as f64 * em.power(f_pr) * t1
                + alloc.p2 as f64 * em.power(f_aux) * t2;
            if energy < best_energy {
                best_energy = energy;
                best = FrequencyAssignment { f_pr, f_aux };
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Perf sidecar file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct PerfFileError {
    pub line: usize,
    pub message: String,
}

/// Parses a performance sidecar file. One model per line:
///
/// ```text
/// perf <ref> serial a=<float>
/// perf <ref> perfect a=<float>
/// perf <ref> amdahl a=<float> s=<float>
/// perf <ref> table (P,t);(P,t);...
/// ```
pub fn parse_perf_file(text: &str) -> Result<BTreeMap<String, PerfModel>, PerfFileError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let err = |message: String| PerfFileError { line: lineno, message };
        if toks[0] != "perf" {
            return Err(err(format!("expected `perf`, found `{}`", toks[0])));
        }
        if toks.len() < 3 {
            return Err(err("expected `perf <ref> <variant> ...`".into()));
        }
        let name = toks[1];
        if out.contains_key(name) {
            return Err(err(format!("duplicate perf reference `{name}`")));
        }
        let take_kv = |tok: &str, key: &str| -> Result<f64, PerfFileError> {
            let val = tok
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| err(format!("expected `{key}=<number>`, found `{tok}`")))?;
            val.parse().map_err(|_| err(format!("invalid number `{val}`")))
        };
        let model = match toks[2] {
            "serial" if toks.len() == 4 => PerfModel::serial(take_kv(toks[3], "a")?),
            "perfect" if toks.len() == 4 => PerfModel::perfect(take_kv(toks[3], "a")?),
            "amdahl" if toks.len() == 5 => {
                PerfModel::amdahl(take_kv(toks[3], "a")?, take_kv(toks[4], "s")?)
            }
            "table" if toks.len() == 4 => {
                let mut points = Vec::new();
                for part in toks[3].split(';') {
                    let inner = part
                        .strip_prefix('(')
                        .and_then(|r| r.strip_suffix(')'))
                        .ok_or_else(|| err(format!("expected `(P,t)`, found `{part}`")))?;
                    let (ps, ts) = inner
                        .split_once(',')
                        .ok_or_else(|| err(format!("expected `(P,t)`, found `{part}`")))?;
                    let p: u32 = ps.parse().map_err(|_| err(format!("invalid count `{ps}`")))?;
                    let t: f64 = ts.parse().map_err(|_| err(format!("invalid time `{ts}`")))?;
                    points.push((p, t));
                }
                PerfModel::table(points)
            }
            other => {
                return Err(err(format!(
                    "unknown or malformed perf variant `{other}` (expected serial, perfect, amdahl or table)"
                )))
            }
        };
        let model = model.map_err(|e| err(e.to_string()))?;
        out.insert(name.to_string(), model);
    }
    Ok(out)
}
