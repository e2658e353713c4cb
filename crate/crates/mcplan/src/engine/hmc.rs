//! On-the-fly database manager for heterogeneous multiscale computing.
//!
//! The macro model queries the database before every micro launch. The
//! manager answers from cache when a stored point is close enough, by
//! interpolation when the query sits between known points, and with `Launch`
//! when a new micro simulation is genuinely needed. A precompute pass can
//! fill the largest gaps ahead of anticipated queries.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Never interpolate; anything beyond reuse distance launches.
    None,
    /// Interpolate only inside the hull of cached neighbors.
    LinearWithinHull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcPolicy {
    /// Reuse a cached value when the nearest entry is within this distance.
    pub delta_reuse: f64,
    pub interpolation: Interpolation,
    /// Neighbors considered for interpolation; 0 means automatic
    /// (two in one dimension, twice the dimension otherwise).
    pub max_neighbors: usize,
    /// Modeled latency of one manager decision, in seconds.
    pub decision_latency_s: f64,
}

pub const DEFAULT_DELTA_REUSE: f64 = 1e-9;

impl Default for HmcPolicy {
    fn default() -> Self {
        HmcPolicy {
            delta_reuse: DEFAULT_DELTA_REUSE,
            interpolation: Interpolation::LinearWithinHull,
            max_neighbors: 0,
            decision_latency_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HmcDecision {
    Reuse(Vec<f64>),
    Interpolated(Vec<f64>),
    Launch,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HmcError {
    #[error("query has dimension {got}, database stores dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point already present; use insert_or_replace to overwrite")]
    DuplicatePoint,
    #[error("invalid policy: {0}")]
    BadPolicy(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcDatabase {
    entries: Vec<(Vec<f64>, Vec<f64>)>,
    policy: HmcPolicy,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl HmcDatabase {
    pub fn new(policy: HmcPolicy) -> Result<Self, HmcError> {
        if !(policy.delta_reuse >= 0.0 && policy.delta_reuse.is_finite()) {
            return Err(HmcError::BadPolicy("reuse distance must be finite and nonnegative".into()));
        }
        if !(policy.decision_latency_s >= 0.0) {
            return Err(HmcError::BadPolicy("decision latency must be nonnegative".into()));
        }
        Ok(HmcDatabase { entries: Vec::new(), policy })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn policy(&self) -> &HmcPolicy {
        &self.policy
    }

    fn dim(&self) -> Option<usize> {
        self.entries.first().map(|(p, _)| p.len())
    }

    fn check_dim(&self, point: &[f64]) -> Result<(), HmcError> {
        match self.dim() {
            Some(d) if d != point.len() => {
                Err(HmcError::DimensionMismatch { expected: d, got: point.len() })
            }
            _ => Ok(()),
        }
    }

    fn effective_neighbors(&self, dim: usize) -> usize {
        if self.policy.max_neighbors > 0 {
            self.policy.max_neighbors
        } else if dim <= 1 {
            2
        } else {
            2 * dim
        }
    }

    /// Distance from `point` to the nearest cached entry.
    pub fn nearest_distance(&self, point: &[f64]) -> Option<f64> {
        self.entries.iter().map(|(p, _)| distance(p, point)).min_by(f64::total_cmp)
    }

    /// Answers a macro-model query from the cache, by interpolation, or by
    /// requesting a new micro launch.
    pub fn decide(&self, query: &[f64]) -> Result<HmcDecision, HmcError> {
        if self.entries.is_empty() {
            return Ok(HmcDecision::Launch);
        }
        self.check_dim(query)?;

        let nearest = self
            .entries
            .iter()
            .min_by(|a, b| distance(&a.0, query).total_cmp(&distance(&b.0, query)))
            .expect("nonempty");
        if distance(&nearest.0, query) <= self.policy.delta_reuse {
            return Ok(HmcDecision::Reuse(nearest.1.clone()));
        }

        if self.policy.interpolation == Interpolation::None {
            return Ok(HmcDecision::Launch);
        }
        let dim = query.len();
        if dim == 1 {
            return Ok(self.interpolate_1d(query[0]).map_or(HmcDecision::Launch, HmcDecision::Interpolated));
        }
        Ok(self.interpolate_idw(query).map_or(HmcDecision::Launch, HmcDecision::Interpolated))
    }

    /// Linear interpolation between the tightest bracketing pair.
    fn interpolate_1d(&self, x: f64) -> Option<Vec<f64>> {
        let mut below: Option<(f64, &Vec<f64>)> = None;
        let mut above: Option<(f64, &Vec<f64>)> = None;
        for (p, v) in &self.entries {
            let px = p[0];
            if px <= x && below.map_or(true, |(b, _)| px > b) {
                below = Some((px, v));
            }
            if px >= x && above.map_or(true, |(a, _)| px < a) {
                above = Some((px, v));
            }
        }
        let ((x0, v0), (x1, v1)) = (below?, above?);
        if x1 == x0 {
            return Some(v0.clone());
        }
        let t = (x - x0) / (x1 - x0);
        Some(v0.iter().zip(v1).map(|(a, b)| a + t * (b - a)).collect())
    }

    /// Inverse-distance weighting over the nearest neighbors, only when the
    /// query lies inside their bounding box.
    fn interpolate_idw(&self, query: &[f64]) -> Option<Vec<f64>> {
        let dim = query.len();
        let k = self.effective_neighbors(dim).min(self.entries.len());
        if k < 2 {
            return None;
        }
        let mut by_dist: Vec<&(Vec<f64>, Vec<f64>)> = self.entries.iter().collect();
        by_dist.sort_by(|a, b| distance(&a.0, query).total_cmp(&distance(&b.0, query)));
        let neighbors = &by_dist[..k];

        for d in 0..dim {
            let lo = neighbors.iter().map(|(p, _)| p[d]).fold(f64::INFINITY, f64::min);
            let hi = neighbors.iter().map(|(p, _)| p[d]).fold(f64::NEG_INFINITY, f64::max);
            if query[d] < lo || query[d] > hi {
                return None;
            }
        }

        let vdim = neighbors[0].1.len();
        let mut acc = vec![0.0; vdim];
        let mut wsum = 0.0;
        for (p, v) in neighbors {
            let d = distance(p, query);
            // d > delta_reuse >= 0 here, or decide would have reused.
            let w = 1.0 / (d * d);
            wsum += w;
            for (a, b) in acc.iter_mut().zip(v) {
                *a += w * b;
            }
        }
        for a in &mut acc {
            *a /= wsum;
        }
        Some(acc)
    }

    pub fn insert(&mut self, point: Vec<f64>, value: Vec<f64>) -> Result<(), HmcError> {
        self.check_dim(&point)?;
        if self.entries.iter().any(|(p, _)| p == &point) {
            return Err(HmcError::DuplicatePoint);
        }
        self.entries.push((point, value));
        Ok(())
    }

    pub fn insert_or_replace(&mut self, point: Vec<f64>, value: Vec<f64>) -> Result<(), HmcError> {
        self.check_dim(&point)?;
        if let Some(entry) = self.entries.iter_mut().find(|(p, _)| p == &point) {
            entry.1 = value;
        } else {
            self.entries.push((point, value));
        }
        Ok(())
    }

    /// Anticipated query points worth precomputing: those the manager would
    /// launch anyway, largest cache gap first, capped at `budget`.
    pub fn precompute_candidates(
        &self,
        anticipated: &[Vec<f64>],
        budget: usize,
    ) -> Result<Vec<Vec<f64>>, HmcError> {
        let mut candidates = Vec::new();
        for p in anticipated {
            if self.decide(p)? == HmcDecision::Launch {
                let gap = self.nearest_distance(p).unwrap_or(f64::INFINITY);
                candidates.push((gap, p.clone()));
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(candidates.into_iter().take(budget).map(|(_, p)| p).collect())
    }
}

/// Tally of one replayed query stream.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HmcTrace {
    pub reuses: u32,
    pub interpolations: u32,
    pub launches: u32,
    /// Total manager latency plus micro cost incurred by launches.
    pub time_s: f64,
}

/// Replays macro-model queries against the database: launches run the given
/// micro cost and insert their result (computed by `micro`), cache hits cost
/// only the decision latency.
pub fn replay_queries(
    db: &mut HmcDatabase,
    queries: &[Vec<f64>],
    micro_cost_s: f64,
    micro: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<HmcTrace, HmcError> {
    let mut trace = HmcTrace::default();
    for q in queries {
        trace.time_s += db.policy.decision_latency_s;
        match db.decide(q)? {
            HmcDecision::Reuse(_) => trace.reuses += 1,
            HmcDecision::Interpolated(_) => trace.interpolations += 1,
            HmcDecision::Launch => {
                trace.launches += 1;
                trace.time_s += micro_cost_s;
                db.insert_or_replace(q.clone(), micro(q))?;
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn db_1d(points: &[(f64, f64)], delta: f64) -> HmcDatabase {
        let mut db = HmcDatabase::new(HmcPolicy { delta_reuse: delta, ..Default::default() }).unwrap();
        for (x, v) in points {
            db.insert(vec![*x], vec![*v]).unwrap();
        }
        db
    }

    #[test]
    fn empty_database_always_launches() {
        let db = HmcDatabase::new(HmcPolicy::default()).unwrap();
        assert_eq!(db.decide(&[0.5, 0.5]).unwrap(), HmcDecision::Launch);
    }

    #[test]
    fn exact_point_is_reused() {
        let db = db_1d(&[(0.0, 10.0), (2.0, 14.0)], 0.0);
        assert_eq!(db.decide(&[2.0]).unwrap(), HmcDecision::Reuse(vec![14.0]));
    }

    #[test]
    fn bracketing_points_interpolate_linearly() {
        let db = db_1d(&[(0.0, 10.0), (2.0, 14.0)], 0.1);
        assert_eq!(db.decide(&[1.0]).unwrap(), HmcDecision::Interpolated(vec![12.0]));
        // outside the hull: no bracket, launch
        assert_eq!(db.decide(&[3.0]).unwrap(), HmcDecision::Launch);
    }

    #[test]
    fn interpolation_can_be_disabled() {
        let mut db = HmcDatabase::new(HmcPolicy {
            interpolation: Interpolation::None,
            delta_reuse: 0.1,
            ..Default::default()
        })
        .unwrap();
        db.insert(vec![0.0], vec![10.0]).unwrap();
        db.insert(vec![2.0], vec![14.0]).unwrap();
        assert_eq!(db.decide(&[1.0]).unwrap(), HmcDecision::Launch);
    }

    #[test]
    fn idw_interpolates_inside_bounding_box() {
        let mut db = HmcDatabase::new(HmcPolicy::default()).unwrap();
        db.insert(vec![0.0, 0.0], vec![1.0]).unwrap();
        db.insert(vec![1.0, 0.0], vec![1.0]).unwrap();
        db.insert(vec![0.0, 1.0], vec![1.0]).unwrap();
        db.insert(vec![1.0, 1.0], vec![1.0]).unwrap();
        match db.decide(&[0.5, 0.5]).unwrap() {
            HmcDecision::Interpolated(v) => assert!((v[0] - 1.0).abs() < 1e-12),
            other => panic!("expected interpolation, got {other:?}"),
        }
        // outside the hull of its neighbors
        assert_eq!(db.decide(&[5.0, 5.0]).unwrap(), HmcDecision::Launch);
    }

    #[test]
    fn duplicate_insert_needs_replace() {
        let mut db = db_1d(&[(0.0, 10.0)], 0.0);
        assert_eq!(db.insert(vec![0.0], vec![11.0]).unwrap_err(), HmcError::DuplicatePoint);
        db.insert_or_replace(vec![0.0], vec![11.0]).unwrap();
        assert_eq!(db.decide(&[0.0]).unwrap(), HmcDecision::Reuse(vec![11.0]));
        assert_eq!(db.len(), 1);
    }

    #[test]
    fn dimension_mismatch_is_caught() {
        let db = db_1d(&[(0.0, 10.0)], 0.0);
        assert_eq!(
            db.decide(&[0.0, 1.0]).unwrap_err(),
            HmcError::DimensionMismatch { expected: 1, got: 2 }
        );
    }

    #[test]
    fn precompute_fills_largest_gaps_first() {
        let db = db_1d(&[(0.0, 1.0)], 1e-9);
        let anticipated = vec![vec![1.0], vec![10.0], vec![0.0]];
        let picks = db.precompute_candidates(&anticipated, 1).unwrap();
        assert_eq!(picks, vec![vec![10.0]]);
        assert_eq!(db.precompute_candidates(&anticipated, 0).unwrap().len(), 0);
        let all = db.precompute_candidates(&anticipated, 10).unwrap();
        assert_eq!(all.len(), 2); // the cached point is not a candidate
    }

    #[test]
    fn replay_counts_and_caches() {
        let mut db = db_1d(&[], 1e-9);
        let queries = vec![vec![0.0], vec![2.0], vec![1.0], vec![0.0]];
        let trace = replay_queries(&mut db, &queries, 5.0, |q| vec![10.0 + 2.0 * q[0]]).unwrap();
        assert_eq!((trace.launches, trace.interpolations, trace.reuses), (2, 1, 1));
        assert_eq!(trace.time_s, 10.0);
    }

    proptest! {
        #[test]
        fn inserted_points_never_launch(xs in proptest::collection::btree_set(-50i32..50, 1..20)) {
            let mut db = HmcDatabase::new(HmcPolicy::default()).unwrap();
            let points: Vec<f64> = xs.iter().map(|x| *x as f64).collect();
            for x in &points {
                db.insert(vec![*x], vec![x * 2.0]).unwrap();
            }
            for x in &points {
                let d = db.decide(&[*x]).unwrap();
                prop_assert!(matches!(d, HmcDecision::Reuse(_)), "{d:?}");
            }
        }
    }
}
