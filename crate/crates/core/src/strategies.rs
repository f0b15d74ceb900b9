//! Batch selection rules over the unlabeled part of a pool.
//!
//! Every rule is deterministic and breaks exact ties toward the lowest id.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{uncertainty, TrainedModel, UncertaintyMeasure};
use crate::error::{Error, Result};
use crate::pool::{EssayPool, ItemId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    /// `1 - cos(a, b)`; undefined for zero vectors.
    Cosine,
}

impl DistanceMetric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::argument(format!(
                "cannot compare vectors of length {} and {}",
                a.len(),
                b.len()
            )));
        }
        match self {
            Self::Euclidean => Ok(a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()),
            Self::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 || nb == 0.0 {
                    return Err(Error::numeric("cosine distance with a zero-norm vector"));
                }
                Ok(1.0 - dot / (na.sqrt() * nb.sqrt()))
            }
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Euclidean => "euclidean",
            Self::Cosine => "cosine",
        })
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "cosine" => Ok(Self::Cosine),
            other => Err(Error::argument(format!(
                "unknown distance metric '{other}' (expected euclidean or cosine)"
            ))),
        }
    }
}

/// Minimum distance from `point` to any member of `chosen`.
pub fn min_distance_to_set(
    point: &[f64],
    chosen: &[&[f64]],
    metric: DistanceMetric,
) -> Result<f64> {
    if chosen.is_empty() {
        return Err(Error::argument("distance to an empty set"));
    }
    let mut best = f64::INFINITY;
    for c in chosen {
        best = best.min(metric.distance(point, c)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    Uncertainty,
    Topological,
    Hybrid,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Random,
        StrategyKind::Uncertainty,
        StrategyKind::Topological,
        StrategyKind::Hybrid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Uncertainty => "uncertainty",
            Self::Topological => "topological",
            Self::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::argument(format!(
                    "unknown strategy '{s}' (expected random, uncertainty, topological or hybrid)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionBatch {
    pub ids: Vec<ItemId>,
    pub strategy: StrategyKind,
    pub iteration: usize,
}

impl SelectionBatch {
    fn new(ids: Vec<ItemId>, strategy: StrategyKind) -> Self {
        Self {
            ids,
            strategy,
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    /// Share of the unlabeled pool, ranked by uncertainty, that the
    /// farthest-first pass may pick from.
    pub pool_fraction: f64,
}

impl Default for HybridParams {
    fn default() -> Self {
        Self { pool_fraction: 0.5 }
    }
}

impl HybridParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pool_fraction > 0.0 && self.pool_fraction <= 1.0) {
            return Err(Error::config(format!(
                "hybrid pool_fraction must lie in (0, 1], got {}",
                self.pool_fraction
            )));
        }
        Ok(())
    }

    /// Number of candidates kept out of `unlabeled` items.
    pub fn candidate_count(&self, unlabeled: usize) -> usize {
        ((self.pool_fraction * unlabeled as f64).ceil() as usize).min(unlabeled)
    }
}

fn sorted_unique(ids: &[ItemId]) -> Result<Vec<ItemId>> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::argument(format!("id {} listed twice", w[0])));
    }
    Ok(sorted)
}

fn check_k(k: usize, available: usize) -> Result<()> {
    if k > available {
        return Err(Error::argument(format!(
            "requested {k} items but only {available} are available"
        )));
    }
    Ok(())
}

/// Uniform sample of `k` ids without replacement. The draw depends only on
/// the set of ids, not on their listed order.
pub fn select_random(unlabeled_ids: &[ItemId], k: usize, rng_seed: u64) -> Result<SelectionBatch> {
    let sorted = sorted_unique(unlabeled_ids)?;
    check_k(k, sorted.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let ids = rand::seq::index::sample(&mut rng, sorted.len(), k)
        .into_iter()
        .map(|i| sorted[i])
        .collect();
    Ok(SelectionBatch::new(ids, StrategyKind::Random))
}

/// `(id, uncertainty)` for every unlabeled id, most uncertain first, ties by id.
pub fn uncertainty_ranking(
    model: &TrainedModel,
    pool: &EssayPool,
    unlabeled_ids: &[ItemId],
    measure: UncertaintyMeasure,
) -> Result<Vec<(ItemId, f64)>> {
    let sorted = sorted_unique(unlabeled_ids)?;
    let mut scored = sorted
        .into_iter()
        .map(|id| {
            let probs = model.predict_proba(pool.features(id)?)?;
            Ok((id, uncertainty(&probs, measure)))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}

pub fn select_uncertainty(
    model: &TrainedModel,
    pool: &EssayPool,
    unlabeled_ids: &[ItemId],
    k: usize,
    measure: UncertaintyMeasure,
) -> Result<SelectionBatch> {
    check_k(k, unlabeled_ids.len())?;
    let ranking = uncertainty_ranking(model, pool, unlabeled_ids, measure)?;
    let ids = ranking.into_iter().take(k).map(|(id, _)| id).collect();
    Ok(SelectionBatch::new(ids, StrategyKind::Uncertainty))
}

/// Greedy farthest-first traversal over `candidates`.
///
/// With an empty `already_selected`, the first pick is the candidate
/// farthest from the candidates' centroid.
fn farthest_first(
    pool: &EssayPool,
    candidates: &[ItemId],
    already_selected: &[ItemId],
    k: usize,
    metric: DistanceMetric,
) -> Result<Vec<ItemId>> {
    let points = candidates
        .iter()
        .map(|&id| pool.features(id))
        .collect::<Result<Vec<_>>>()?;
    let mut min_dist = vec![f64::INFINITY; candidates.len()];
    let mut taken = vec![false; candidates.len()];
    let mut picks = Vec::with_capacity(k);
    if k == 0 {
        return Ok(picks);
    }

    if already_selected.is_empty() {
        let mut centroid = vec![0.0; pool.dim()];
        for p in &points {
            for (c, v) in centroid.iter_mut().zip(p.iter()) {
                *c += v;
            }
        }
        let n = points.len() as f64;
        centroid.iter_mut().for_each(|c| *c /= n);
        let from_centroid = points
            .iter()
            .map(|p| metric.distance(p, &centroid))
            .collect::<Result<Vec<_>>>()?;
        let first = argmax_untaken(&from_centroid, &taken);
        taken[first] = true;
        picks.push(candidates[first]);
        for (d, p) in min_dist.iter_mut().zip(&points) {
            *d = metric.distance(p, points[first])?;
        }
    } else {
        for &id in already_selected {
            let s = pool.features(id)?;
            for (d, p) in min_dist.iter_mut().zip(&points) {
                *d = d.min(metric.distance(p, s)?);
            }
        }
    }

    while picks.len() < k {
        let next = argmax_untaken(&min_dist, &taken);
        taken[next] = true;
        picks.push(candidates[next]);
        let s = points[next];
        for ((d, p), &t) in min_dist.iter_mut().zip(&points).zip(&taken) {
            if !t {
                *d = d.min(metric.distance(p, s)?);
            }
        }
    }
    Ok(picks)
}

// `values` is indexed like the id-sorted candidate list, so the first
// maximum is the lowest id.
fn argmax_untaken(values: &[f64], taken: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (i, (&v, &t)) in values.iter().zip(taken).enumerate() {
        if t {
            continue;
        }
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best.expect("caller guarantees an untaken candidate")
}

/// Farthest-first (k-center greedy) selection: each pick maximizes its
/// minimum distance to `already_selected` plus the picks made so far.
pub fn select_topological(
    pool: &EssayPool,
    unlabeled_ids: &[ItemId],
    already_selected_ids: &[ItemId],
    k: usize,
    metric: DistanceMetric,
) -> Result<SelectionBatch> {
    let candidates = sorted_unique(unlabeled_ids)?;
    check_k(k, candidates.len())?;
    let ids = farthest_first(pool, &candidates, already_selected_ids, k, metric)?;
    Ok(SelectionBatch::new(ids, StrategyKind::Topological))
}

/// The uncertainty-filtered candidate set used by [`select_hybrid`], in id order.
pub fn hybrid_candidates(
    model: &TrainedModel,
    pool: &EssayPool,
    unlabeled_ids: &[ItemId],
    measure: UncertaintyMeasure,
    params: &HybridParams,
) -> Result<Vec<ItemId>> {
    params.validate()?;
    let ranking = uncertainty_ranking(model, pool, unlabeled_ids, measure)?;
    let keep = params.candidate_count(ranking.len());
    let mut candidates: Vec<ItemId> = ranking.into_iter().take(keep).map(|(id, _)| id).collect();
    candidates.sort_unstable();
    Ok(candidates)
}

/// Farthest-first selection restricted to the most uncertain
/// `ceil(pool_fraction * n)` unlabeled items.
#[allow(clippy::too_many_arguments)]
pub fn select_hybrid(
    model: &TrainedModel,
    pool: &EssayPool,
    unlabeled_ids: &[ItemId],
    already_selected_ids: &[ItemId],
    k: usize,
    metric: DistanceMetric,
    measure: UncertaintyMeasure,
    params: &HybridParams,
) -> Result<SelectionBatch> {
    let candidates = hybrid_candidates(model, pool, unlabeled_ids, measure, params)?;
    if k > candidates.len() {
        return Err(Error::argument(format!(
            "requested {k} items but the uncertainty filter keeps only {} of {}",
            candidates.len(),
            unlabeled_ids.len()
        )));
    }
    let ids = farthest_first(pool, &candidates, already_selected_ids, k, metric)?;
    Ok(SelectionBatch::new(ids, StrategyKind::Hybrid))
}

/// Rejects pools containing a vector the metric cannot handle.
pub fn check_metric_support(pool: &EssayPool, metric: DistanceMetric) -> Result<()> {
    if metric == DistanceMetric::Cosine {
        if let Some(r) = pool
            .records()
            .iter()
            .find(|r| r.features.iter().all(|&v| v == 0.0))
        {
            return Err(Error::config(format!(
                "cosine distance needs non-zero vectors; item {} is all zeros",
                r.id
            )));
        }
    }
    Ok(())
}

/// Checks the batch invariants shared by all strategies.
pub fn validate_batch(batch: &SelectionBatch, unlabeled_ids: &[ItemId]) -> Result<()> {
    let unlabeled: HashSet<_> = unlabeled_ids.iter().collect();
    let mut seen = HashSet::new();
    for id in &batch.ids {
        if !unlabeled.contains(id) {
            return Err(Error::argument(format!(
                "selected id {id} is not unlabeled"
            )));
        }
        if !seen.insert(id) {
            return Err(Error::argument(format!("selected id {id} twice")));
        }
    }
    Ok(())
}
