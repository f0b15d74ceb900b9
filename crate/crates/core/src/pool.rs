//! Item pools, score scales and synthetic pool generation.
//!
//! A pool is an immutable set of feature vectors, each carrying a class
//! label in `0..levels`. Labels are only ever handed to the learner through
//! the [`Oracle`](crate::engine::Oracle).

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of an item, unique within a pool.
pub type ItemId = usize;

/// Number of normalized score classes used when nothing else is specified.
pub const DEFAULT_LEVELS: usize = 7;

/// Maps a raw rubric range onto `levels` normalized classes `0..levels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreScale {
    raw_min: i64,
    raw_max: i64,
    levels: usize,
}

impl ScoreScale {
    pub fn new(raw_min: i64, raw_max: i64, levels: usize) -> Result<Self> {
        if raw_min >= raw_max {
            return Err(Error::argument(format!(
                "score scale needs raw_min < raw_max, got [{raw_min}, {raw_max}]"
            )));
        }
        if levels < 2 {
            return Err(Error::argument(format!(
                "score scale needs at least 2 levels, got {levels}"
            )));
        }
        Ok(Self {
            raw_min,
            raw_max,
            levels,
        })
    }

    /// The identity scale whose raw scores already are the class indices.
    pub fn identity(levels: usize) -> Result<Self> {
        let top = i64::try_from(levels)
            .map_err(|_| Error::argument("levels too large"))?
            .saturating_sub(1);
        Self::new(0, top, levels)
    }

    pub fn raw_min(&self) -> i64 {
        self.raw_min
    }

    pub fn raw_max(&self) -> i64 {
        self.raw_max
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Raw score to class index: min-max normalization followed by rounding.
    pub fn classify(&self, raw: i64) -> Result<usize> {
        discretize_score(normalize_score(raw, self)?, self)
    }
}

/// Min-max normalizes `raw` onto `[0, levels - 1]`.
pub fn normalize_score(raw: i64, scale: &ScoreScale) -> Result<f64> {
    if raw < scale.raw_min || raw > scale.raw_max {
        return Err(Error::Range {
            what: "raw score",
            value: raw.to_string(),
            min: scale.raw_min.to_string(),
            max: scale.raw_max.to_string(),
        });
    }
    let top = (scale.levels - 1) as f64;
    if raw == scale.raw_max {
        return Ok(top);
    }
    let span = (scale.raw_max - scale.raw_min) as f64;
    Ok((raw - scale.raw_min) as f64 / span * top)
}

/// Nearest class index; exact halves round away from zero.
pub fn discretize_score(norm: f64, scale: &ScoreScale) -> Result<usize> {
    let top = (scale.levels - 1) as f64;
    if !(0.0..=top).contains(&norm) {
        return Err(Error::Range {
            what: "normalized score",
            value: norm.to_string(),
            min: "0".into(),
            max: top.to_string(),
        });
    }
    Ok(norm.round() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssayRecord {
    pub id: ItemId,
    pub features: Vec<f64>,
    pub true_label: usize,
}

/// A validated, immutable collection of records sharing one feature dimension.
#[derive(Debug, Clone)]
pub struct EssayPool {
    dim: usize,
    scale: ScoreScale,
    records: Vec<EssayRecord>,
    index: HashMap<ItemId, usize>,
}

impl PartialEq for EssayPool {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.scale == other.scale && self.records == other.records
    }
}

impl EssayPool {
    pub fn new(dim: usize, scale: ScoreScale, records: Vec<EssayRecord>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("feature dimension must be at least 1"));
        }
        let mut index = HashMap::with_capacity(records.len());
        for (pos, rec) in records.iter().enumerate() {
            if rec.features.len() != dim {
                return Err(Error::argument(format!(
                    "record {} has {} features, pool dimension is {dim}",
                    rec.id,
                    rec.features.len()
                )));
            }
            if let Some(col) = rec.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::numeric(format!(
                    "record {} has a non-finite value in feature f{col}",
                    rec.id
                )));
            }
            if rec.true_label >= scale.levels {
                return Err(Error::argument(format!(
                    "record {} has label {} but the scale has {} levels",
                    rec.id, rec.true_label, scale.levels
                )));
            }
            if index.insert(rec.id, pos).is_some() {
                return Err(Error::argument(format!("duplicate item id {}", rec.id)));
            }
        }
        Ok(Self {
            dim,
            scale,
            records,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> &ScoreScale {
        &self.scale
    }

    pub fn levels(&self) -> usize {
        self.scale.levels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EssayRecord] {
        &self.records
    }

    pub fn get(&self, id: ItemId) -> Option<&EssayRecord> {
        self.index.get(&id).map(|&pos| &self.records[pos])
    }

    pub fn contains(&self, id: ItemId) -> bool {
        self.index.contains_key(&id)
    }

    /// Feature vector of `id`, or an argument error if the id is unknown.
    pub fn features(&self, id: ItemId) -> Result<&[f64]> {
        self.get(id)
            .map(|r| r.features.as_slice())
            .ok_or_else(|| Error::argument(format!("item {id} is not in the pool")))
    }

    /// Ids in record order.
    pub fn ids(&self) -> Vec<ItemId> {
        self.records.iter().map(|r| r.id).collect()
    }

    /// Count of records per class, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.scale.levels];
        for r in &self.records {
            counts[r.true_label] += 1;
        }
        counts
    }

    fn subset(&self, keep: &[bool]) -> Result<Self> {
        let records = self
            .records
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(r, _)| r.clone())
            .collect();
        Self::new(self.dim, self.scale, records)
    }
}

/// Partitions `pool` into two disjoint parts; the first has
/// `round(fraction * n)` records. Both parts keep the parent's ids and
/// record order.
///
/// With `stratified`, each class contributes `floor(fraction * n_c)` records
/// to the first part and the remaining quota goes to the classes with the
/// largest fractional remainders (lowest class first on ties).
pub fn split_pool(
    pool: &EssayPool,
    fraction: f64,
    stratified: bool,
    rng_seed: u64,
) -> Result<(EssayPool, EssayPool)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::argument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = pool.len();
    let first = (fraction * n as f64).round() as usize;
    if first == 0 || first == n {
        return Err(Error::argument(format!(
            "split fraction {fraction} of {n} records leaves an empty part"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut keep = vec![false; n];

    if stratified {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (pos, r) in pool.records.iter().enumerate() {
            by_class.entry(r.true_label).or_default().push(pos);
        }
        let mut quota: Vec<(usize, usize, f64)> = by_class
            .iter()
            .map(|(&class, members)| {
                let exact = fraction * members.len() as f64;
                (class, exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let mut remaining = first.saturating_sub(quota.iter().map(|q| q.1).sum::<usize>());
        let mut order: Vec<usize> = (0..quota.len()).collect();
        order.sort_by(|&a, &b| quota[b].2.total_cmp(&quota[a].2).then(a.cmp(&b)));
        for &i in order.iter().cycle() {
            if remaining == 0 {
                break;
            }
            let cap = by_class[&quota[i].0].len();
            if quota[i].1 < cap {
                quota[i].1 += 1;
                remaining -= 1;
            }
        }
        for (class, take, _) in quota {
            let mut members = by_class[&class].clone();
            members.shuffle(&mut rng);
            for &pos in &members[..take] {
                keep[pos] = true;
            }
        }
    } else {
        let mut positions: Vec<usize> = (0..n).collect();
        positions.shuffle(&mut rng);
        for &pos in &positions[..first] {
            keep[pos] = true;
        }
    }

    let rest: Vec<bool> = keep.iter().map(|k| !k).collect();
    Ok((pool.subset(&keep)?, pool.subset(&rest)?))
}

/// Parameters of a synthetic pool: one isotropic Gaussian cluster per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub levels: usize,
    pub per_class_count: usize,
    /// Distance between adjacent class means.
    pub separation: f64,
    pub noise_sigma: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::argument("synthetic dim must be at least 1"));
        }
        if self.levels < 2 {
            return Err(Error::argument("synthetic levels must be at least 2"));
        }
        if self.per_class_count == 0 {
            return Err(Error::argument(
                "synthetic per_class_count must be at least 1",
            ));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::argument(format!(
                "synthetic separation must be finite and >= 0, got {}",
                self.separation
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return Err(Error::argument(format!(
                "synthetic noise_sigma must be finite and > 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Class `k` is centred at `k * separation` on the first axis. Records are
/// emitted class by class with dense ids `0..levels * per_class_count`.
pub fn generate_synthetic_pool(spec: &SyntheticSpec, rng_seed: u64) -> Result<EssayPool> {
    spec.validate()?;
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::argument(format!("noise distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut records = Vec::with_capacity(spec.levels * spec.per_class_count);
    for class in 0..spec.levels {
        let offset = class as f64 * spec.separation;
        for _ in 0..spec.per_class_count {
            let mut features: Vec<f64> = (0..spec.dim).map(|_| noise.sample(&mut rng)).collect();
            features[0] += offset;
            records.push(EssayRecord {
                id: records.len(),
                features,
                true_label: class,
            });
        }
    }
    EssayPool::new(spec.dim, ScoreScale::identity(spec.levels)?, records)
}
