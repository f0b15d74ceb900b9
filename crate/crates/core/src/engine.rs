//! Batch-mode active-learning loop.
//!
//! A run reveals a random seed set, then repeats: train on every revealed
//! label, evaluate on the held-out validation pool, record, select the next
//! batch with the configured strategy and reveal it. The run stops before
//! the labeled fraction would exceed the budget.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{train, ClassifierConfig, TrainedModel, UncertaintyMeasure};
use crate::error::{Error, Result};
use crate::metrics::{Agreement, RatingPairs};
use crate::pool::{EssayPool, ItemId};
use crate::strategies::{
    check_metric_support, select_hybrid, select_random, select_topological, select_uncertainty,
    DistanceMetric, HybridParams, SelectionBatch, StrategyKind,
};

/// Simulated rater: holds the true labels and hands them out on request.
#[derive(Debug, Clone)]
pub struct Oracle {
    hidden: HashMap<ItemId, usize>,
    revealed: HashMap<ItemId, usize>,
    log: Vec<ItemId>,
}

impl Oracle {
    pub fn from_pool(pool: &EssayPool) -> Self {
        Self {
            hidden: pool
                .records()
                .iter()
                .map(|r| (r.id, r.true_label))
                .collect(),
            revealed: HashMap::new(),
            log: Vec::new(),
        }
    }

    /// Reveals the label of `id`. Repeated reveals return the same label
    /// and are not counted again.
    pub fn reveal(&mut self, id: ItemId) -> Result<usize> {
        let label = *self
            .hidden
            .get(&id)
            .ok_or_else(|| Error::argument(format!("oracle knows no item {id}")))?;
        if self.revealed.insert(id, label).is_none() {
            self.log.push(id);
        }
        Ok(label)
    }

    pub fn revealed_count(&self) -> usize {
        self.log.len()
    }

    pub fn is_revealed(&self, id: ItemId) -> bool {
        self.revealed.contains_key(&id)
    }

    /// Distinct revealed ids in reveal order.
    pub fn reveal_log(&self) -> &[ItemId] {
        &self.log
    }

    pub fn label(&self, id: ItemId) -> Option<usize> {
        self.revealed.get(&id).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSchedule {
    pub seed_size: usize,
    pub batch_size: usize,
    /// Upper bound on the labeled share of the AL pool.
    pub max_fraction: f64,
}

impl BudgetSchedule {
    /// `seed_size = max(levels, 10)`, batches of 10, up to 20% of the pool.
    pub fn default_for(levels: usize) -> Self {
        Self {
            seed_size: levels.max(10),
            batch_size: 10,
            max_fraction: 0.2,
        }
    }

    pub fn validate(&self, pool_size: usize, levels: usize) -> Result<()> {
        if !(self.max_fraction > 0.0 && self.max_fraction <= 1.0) {
            return Err(Error::config(format!(
                "max_fraction must lie in (0, 1], got {}",
                self.max_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.seed_size < levels {
            return Err(Error::config(format!(
                "seed_size {} is smaller than the number of levels {levels}",
                self.seed_size
            )));
        }
        if self.seed_size > pool_size
            || self.fraction(self.seed_size, pool_size) > self.max_fraction
        {
            return Err(Error::config(format!(
                "seed_size {} does not fit in max_fraction {} of {pool_size} items",
                self.seed_size, self.max_fraction
            )));
        }
        Ok(())
    }

    fn fraction(&self, labeled: usize, pool_size: usize) -> f64 {
        labeled as f64 / pool_size as f64
    }

    /// Labeled counts at which the loop trains and records, in order.
    pub fn plan(&self, pool_size: usize) -> Vec<usize> {
        let mut counts = vec![self.seed_size];
        let mut labeled = self.seed_size;
        while labeled + self.batch_size <= pool_size
            && self.fraction(labeled + self.batch_size, pool_size) <= self.max_fraction
        {
            labeled += self.batch_size;
            counts.push(labeled);
        }
        counts
    }
}

/// Everything that parameterizes one run besides the data and the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strategy: StrategyKind,
    pub metric: DistanceMetric,
    pub measure: UncertaintyMeasure,
    pub hybrid: HybridParams,
    pub classifier: ClassifierConfig,
    pub schedule: BudgetSchedule,
}

impl ExperimentConfig {
    pub fn new(strategy: StrategyKind, levels: usize) -> Self {
        Self {
            strategy,
            metric: DistanceMetric::default(),
            measure: UncertaintyMeasure::default(),
            hybrid: HybridParams::default(),
            classifier: ClassifierConfig::default(),
            schedule: BudgetSchedule::default_for(levels),
        }
    }

    /// Rejects configurations that cannot run to completion on `pool_size` items.
    pub fn validate(&self, pool_size: usize, levels: usize) -> Result<()> {
        self.classifier.validate()?;
        self.hybrid.validate()?;
        self.schedule.validate(pool_size, levels)?;
        if self.strategy == StrategyKind::Hybrid {
            let plan = self.schedule.plan(pool_size);
            // Selections happen at every planned count except the last.
            for &labeled in &plan[..plan.len() - 1] {
                let kept = self.hybrid.candidate_count(pool_size - labeled);
                if kept < self.schedule.batch_size {
                    return Err(Error::config(format!(
                        "hybrid filter keeps {kept} candidates at {labeled} labeled items, \
                         fewer than batch_size {}",
                        self.schedule.batch_size
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub labeled_count: usize,
    pub labeled_fraction: f64,
    pub qwk: f64,
    pub kappa: f64,
    /// Percent.
    pub exact_agreement: f64,
    /// Ids revealed just before this iteration's training (the seed set for
    /// iteration 0).
    pub selected_ids: Vec<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub rng_seed: u64,
    pub pool_size: usize,
    pub validation_size: usize,
    pub levels: usize,
    pub iterations: Vec<IterationRecord>,
    pub full_data_qwk: f64,
}

/// Agreement between the model's argmax predictions and the true labels.
pub fn evaluate(model: &TrainedModel, validation: &EssayPool) -> Result<Agreement> {
    if validation.is_empty() {
        return Err(Error::argument("validation pool is empty"));
    }
    if model.dim() != validation.dim() {
        return Err(Error::argument(format!(
            "model dimension {} does not match validation dimension {}",
            model.dim(),
            validation.dim()
        )));
    }
    let mut human = Vec::with_capacity(validation.len());
    let mut machine = Vec::with_capacity(validation.len());
    for r in validation.records() {
        human.push(r.true_label);
        machine.push(model.predict(&r.features)?);
    }
    let pairs = RatingPairs::new(human, machine, validation.levels().max(model.levels()))?;
    Ok(Agreement::of(&pairs))
}

fn check_compatible(pool: &EssayPool, validation: &EssayPool) -> Result<()> {
    if pool.dim() != validation.dim() {
        return Err(Error::config(format!(
            "pool dimension {} differs from validation dimension {}",
            pool.dim(),
            validation.dim()
        )));
    }
    if pool.scale() != validation.scale() {
        return Err(Error::config(
            "pool and validation use different score scales",
        ));
    }
    if let Some(r) = validation.records().iter().find(|r| pool.contains(r.id)) {
        return Err(Error::config(format!(
            "item {} appears in both the pool and the validation set",
            r.id
        )));
    }
    Ok(())
}

/// Validation QWK of a model trained on every label in `pool`.
pub fn reference_full_training(
    pool: &EssayPool,
    validation: &EssayPool,
    config: &ClassifierConfig,
) -> Result<f64> {
    check_compatible(pool, validation)?;
    let model = train(
        pool.records()
            .iter()
            .map(|r| (r.features.as_slice(), r.true_label)),
        pool.levels(),
        config,
    )?;
    Ok(evaluate(&model, validation)?.qwk)
}

fn train_on_revealed(
    pool: &EssayPool,
    oracle: &Oracle,
    config: &ClassifierConfig,
) -> Result<TrainedModel> {
    let examples = oracle
        .reveal_log()
        .iter()
        .map(|&id| {
            let label = oracle.label(id).expect("logged ids are revealed");
            Ok((pool.features(id)?, label))
        })
        .collect::<Result<Vec<_>>>()?;
    train(examples, pool.levels(), config)
}

fn select_next(
    config: &ExperimentConfig,
    model: &TrainedModel,
    pool: &EssayPool,
    oracle: &Oracle,
    rng: &mut ChaCha8Rng,
) -> Result<SelectionBatch> {
    let unlabeled: Vec<ItemId> = pool
        .records()
        .iter()
        .map(|r| r.id)
        .filter(|&id| !oracle.is_revealed(id))
        .collect();
    let labeled = oracle.reveal_log();
    let k = config.schedule.batch_size;
    match config.strategy {
        StrategyKind::Random => select_random(&unlabeled, k, rng.random()),
        StrategyKind::Uncertainty => select_uncertainty(model, pool, &unlabeled, k, config.measure),
        StrategyKind::Topological => {
            select_topological(pool, &unlabeled, labeled, k, config.metric)
        }
        StrategyKind::Hybrid => select_hybrid(
            model,
            pool,
            &unlabeled,
            labeled,
            k,
            config.metric,
            config.measure,
            &config.hybrid,
        ),
    }
}

/// Runs the loop and also returns the oracle so callers can audit every reveal.
pub fn run_experiment_audited(
    pool: &EssayPool,
    validation: &EssayPool,
    config: &ExperimentConfig,
    rng_seed: u64,
) -> Result<(RunRecord, Oracle)> {
    check_compatible(pool, validation)?;
    config.validate(pool.len(), pool.levels())?;
    if matches!(
        config.strategy,
        StrategyKind::Topological | StrategyKind::Hybrid
    ) {
        check_metric_support(pool, config.metric)?;
    }
    if validation.is_empty() {
        return Err(Error::config("validation pool is empty"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut oracle = Oracle::from_pool(pool);
    let seed = select_random(&pool.ids(), config.schedule.seed_size, rng.random())?;
    for &id in &seed.ids {
        oracle.reveal(id)?;
    }

    let plan = config.schedule.plan(pool.len());
    let mut iterations = Vec::with_capacity(plan.len());
    let mut just_revealed = seed.ids;
    for (iteration, &expected) in plan.iter().enumerate() {
        debug_assert_eq!(oracle.revealed_count(), expected);
        let model = train_on_revealed(pool, &oracle, &config.classifier)?;
        let agreement = evaluate(&model, validation)?;
        let labeled_count = oracle.revealed_count();
        iterations.push(IterationRecord {
            iteration,
            labeled_count,
            labeled_fraction: labeled_count as f64 / pool.len() as f64,
            qwk: agreement.qwk,
            kappa: agreement.kappa,
            exact_agreement: agreement.exact,
            selected_ids: std::mem::take(&mut just_revealed),
        });
        if iteration + 1 == plan.len() {
            break;
        }
        let mut batch = select_next(config, &model, pool, &oracle, &mut rng)?;
        batch.iteration = iteration + 1;
        for &id in &batch.ids {
            oracle.reveal(id)?;
        }
        just_revealed = batch.ids;
    }

    let full_data_qwk = reference_full_training(pool, validation, &config.classifier)?;
    let record = RunRecord {
        config: *config,
        rng_seed,
        pool_size: pool.len(),
        validation_size: validation.len(),
        levels: pool.levels(),
        iterations,
        full_data_qwk,
    };
    Ok((record, oracle))
}

pub fn run_experiment(
    pool: &EssayPool,
    validation: &EssayPool,
    config: &ExperimentConfig,
    rng_seed: u64,
) -> Result<RunRecord> {
    Ok(run_experiment_audited(pool, validation, config, rng_seed)?.0)
}

/// Checks the accounting invariants of a finished run against its oracle:
/// reveal count, disjoint batches, and no validation id ever revealed.
pub fn audit_run(record: &RunRecord, oracle: &Oracle, validation: &EssayPool) -> Result<()> {
    let s = record.config.schedule;
    let iters = record.iterations.len();
    let expected = s.seed_size + s.batch_size * (iters - 1);
    if oracle.revealed_count() != expected {
        return Err(Error::argument(format!(
            "oracle revealed {} items, schedule implies {expected}",
            oracle.revealed_count()
        )));
    }
    let mut seen = HashSet::new();
    let mut replay: Vec<ItemId> = Vec::new();
    for it in &record.iterations {
        for &id in &it.selected_ids {
            if !seen.insert(id) {
                return Err(Error::argument(format!("item {id} selected twice")));
            }
            replay.push(id);
        }
        if replay.len() != it.labeled_count {
            return Err(Error::argument(format!(
                "iteration {} reports {} labeled items but {} were revealed",
                it.iteration,
                it.labeled_count,
                replay.len()
            )));
        }
    }
    if replay != oracle.reveal_log() {
        return Err(Error::argument(
            "recorded selections differ from the oracle's reveal log",
        ));
    }
    if let Some(r) = validation
        .records()
        .iter()
        .find(|r| oracle.is_revealed(r.id))
    {
        return Err(Error::argument(format!(
            "validation item {} was revealed",
            r.id
        )));
    }
    Ok(())
}
