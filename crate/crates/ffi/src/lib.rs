//! C ABI over `activescore`.
//!
//! Conventions:
//! - Every function returns an [`AsStatus`]; results go through out-pointers.
//! - Handles (`AsPool`, `AsModel`, `AsRun`) are opaque, owned by the caller
//!   once returned, and released with the matching `*_free` function.
//! - On failure, `as_last_error_message` describes the error until the next
//!   call on the same thread.
//! - Panics never cross the boundary; they surface as `AS_STATUS_PANIC`.
//!
//! All pointer arguments must be either null (rejected with
//! `AS_STATUS_NULL_POINTER`) or valid for the documented length. Handles must
//! come from this library and must not be used after being freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use activescore::classifier::{train, ClassifierConfig, TrainedModel, UncertaintyMeasure};
use activescore::engine::{run_experiment, BudgetSchedule, ExperimentConfig, RunRecord};
use activescore::ingest::{load_pool, save_pool, write_curve, write_report};
use activescore::metrics::{growth_curve, qwk, target_fraction, Agreement, RatingPairs};
use activescore::pool::{
    generate_synthetic_pool, split_pool, EssayPool, EssayRecord, ScoreScale, SyntheticSpec,
};
use activescore::strategies::{DistanceMetric, HybridParams, StrategyKind};
use activescore::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Data = 4,
    Io = 5,
    Numeric = 6,
    Utf8 = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsStrategy {
    Random = 0,
    Uncertainty = 1,
    Topological = 2,
    Hybrid = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsMetric {
    Euclidean = 0,
    Cosine = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsMeasure {
    LeastConfidence = 0,
    Margin = 1,
    Entropy = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsAgreement {
    pub qwk: f64,
    pub kappa: f64,
    /// Percentage in [0, 100].
    pub exact: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsSyntheticSpec {
    pub dim: usize,
    pub levels: usize,
    pub per_class_count: usize,
    pub separation: f64,
    pub noise_sigma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsClassifierConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
    pub rng_seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsExperimentConfig {
    pub strategy: AsStrategy,
    pub metric: AsMetric,
    pub measure: AsMeasure,
    /// Hybrid uncertainty filter share, in (0, 1].
    pub pool_fraction: f64,
    pub seed_size: usize,
    pub batch_size: usize,
    pub max_fraction: f64,
    pub classifier: AsClassifierConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsIteration {
    pub iteration: usize,
    pub labeled_count: usize,
    pub labeled_fraction: f64,
    pub qwk: f64,
    pub kappa: f64,
    pub exact_agreement: f64,
}

pub struct AsPool(EssayPool);
pub struct AsModel(TrainedModel);
pub struct AsRun(RunRecord);

struct Failure(AsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Range { .. } | Error::Argument(_) => AsStatus::InvalidArgument,
            Error::Config(_) => AsStatus::Config,
            Error::Format { .. } | Error::Data { .. } | Error::Serde(_) => AsStatus::Data,
            Error::Io { .. } => AsStatus::Io,
            Error::Numeric(_) => AsStatus::Numeric,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(AsStatus::InvalidArgument, msg.into())
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            AsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(AsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure(AsStatus::NullPointer, format!("{what} is null")));
    }
    p.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(AsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(AsStatus::NullPointer, "path is null".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(AsStatus::Utf8, format!("path is not UTF-8: {e}")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

impl From<AsStrategy> for StrategyKind {
    fn from(s: AsStrategy) -> Self {
        match s {
            AsStrategy::Random => StrategyKind::Random,
            AsStrategy::Uncertainty => StrategyKind::Uncertainty,
            AsStrategy::Topological => StrategyKind::Topological,
            AsStrategy::Hybrid => StrategyKind::Hybrid,
        }
    }
}

impl From<StrategyKind> for AsStrategy {
    fn from(s: StrategyKind) -> Self {
        match s {
            StrategyKind::Random => AsStrategy::Random,
            StrategyKind::Uncertainty => AsStrategy::Uncertainty,
            StrategyKind::Topological => AsStrategy::Topological,
            StrategyKind::Hybrid => AsStrategy::Hybrid,
        }
    }
}

impl From<AsMetric> for DistanceMetric {
    fn from(m: AsMetric) -> Self {
        match m {
            AsMetric::Euclidean => DistanceMetric::Euclidean,
            AsMetric::Cosine => DistanceMetric::Cosine,
        }
    }
}

impl From<DistanceMetric> for AsMetric {
    fn from(m: DistanceMetric) -> Self {
        match m {
            DistanceMetric::Euclidean => AsMetric::Euclidean,
            DistanceMetric::Cosine => AsMetric::Cosine,
        }
    }
}

impl From<AsMeasure> for UncertaintyMeasure {
    fn from(m: AsMeasure) -> Self {
        match m {
            AsMeasure::LeastConfidence => UncertaintyMeasure::LeastConfidence,
            AsMeasure::Margin => UncertaintyMeasure::Margin,
            AsMeasure::Entropy => UncertaintyMeasure::Entropy,
        }
    }
}

impl From<UncertaintyMeasure> for AsMeasure {
    fn from(m: UncertaintyMeasure) -> Self {
        match m {
            UncertaintyMeasure::LeastConfidence => AsMeasure::LeastConfidence,
            UncertaintyMeasure::Margin => AsMeasure::Margin,
            UncertaintyMeasure::Entropy => AsMeasure::Entropy,
        }
    }
}

impl From<AsClassifierConfig> for ClassifierConfig {
    fn from(c: AsClassifierConfig) -> Self {
        ClassifierConfig {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            l2_lambda: c.l2_lambda,
            rng_seed: c.rng_seed,
        }
    }
}

impl From<ClassifierConfig> for AsClassifierConfig {
    fn from(c: ClassifierConfig) -> Self {
        AsClassifierConfig {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            l2_lambda: c.l2_lambda,
            rng_seed: c.rng_seed,
        }
    }
}

impl From<AsExperimentConfig> for ExperimentConfig {
    fn from(c: AsExperimentConfig) -> Self {
        ExperimentConfig {
            strategy: c.strategy.into(),
            metric: c.metric.into(),
            measure: c.measure.into(),
            hybrid: HybridParams {
                pool_fraction: c.pool_fraction,
            },
            classifier: c.classifier.into(),
            schedule: BudgetSchedule {
                seed_size: c.seed_size,
                batch_size: c.batch_size,
                max_fraction: c.max_fraction,
            },
        }
    }
}

fn ratings(p: *const u32, len: usize, what: &str) -> Result<Vec<usize>, Failure> {
    Ok(unsafe { slice(p, len, what)? }
        .iter()
        .map(|&v| v as usize)
        .collect())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn as_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn as_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// QWK, Cohen's kappa and exact agreement of two rating vectors of length
/// `len` with values in `[0, levels)`.
#[no_mangle]
pub unsafe extern "C" fn as_agreement(
    human: *const u32,
    machine: *const u32,
    len: usize,
    levels: usize,
    out: *mut AsAgreement,
) -> AsStatus {
    guard(|| {
        let pairs = RatingPairs::new(
            ratings(human, len, "human")?,
            ratings(machine, len, "machine")?,
            levels,
        )?;
        let a = Agreement::of(&pairs);
        write_out(
            out,
            AsAgreement {
                qwk: a.qwk,
                kappa: a.kappa,
                exact: a.exact,
            },
            "out",
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_qwk(
    human: *const u32,
    machine: *const u32,
    len: usize,
    levels: usize,
    out: *mut f64,
) -> AsStatus {
    guard(|| {
        let pairs = RatingPairs::new(
            ratings(human, len, "human")?,
            ratings(machine, len, "machine")?,
            levels,
        )?;
        write_out(out, qwk(&pairs), "out")
    })
}

/// Loads a pool CSV file.
#[no_mangle]
pub unsafe extern "C" fn as_pool_load(path: *const c_char, out: *mut *mut AsPool) -> AsStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(Failure(AsStatus::NullPointer, "out is null".into()));
        }
        let pool = load_pool(path)?.pool;
        write_out(out, boxed(AsPool(pool)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_pool_save(pool: *const AsPool, path: *const c_char) -> AsStatus {
    guard(|| {
        let pool = deref(pool, "pool")?;
        save_pool(&pool.0, None, path_arg(path)?)?;
        Ok(())
    })
}

/// Builds a pool from a row-major `n x dim` feature matrix and `n` labels
/// in `[0, levels)`. Item ids are the row indices.
#[no_mangle]
pub unsafe extern "C" fn as_pool_from_arrays(
    features: *const f64,
    labels: *const u32,
    n: usize,
    dim: usize,
    levels: usize,
    out: *mut *mut AsPool,
) -> AsStatus {
    guard(|| {
        let total = n
            .checked_mul(dim)
            .ok_or_else(|| invalid("n * dim overflows"))?;
        let features = slice(features, total, "features")?;
        let labels = slice(labels, n, "labels")?;
        if out.is_null() {
            return Err(Failure(AsStatus::NullPointer, "out is null".into()));
        }
        let records = (0..n)
            .map(|i| EssayRecord {
                id: i,
                features: features[i * dim..(i + 1) * dim].to_vec(),
                true_label: labels[i] as usize,
            })
            .collect();
        let pool = EssayPool::new(dim, ScoreScale::identity(levels)?, records)?;
        write_out(out, boxed(AsPool(pool)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_pool_generate(
    spec: *const AsSyntheticSpec,
    seed: u64,
    out: *mut *mut AsPool,
) -> AsStatus {
    guard(|| {
        let s = deref(spec, "spec")?;
        if out.is_null() {
            return Err(Failure(AsStatus::NullPointer, "out is null".into()));
        }
        let spec = SyntheticSpec {
            dim: s.dim,
            levels: s.levels,
            per_class_count: s.per_class_count,
            separation: s.separation,
            noise_sigma: s.noise_sigma,
        };
        write_out(
            out,
            boxed(AsPool(generate_synthetic_pool(&spec, seed)?)),
            "out",
        )
    })
}

/// Splits `pool` into a first part of `round(fraction * n)` items and the
/// remainder. The input handle stays valid.
#[no_mangle]
pub unsafe extern "C" fn as_pool_split(
    pool: *const AsPool,
    fraction: f64,
    stratified: bool,
    seed: u64,
    out_first: *mut *mut AsPool,
    out_second: *mut *mut AsPool,
) -> AsStatus {
    guard(|| {
        let pool = deref(pool, "pool")?;
        if out_first.is_null() || out_second.is_null() {
            return Err(Failure(
                AsStatus::NullPointer,
                "output handle is null".into(),
            ));
        }
        let (a, b) = split_pool(&pool.0, fraction, stratified, seed)?;
        write_out(out_first, boxed(AsPool(a)), "out_first")?;
        write_out(out_second, boxed(AsPool(b)), "out_second")
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_pool_len(pool: *const AsPool, out: *mut usize) -> AsStatus {
    guard(|| write_out(out, deref(pool, "pool")?.0.len(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn as_pool_dim(pool: *const AsPool, out: *mut usize) -> AsStatus {
    guard(|| write_out(out, deref(pool, "pool")?.0.dim(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn as_pool_levels(pool: *const AsPool, out: *mut usize) -> AsStatus {
    guard(|| write_out(out, deref(pool, "pool")?.0.levels(), "out"))
}

/// Releases a pool; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn as_pool_free(pool: *mut AsPool) {
    free(pool);
}

#[no_mangle]
pub extern "C" fn as_classifier_config_default() -> AsClassifierConfig {
    ClassifierConfig::default().into()
}

/// Default experiment configuration for `strategy` on a pool with `levels`
/// classes.
#[no_mangle]
pub extern "C" fn as_experiment_config_default(
    strategy: AsStrategy,
    levels: usize,
) -> AsExperimentConfig {
    let c = ExperimentConfig::new(strategy.into(), levels);
    AsExperimentConfig {
        strategy: c.strategy.into(),
        metric: c.metric.into(),
        measure: c.measure.into(),
        pool_fraction: c.hybrid.pool_fraction,
        seed_size: c.schedule.seed_size,
        batch_size: c.schedule.batch_size,
        max_fraction: c.schedule.max_fraction,
        classifier: c.classifier.into(),
    }
}

/// Trains on every record of `pool`. A null `config` means the defaults.
#[no_mangle]
pub unsafe extern "C" fn as_model_train(
    pool: *const AsPool,
    config: *const AsClassifierConfig,
    out: *mut *mut AsModel,
) -> AsStatus {
    guard(|| {
        let pool = &deref(pool, "pool")?.0;
        let config = config
            .as_ref()
            .map_or_else(ClassifierConfig::default, |c| (*c).into());
        if out.is_null() {
            return Err(Failure(AsStatus::NullPointer, "out is null".into()));
        }
        let model = train(
            pool.records()
                .iter()
                .map(|r| (r.features.as_slice(), r.true_label)),
            pool.levels(),
            &config,
        )?;
        write_out(out, boxed(AsModel(model)), "out")
    })
}

/// Writes `levels` probabilities into `out_probs`, which must hold at least
/// `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn as_model_predict_proba(
    model: *const AsModel,
    features: *const f64,
    dim: usize,
    out_probs: *mut f64,
    capacity: usize,
) -> AsStatus {
    guard(|| {
        let model = &deref(model, "model")?.0;
        let x = slice(features, dim, "features")?;
        let probs = model.predict_proba(x)?;
        let p = probs.as_slice();
        if capacity < p.len() {
            return Err(invalid(format!(
                "capacity {capacity} is below levels {}",
                p.len()
            )));
        }
        if out_probs.is_null() {
            return Err(Failure(AsStatus::NullPointer, "out_probs is null".into()));
        }
        std::ptr::copy_nonoverlapping(p.as_ptr(), out_probs, p.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_model_predict(
    model: *const AsModel,
    features: *const f64,
    dim: usize,
    out_class: *mut usize,
) -> AsStatus {
    guard(|| {
        let model = &deref(model, "model")?.0;
        let class = model.predict(slice(features, dim, "features")?)?;
        write_out(out_class, class, "out_class")
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_model_levels(model: *const AsModel, out: *mut usize) -> AsStatus {
    guard(|| write_out(out, deref(model, "model")?.0.levels(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn as_model_dim(model: *const AsModel, out: *mut usize) -> AsStatus {
    guard(|| write_out(out, deref(model, "model")?.0.dim(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn as_model_free(model: *mut AsModel) {
    free(model);
}

/// Runs one active-learning experiment on `pool`, evaluating on
/// `validation`.
#[no_mangle]
pub unsafe extern "C" fn as_run_experiment(
    pool: *const AsPool,
    validation: *const AsPool,
    config: *const AsExperimentConfig,
    seed: u64,
    out: *mut *mut AsRun,
) -> AsStatus {
    guard(|| {
        let pool = &deref(pool, "pool")?.0;
        let validation = &deref(validation, "validation")?.0;
        let config: ExperimentConfig = (*deref(config, "config")?).into();
        if out.is_null() {
            return Err(Failure(AsStatus::NullPointer, "out is null".into()));
        }
        let run = run_experiment(pool, validation, &config, seed)?;
        write_out(out, boxed(AsRun(run)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_run_iteration_count(run: *const AsRun, out: *mut usize) -> AsStatus {
    guard(|| write_out(out, deref(run, "run")?.0.iterations.len(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn as_run_iteration(
    run: *const AsRun,
    index: usize,
    out: *mut AsIteration,
) -> AsStatus {
    guard(|| {
        let run = &deref(run, "run")?.0;
        let it = run
            .iterations
            .get(index)
            .ok_or_else(|| invalid(format!("iteration {index} out of {}", run.iterations.len())))?;
        write_out(
            out,
            AsIteration {
                iteration: it.iteration,
                labeled_count: it.labeled_count,
                labeled_fraction: it.labeled_fraction,
                qwk: it.qwk,
                kappa: it.kappa,
                exact_agreement: it.exact_agreement,
            },
            "out",
        )
    })
}

/// Copies the ids revealed before iteration `index` into `out_ids`
/// (capacity `capacity`) and their number into `out_len`. When the buffer
/// is too small, only `out_len` is written and the call fails.
#[no_mangle]
pub unsafe extern "C" fn as_run_selected_ids(
    run: *const AsRun,
    index: usize,
    out_ids: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> AsStatus {
    guard(|| {
        let run = &deref(run, "run")?.0;
        let ids = &run
            .iterations
            .get(index)
            .ok_or_else(|| invalid(format!("iteration {index} out of {}", run.iterations.len())))?
            .selected_ids;
        write_out(out_len, ids.len(), "out_len")?;
        if capacity < ids.len() {
            return Err(invalid(format!(
                "capacity {capacity} is below {}",
                ids.len()
            )));
        }
        if !ids.is_empty() {
            if out_ids.is_null() {
                return Err(Failure(AsStatus::NullPointer, "out_ids is null".into()));
            }
            std::ptr::copy_nonoverlapping(ids.as_ptr(), out_ids, ids.len());
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_run_full_data_qwk(run: *const AsRun, out: *mut f64) -> AsStatus {
    guard(|| write_out(out, deref(run, "run")?.0.full_data_qwk, "out"))
}

/// Smallest labeled fraction whose QWK reaches `ratio` times the full-data
/// QWK. `out_reached` is false (and `out_fraction` untouched) when no
/// iteration gets there or the full-data QWK is not positive.
#[no_mangle]
pub unsafe extern "C" fn as_run_target_fraction(
    run: *const AsRun,
    ratio: f64,
    out_fraction: *mut f64,
    out_reached: *mut bool,
) -> AsStatus {
    guard(|| {
        let run = &deref(run, "run")?.0;
        if out_fraction.is_null() || out_reached.is_null() {
            return Err(Failure(
                AsStatus::NullPointer,
                "output pointer is null".into(),
            ));
        }
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(invalid(format!("ratio {ratio} is outside (0, 1]")));
        }
        let found = if run.full_data_qwk > 0.0 {
            target_fraction(&growth_curve(run), run.full_data_qwk, ratio)?
        } else {
            None
        };
        if let Some(f) = found {
            out_fraction.write(f);
        }
        out_reached.write(found.is_some());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_run_write_report(run: *const AsRun, path: *const c_char) -> AsStatus {
    guard(|| {
        write_report(&deref(run, "run")?.0, path_arg(path)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_run_write_curve(run: *const AsRun, path: *const c_char) -> AsStatus {
    guard(|| {
        write_curve(&growth_curve(&deref(run, "run")?.0), path_arg(path)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn as_run_free(run: *mut AsRun) {
    free(run);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_reported_per_thread() {
        let mut out = 0.0;
        let status = unsafe { as_qwk(std::ptr::null(), std::ptr::null(), 0, 3, &mut out) };
        assert_eq!(status, AsStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(as_last_error_message()) }
            .to_str()
            .unwrap()
            .to_owned();
        assert!(!msg.is_empty());
        std::thread::spawn(|| assert!(as_last_error_message().is_null()))
            .join()
            .unwrap();
    }

    #[test]
    fn panics_are_contained() {
        assert_eq!(guard(|| panic!("boom")), AsStatus::Panic);
        let msg = unsafe { CStr::from_ptr(as_last_error_message()) }
            .to_str()
            .unwrap();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn enum_conversions_round_trip() {
        for s in StrategyKind::ALL {
            assert_eq!(StrategyKind::from(AsStrategy::from(s)), s);
        }
        for m in [
            UncertaintyMeasure::LeastConfidence,
            UncertaintyMeasure::Margin,
            UncertaintyMeasure::Entropy,
        ] {
            assert_eq!(UncertaintyMeasure::from(AsMeasure::from(m)), m);
        }
    }
}
