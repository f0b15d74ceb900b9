//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! The objective is the mean softmax cross-entropy plus `l2_lambda / 2`
//! times the squared norm of the non-bias weights. Weights start at zero,
//! so training is a deterministic function of its inputs.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A normalized distribution over score classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbabilities(Vec<f64>);

impl ClassProbabilities {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::argument("empty probability vector"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::argument("probabilities must lie in [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::argument(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Max-logit-shifted softmax.
    pub fn from_logits(logits: &[f64]) -> Self {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        Self(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }

    /// Most probable class; ties go to the lowest class.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = k;
            }
        }
        best
    }

    pub fn confidence(&self) -> f64 {
        self.0[self.argmax()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMeasure {
    /// `1 - max(p)`.
    #[default]
    LeastConfidence,
    /// `1 - (p_1st - p_2nd)`.
    Margin,
    /// Shannon entropy divided by `ln(levels)`.
    Entropy,
}

impl fmt::Display for UncertaintyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LeastConfidence => "least_confidence",
            Self::Margin => "margin",
            Self::Entropy => "entropy",
        })
    }
}

impl FromStr for UncertaintyMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least_confidence" | "least-confidence" => Ok(Self::LeastConfidence),
            "margin" => Ok(Self::Margin),
            "entropy" => Ok(Self::Entropy),
            other => Err(Error::argument(format!(
                "unknown uncertainty measure '{other}' (expected least_confidence, margin or entropy)"
            ))),
        }
    }
}

/// Uncertainty of a prediction, in `[0, 1]`.
pub fn uncertainty(probs: &ClassProbabilities, measure: UncertaintyMeasure) -> f64 {
    let p = probs.as_slice();
    let value = match measure {
        UncertaintyMeasure::LeastConfidence => 1.0 - probs.confidence(),
        UncertaintyMeasure::Margin => {
            let (mut first, mut second) = (0.0f64, 0.0f64);
            for &v in p {
                if v > first {
                    second = first;
                    first = v;
                } else if v > second {
                    second = v;
                }
            }
            1.0 - (first - second)
        }
        UncertaintyMeasure::Entropy => {
            if p.len() < 2 {
                return 0.0;
            }
            let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
            h / (p.len() as f64).ln()
        }
    };
    value.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
    /// Recorded with each run; zero initialization makes training seed-free.
    pub rng_seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 300,
            l2_lambda: 1e-4,
            rng_seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config(format!(
                "learning_rate must be finite and > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.l2_lambda.is_finite() && self.l2_lambda >= 0.0) {
            return Err(Error::config(format!(
                "l2_lambda must be finite and >= 0, got {}",
                self.l2_lambda
            )));
        }
        Ok(())
    }
}

/// Labeled examples packed as a design matrix with a trailing bias column.
///
/// Feature columns are standardized with the training set's own mean and
/// standard deviation (constant columns are only centred); trained weights
/// are mapped back to raw feature units.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    design: Array2<f64>,
    labels: Vec<usize>,
    levels: usize,
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl TrainingSet {
    pub fn new<'a, I>(examples: I, levels: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], usize)>,
    {
        if levels < 2 {
            return Err(Error::argument(format!(
                "classifier needs at least 2 levels, got {levels}"
            )));
        }
        let mut rows: Vec<f64> = Vec::new();
        let mut labels = Vec::new();
        let mut dim = None;
        for (i, (features, label)) in examples.into_iter().enumerate() {
            let d = *dim.get_or_insert(features.len());
            if features.len() != d {
                return Err(Error::argument(format!(
                    "example {i} has {} features, expected {d}",
                    features.len()
                )));
            }
            if label >= levels {
                return Err(Error::argument(format!(
                    "example {i} has label {label}, outside 0..{levels}"
                )));
            }
            rows.extend_from_slice(features);
            rows.push(1.0);
            labels.push(label);
        }
        let dim = match dim {
            Some(0) => return Err(Error::argument("examples have no features")),
            Some(d) => d,
            None => return Err(Error::argument("training needs at least one example")),
        };
        let mut design = Array2::from_shape_vec((labels.len(), dim + 1), rows)
            .expect("row lengths validated above");
        let raw = design.slice(ndarray::s![.., ..dim]);
        let mean = raw.mean_axis(Axis(0)).expect("at least one row");
        let scale = raw
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 0.0 && s.is_finite() { s } else { 1.0 });
        let mut cols = design.slice_mut(ndarray::s![.., ..dim]);
        cols -= &mean;
        cols /= &scale;
        Ok(Self {
            design,
            labels,
            levels,
            mean,
            scale,
        })
    }

    /// Converts weights over standardized features to raw feature units.
    fn to_raw_weights(&self, standardized: &Array2<f64>) -> Array2<f64> {
        let d = self.dim();
        let mut raw = standardized.clone();
        for mut row in raw.axis_iter_mut(Axis(0)) {
            let mut shift = 0.0;
            for j in 0..d {
                row[j] /= self.scale[j];
                shift += row[j] * self.mean[j];
            }
            row[d] -= shift;
        }
        raw
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.design.ncols() - 1
    }

    pub fn levels(&self) -> usize {
        self.levels
    }
}

/// Regularized mean cross-entropy and its gradient with respect to `weights`
/// (shape `levels x (dim + 1)`, bias last and unpenalized), over the
/// standardized design matrix of `data`.
pub fn objective(weights: &Array2<f64>, data: &TrainingSet, l2_lambda: f64) -> (f64, Array2<f64>) {
    let n = data.len() as f64;
    let d = data.dim();
    let mut scores = data.design.dot(&weights.t());
    let mut loss = 0.0;
    for (mut row, &y) in scores.axis_iter_mut(Axis(0)).zip(&data.labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let shifted_target = row[y] - max;
        row.mapv_inplace(|z| (z - max).exp());
        let total = row.sum();
        loss += total.ln() - shifted_target;
        row /= total;
        row[y] -= 1.0;
    }
    let mut grad = scores.t().dot(&data.design) / n;
    let penalty = weights.slice(ndarray::s![.., ..d]);
    loss = loss / n + 0.5 * l2_lambda * penalty.iter().map(|w| w * w).sum::<f64>();
    grad.slice_mut(ndarray::s![.., ..d])
        .scaled_add(l2_lambda, &penalty);
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    weights: Array2<f64>,
    levels: usize,
    dim: usize,
}

impl TrainedModel {
    pub fn from_weights(weights: Array2<f64>) -> Result<Self> {
        let (levels, cols) = weights.dim();
        if levels < 2 || cols < 2 {
            return Err(Error::argument(format!(
                "weight matrix of shape {levels}x{cols} is too small"
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::numeric("weights contain non-finite values"));
        }
        Ok(Self {
            weights,
            levels,
            dim: cols - 1,
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn logits(&self, features: &[f64]) -> Result<Array1<f64>> {
        if features.len() != self.dim {
            return Err(Error::argument(format!(
                "model expects {} features, got {}",
                self.dim,
                features.len()
            )));
        }
        let x = ArrayView1::from(features);
        let w = self.weights.slice(ndarray::s![.., ..self.dim]);
        let bias = self.weights.column(self.dim);
        Ok(w.dot(&x) + bias)
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<ClassProbabilities> {
        let logits = self.logits(features)?;
        Ok(ClassProbabilities::from_logits(
            logits.as_slice().expect("contiguous"),
        ))
    }

    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(self.predict_proba(features)?.argmax())
    }
}

/// Trains a model and returns it together with the per-epoch loss trace
/// (loss evaluated before each update).
pub fn train_with_trace(
    data: &TrainingSet,
    config: &ClassifierConfig,
) -> Result<(TrainedModel, Vec<f64>)> {
    config.validate()?;
    let mut weights = Array2::<f64>::zeros((data.levels, data.dim() + 1));
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, grad) = objective(&weights, data, config.l2_lambda);
        if !loss.is_finite() {
            return Err(Error::numeric(format!(
                "training loss became non-finite at epoch {epoch}"
            )));
        }
        trace.push(loss);
        weights.scaled_add(-config.learning_rate, &grad);
    }
    let model = TrainedModel::from_weights(data.to_raw_weights(&weights))
        .map_err(|_| Error::numeric(format!("weights diverged by epoch {}", config.epochs)))?;
    Ok((model, trace))
}

pub fn train<'a, I>(examples: I, levels: usize, config: &ClassifierConfig) -> Result<TrainedModel>
where
    I: IntoIterator<Item = (&'a [f64], usize)>,
{
    let data = TrainingSet::new(examples, levels)?;
    Ok(train_with_trace(&data, config)?.0)
}
