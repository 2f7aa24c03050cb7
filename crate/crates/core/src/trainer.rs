//! Linear-softmax scorer trained on soft labels with the KL objective.
//!
//! The scorer maps a feature vector to one logit per rating level and
//! applies the closed-set softmax. Training is plain mini-batch gradient
//! descent on the mean `KL(label ‖ pred)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{softmax, PredictedDistribution};
use crate::softlabel::SoftLabel;

/// Floor applied to predicted probabilities inside the log.
pub const PROB_FLOOR: f64 = 1e-12;

pub const CHECKPOINT_FORMAT: &str = "docqa-toy-scorer";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyScorer {
    feature_dim: usize,
    levels: usize,
    /// Row-major `feature_dim × levels`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Gradient with the same layout as [`ToyScorer`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ScorerGradient {
    fn zeros(feature_dim: usize, levels: usize) -> Self {
        Self {
            weights: vec![0.0; feature_dim * levels],
            bias: vec![0.0; levels],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.bias)
            .fold(0.0_f64, |m, g| m.max(g.abs()))
    }
}

impl ToyScorer {
    pub fn new(
        feature_dim: usize,
        levels: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if feature_dim == 0 || levels == 0 {
            return Err(Error::InvalidInput(
                "feature_dim and levels must be >= 1".into(),
            ));
        }
        if weights.len() != feature_dim * levels {
            return Err(Error::Shape {
                expected: feature_dim * levels,
                actual: weights.len(),
            });
        }
        if bias.len() != levels {
            return Err(Error::Shape {
                expected: levels,
                actual: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        Ok(Self {
            feature_dim,
            levels,
            weights,
            bias,
        })
    }

    pub fn zeros(feature_dim: usize, levels: usize) -> Result<Self> {
        Self::new(
            feature_dim,
            levels,
            vec![0.0; feature_dim * levels],
            vec![0.0; levels],
        )
    }

    /// Small Gaussian weights (std 0.01) and zero bias, seeded.
    pub fn init(feature_dim: usize, levels: usize, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(feature_dim, levels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.01).expect("valid std");
        model
            .weights
            .iter_mut()
            .for_each(|w| *w = normal.sample(&mut rng));
        Ok(model)
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, feature: usize, level: usize) -> f64 {
        self.weights[feature * self.levels + level]
    }

    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.feature_dim {
            return Err(Error::Shape {
                expected: self.feature_dim,
                actual: features.len(),
            });
        }
        let mut logits = self.bias.clone();
        for (row, x) in self.weights.chunks_exact(self.levels).zip(features) {
            for (l, w) in logits.iter_mut().zip(row) {
                *l += w * x;
            }
        }
        Ok(logits)
    }

    fn step(&mut self, grad: &ScorerGradient, lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= lr * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= lr * g;
        }
    }

    pub fn to_checkpoint(&self, config: Option<&TrainConfig>) -> String {
        let doc = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            feature_dim: self.feature_dim,
            levels: self.levels,
            weights: self.weights.clone(),
            bias: self.bias.clone(),
            config: config.cloned(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("checkpoint serializes");
        text.push('\n');
        text
    }

    pub fn from_checkpoint(text: &str) -> Result<(Self, Option<TrainConfig>)> {
        let doc: Checkpoint = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("checkpoint: {e}")))?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(Error::InvalidInput(format!(
                "checkpoint format `{}` is not `{CHECKPOINT_FORMAT}`",
                doc.format
            )));
        }
        if doc.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported checkpoint version {}",
                doc.version
            )));
        }
        let model = Self::new(doc.feature_dim, doc.levels, doc.weights, doc.bias)?;
        Ok((model, doc.config))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    feature_dim: usize,
    levels: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            epochs: 200,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: SoftLabel,
}

/// `KL(label ‖ pred) = Σ p_i log(p_i / pred_i)`; zero-probability label
/// entries contribute nothing and `pred` is floored at [`PROB_FLOOR`].
pub fn kl_loss(label: &SoftLabel, pred: &PredictedDistribution) -> Result<f64> {
    if label.probs().len() != pred.len() {
        return Err(Error::Shape {
            expected: label.probs().len(),
            actual: pred.len(),
        });
    }
    Ok(kl_terms(label.probs(), pred.probs()))
}

fn kl_terms(label: &[f64], pred: &[f64]) -> f64 {
    label
        .iter()
        .zip(pred)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p.ln() - q.max(PROB_FLOOR).ln()))
        .sum()
}

pub fn forward(model: &ToyScorer, features: &[f64]) -> Result<PredictedDistribution> {
    let logits = model.logits(features)?;
    PredictedDistribution::new(softmax(&logits))
}

/// Gradient of `kl_loss(label, forward(model, x))`: `(pred - label) ⊗ x`
/// for the weights and `pred - label` for the bias.
pub fn kl_gradient(model: &ToyScorer, example: &LabeledExample) -> Result<ScorerGradient> {
    let mut grad = ScorerGradient::zeros(model.feature_dim, model.levels);
    accumulate_gradient(model, example, 1.0, &mut grad)?;
    Ok(grad)
}

fn accumulate_gradient(
    model: &ToyScorer,
    example: &LabeledExample,
    scale: f64,
    grad: &mut ScorerGradient,
) -> Result<f64> {
    if example.label.probs().len() != model.levels {
        return Err(Error::Shape {
            expected: model.levels,
            actual: example.label.probs().len(),
        });
    }
    let pred = softmax(&model.logits(&example.features)?);
    let delta: Vec<f64> = pred
        .iter()
        .zip(example.label.probs())
        .map(|(q, p)| q - p)
        .collect();
    for (row, x) in grad
        .weights
        .chunks_exact_mut(model.levels)
        .zip(&example.features)
    {
        for (g, d) in row.iter_mut().zip(&delta) {
            *g += scale * d * x;
        }
    }
    for (g, d) in grad.bias.iter_mut().zip(&delta) {
        *g += scale * d;
    }
    Ok(kl_terms(example.label.probs(), &pred))
}

/// Mean KL loss of `model` over `data`.
pub fn mean_loss(model: &ToyScorer, data: &[LabeledExample]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for ex in data {
        if ex.label.probs().len() != model.levels {
            return Err(Error::Shape {
                expected: model.levels,
                actual: ex.label.probs().len(),
            });
        }
        total += kl_terms(ex.label.probs(), &softmax(&model.logits(&ex.features)?));
    }
    Ok(total / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Epoch after which the returned parameters were taken (0 = initial).
    pub best_epoch: usize,
    pub loss_history: Vec<f64>,
}

fn check_data(data: &[LabeledExample]) -> Result<usize> {
    let first = data.first().ok_or(Error::EmptyDataset)?;
    let dim = first.features.len();
    if dim == 0 {
        return Err(Error::InvalidInput("feature_dim must be >= 1".into()));
    }
    if let Some(ex) = data.iter().find(|ex| ex.features.len() != dim) {
        return Err(Error::Shape {
            expected: dim,
            actual: ex.features.len(),
        });
    }
    Ok(dim)
}

/// Train a freshly initialised scorer (seeded by `config.seed`).
pub fn train(data: &[LabeledExample], config: &TrainConfig) -> Result<ToyScorer> {
    train_with_report(data, config).map(|(model, _)| model)
}

pub fn train_with_report(
    data: &[LabeledExample],
    config: &TrainConfig,
) -> Result<(ToyScorer, TrainReport)> {
    let dim = check_data(data)?;
    let levels = data[0].label.probs().len();
    let init = ToyScorer::init(dim, levels, config.seed)?;
    train_from(init, data, config)
}

/// Mini-batch gradient descent from `init`. Examples are reshuffled every
/// epoch with a generator seeded from `config.seed`. The parameters with
/// the lowest full-data loss seen at an epoch boundary are returned, so the
/// result never scores worse than `init`.
pub fn train_from(
    init: ToyScorer,
    data: &[LabeledExample],
    config: &TrainConfig,
) -> Result<(ToyScorer, TrainReport)> {
    config.validate()?;
    let dim = check_data(data)?;
    if dim != init.feature_dim {
        return Err(Error::Shape {
            expected: init.feature_dim,
            actual: dim,
        });
    }

    let initial_loss = mean_loss(&init, data)?;
    if !initial_loss.is_finite() {
        return Err(Error::Diverged {
            epoch: 0,
            loss: initial_loss,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut model = init.clone();
    let mut best = (init, initial_loss, 0);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grad = ScorerGradient::zeros(model.feature_dim, model.levels);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                accumulate_gradient(&model, &data[i], scale, &mut grad)?;
            }
            model.step(&grad, config.learning_rate);
        }
        if model
            .weights
            .iter()
            .chain(&model.bias)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        let loss = mean_loss(&model, data)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        history.push(loss);
        if loss < best.1 {
            best = (model.clone(), loss, epoch);
        }
    }

    let (model, final_loss, best_epoch) = best;
    log::debug!(
        "trained {} epochs: loss {initial_loss} -> {final_loss}",
        config.epochs
    );
    Ok((
        model,
        TrainReport {
            initial_loss,
            final_loss,
            best_epoch,
            loss_history: history,
        },
    ))
}

/// One full-batch gradient step; returns the loss before the step.
pub fn full_batch_step(model: &mut ToyScorer, data: &[LabeledExample], lr: f64) -> Result<f64> {
    check_data(data)?;
    let mut grad = ScorerGradient::zeros(model.feature_dim, model.levels);
    let scale = 1.0 / data.len() as f64;
    let mut loss = 0.0;
    for ex in data {
        loss += scale * accumulate_gradient(model, ex, scale, &mut grad)?;
    }
    model.step(&grad, lr);
    Ok(loss)
}
