//! Scalar score recovery from level distributions.

use crate::error::{Error, Result};
use crate::softlabel::{check_simplex, LevelScheme, SoftLabel};

/// Pre-softmax scores for the level tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelLogits {
    values: Vec<f64>,
}

impl LevelLogits {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("no logits".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite logit {v}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Model-predicted probabilities over the rating levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedDistribution {
    probs: Vec<f64>,
}

impl PredictedDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs)?;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

impl From<SoftLabel> for PredictedDistribution {
    fn from(label: SoftLabel) -> Self {
        Self {
            probs: label.into_probs(),
        }
    }
}

/// Softmax restricted to the level entries, stabilised by subtracting the
/// maximum logit.
pub fn closed_set_softmax(logits: &LevelLogits) -> PredictedDistribution {
    PredictedDistribution {
        probs: softmax(logits.values()),
    }
}

pub(crate) fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Predicted mean score `Σ p_i c_i`.
pub fn expected_score(dist: &PredictedDistribution, scheme: &LevelScheme) -> Result<f64> {
    if dist.len() != scheme.len() {
        return Err(Error::Shape {
            expected: scheme.len(),
            actual: dist.len(),
        });
    }
    Ok(scheme.weighted_mean(&dist.probs))
}
