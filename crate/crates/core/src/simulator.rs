//! Synthetic annotator panels with known score distributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::softlabel::{ScoreDistribution, NORMALIZED_MAX, NORMALIZED_MIN};

/// Individual ratings (normalized units) drawn from a declared Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatorPanel {
    pub ratings: Vec<f64>,
    pub true_mu: f64,
    pub true_sigma: f64,
    pub seed: u64,
}

/// Draw `k` ratings from `N(mu, sigma²)`, clamped to `[1, 5]`.
pub fn simulate_panel(mu: f64, sigma: f64, k: usize, seed: u64) -> Result<AnnotatorPanel> {
    if !(mu.is_finite() && (NORMALIZED_MIN..=NORMALIZED_MAX).contains(&mu)) {
        return Err(Error::OutOfRange {
            value: mu,
            min: NORMALIZED_MIN,
            max: NORMALIZED_MAX,
        });
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    if k < 2 {
        return Err(Error::InsufficientData { needed: 2, got: k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratings = (0..k)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (mu + sigma * z).clamp(NORMALIZED_MIN, NORMALIZED_MAX)
        })
        .collect();
    Ok(AnnotatorPanel {
        ratings,
        true_mu: mu,
        true_sigma: sigma,
        seed,
    })
}

/// Sample mean and sample standard deviation (`K - 1` denominator).
pub fn empirical_stats(panel: &AnnotatorPanel) -> Result<ScoreDistribution> {
    let k = panel.ratings.len();
    if k < 2 {
        return Err(Error::InsufficientData { needed: 2, got: k });
    }
    let mean = panel.ratings.iter().sum::<f64>() / k as f64;
    let ss: f64 = panel.ratings.iter().map(|r| (r - mean) * (r - mean)).sum();
    ScoreDistribution::new(mean, (ss / (k - 1) as f64).sqrt())
}
