//! Soft-label construction from mean opinion scores.
//!
//! A continuous score is turned into a probability vector over discrete
//! rating levels, either by discretizing a Gaussian score distribution and
//! post-adjusting it so that the label sums to one and recovers the mean,
//! or by linear interpolation between the two nearest level centers when no
//! variance is available.
//!
//! All scores handled here live in normalized units, i.e. the raw score
//! range mapped affinely onto `[1, 5]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound of the normalized score scale.
pub const NORMALIZED_MIN: f64 = 1.0;
/// Upper bound of the normalized score scale.
pub const NORMALIZED_MAX: f64 = 5.0;
/// Pseudo standard deviation as a fraction of the raw score range.
pub const DEFAULT_PSEUDO_RATIO: f64 = 0.2;

const SUM_TOLERANCE: f64 = 1e-9;
const MEAN_TOLERANCE: f64 = 1e-9;
const GAP_TOLERANCE: f64 = 1e-9;

/// Rating levels with their numeric centers and common bin width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    centers: Vec<f64>,
    width: f64,
    names: Vec<String>,
}

impl LevelScheme {
    pub fn new(centers: Vec<f64>, width: f64, names: Vec<String>) -> Result<Self> {
        if centers.len() < 2 {
            return Err(Error::InvalidScheme(format!(
                "need at least 2 levels, got {}",
                centers.len()
            )));
        }
        if names.len() != centers.len() {
            return Err(Error::InvalidScheme(format!(
                "{} names for {} centers",
                names.len(),
                centers.len()
            )));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidScheme(format!(
                "width must be > 0, got {width}"
            )));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidScheme("non-finite center".into()));
        }
        for pair in centers.windows(2) {
            let gap = pair[1] - pair[0];
            if (gap - width).abs() > GAP_TOLERANCE {
                return Err(Error::InvalidScheme(format!(
                    "gap between centers {} and {} is {gap}, expected width {width}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self {
            centers,
            width,
            names,
        })
    }

    /// Five levels "bad" through "excellent" centered on 1..=5 with unit width.
    pub fn five_level() -> Self {
        Self {
            centers: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            width: 1.0,
            names: ["bad", "poor", "fair", "good", "excellent"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn first_center(&self) -> f64 {
        self.centers[0]
    }

    pub fn last_center(&self) -> f64 {
        self.centers[self.centers.len() - 1]
    }

    /// Mean of the level centers.
    pub fn center_mean(&self) -> f64 {
        self.centers.iter().sum::<f64>() / self.len() as f64
    }

    /// `Σ p_i c_i` for a vector over this scheme's levels.
    pub fn weighted_mean(&self, probs: &[f64]) -> f64 {
        probs.iter().zip(&self.centers).map(|(p, c)| p * c).sum()
    }
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self::five_level()
    }
}

/// Gaussian score distribution in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreDistribution {
    pub mu: f64,
    pub sigma: f64,
}

impl ScoreDistribution {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidInput(format!(
                "mean must be finite, got {mu}"
            )));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }
}

/// Per-level probabilities before post-adjustment. Truncated tails mean
/// these generally sum to less than one.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLabel {
    probs: Vec<f64>,
}

impl RawLabel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidDistribution(
                "raw probabilities must lie in [0, 1]".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "raw probabilities sum to {sum} > 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// How a soft label was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Gaussian,
    Interp,
    /// Post-adjustment produced a negative entry and linear interpolation
    /// was used instead.
    DegenerateFallback,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Gaussian => "gaussian",
            Provenance::Interp => "interp",
            Provenance::DegenerateFallback => "degenerate-fallback",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Provenance::Gaussian),
            "interp" => Ok(Provenance::Interp),
            "degenerate-fallback" => Ok(Provenance::DegenerateFallback),
            other => Err(Error::InvalidInput(format!("unknown provenance `{other}`"))),
        }
    }
}

/// A probability vector over rating levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    probs: Vec<f64>,
    provenance: Provenance,
}

impl SoftLabel {
    pub fn new(probs: Vec<f64>, provenance: Provenance) -> Result<Self> {
        check_simplex(&probs)?;
        Ok(Self { probs, provenance })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Recovered mean `Σ p_i c_i`.
    pub fn mean(&self, scheme: &LevelScheme) -> f64 {
        scheme.weighted_mean(&self.probs)
    }
}

/// Non-negative entries summing to one within `1e-9`.
pub(crate) fn check_simplex(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(
            "empty probability vector".into(),
        ));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {p} is negative or non-finite"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {sum}"
        )));
    }
    Ok(())
}

/// Linear transform `p_i = alpha * raw_i + beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustmentParams {
    pub alpha: f64,
    pub beta: f64,
}

impl AdjustmentParams {
    pub fn apply(&self, raw: &RawLabel) -> Vec<f64> {
        raw.probs
            .iter()
            .map(|p| self.alpha * p + self.beta)
            .collect()
    }
}

fn check_range(range_min: f64, range_max: f64) -> Result<()> {
    if !(range_min.is_finite() && range_max.is_finite() && range_max > range_min) {
        return Err(Error::InvalidRange {
            min: range_min,
            max: range_max,
        });
    }
    Ok(())
}

/// Map a raw score affinely from `[range_min, range_max]` onto `[1, 5]`.
pub fn normalize_score(raw: f64, range_min: f64, range_max: f64) -> Result<f64> {
    check_range(range_min, range_max)?;
    if !(raw.is_finite() && raw >= range_min && raw <= range_max) {
        return Err(Error::OutOfRange {
            value: raw,
            min: range_min,
            max: range_max,
        });
    }
    Ok(NORMALIZED_MIN
        + (NORMALIZED_MAX - NORMALIZED_MIN) * (raw - range_min) / (range_max - range_min))
}

/// Rescale a raw-unit standard deviation into normalized units.
pub fn normalize_sigma(raw_sigma: f64, range_min: f64, range_max: f64) -> Result<f64> {
    check_range(range_min, range_max)?;
    if !(raw_sigma.is_finite() && raw_sigma >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "standard deviation must be finite and >= 0, got {raw_sigma}"
        )));
    }
    Ok(raw_sigma * (NORMALIZED_MAX - NORMALIZED_MIN) / (range_max - range_min))
}

/// Pseudo standard deviation `0.2 * (max - min)`, returned in normalized
/// units (always 0.8 for the default ratio).
pub fn pseudo_sigma(range_min: f64, range_max: f64) -> Result<f64> {
    pseudo_sigma_with_ratio(range_min, range_max, DEFAULT_PSEUDO_RATIO)
}

pub fn pseudo_sigma_with_ratio(range_min: f64, range_max: f64, ratio: f64) -> Result<f64> {
    check_range(range_min, range_max)?;
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pseudo ratio must be > 0, got {ratio}"
        )));
    }
    normalize_sigma(ratio * (range_max - range_min), range_min, range_max)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival function, `1 - Φ(z)`, without cancellation in
/// the upper tail.
fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// `Φ(b) - Φ(a)` for `a <= b`, evaluated on whichever tail keeps both terms
/// small.
fn normal_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        (normal_sf(a) - normal_sf(b)).max(0.0)
    } else {
        (normal_cdf(b) - normal_cdf(a)).max(0.0)
    }
}

/// Probability mass of `N(mu, sigma²)` inside each level bin
/// `[c_i - d/2, c_i + d/2]`.
pub fn discretize_gaussian(dist: ScoreDistribution, scheme: &LevelScheme) -> Result<RawLabel> {
    if !dist.mu.is_finite() {
        return Err(Error::InvalidInput(format!(
            "mean must be finite, got {}",
            dist.mu
        )));
    }
    if dist.sigma == 0.0 {
        return Err(Error::DegenerateDistribution(dist.sigma));
    }
    if !(dist.sigma.is_finite() && dist.sigma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sigma must be finite and > 0, got {}",
            dist.sigma
        )));
    }
    let half = scheme.width() / 2.0;
    let probs = scheme
        .centers()
        .iter()
        .map(|&c| {
            let lo = (c - half - dist.mu) / dist.sigma;
            let hi = (c + half - dist.mu) / dist.sigma;
            normal_interval(lo, hi)
        })
        .collect();
    Ok(RawLabel { probs })
}

/// Solve for `(alpha, beta)` such that `alpha * raw + beta` sums to one and
/// has mean `mu`.
///
/// The system is singular when the raw discrete mean equals the average of
/// the centers (e.g. a Gaussian centered on the middle level). In that case
/// `beta = 0, alpha = 1/S` is returned provided it honours the mean.
pub fn solve_adjustment(raw: &RawLabel, mu: f64, scheme: &LevelScheme) -> Result<AdjustmentParams> {
    if raw.probs.len() != scheme.len() {
        return Err(Error::Shape {
            expected: scheme.len(),
            actual: raw.probs.len(),
        });
    }
    let n = scheme.len() as f64;
    let mass = raw.mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidDistribution(
            "raw label carries no mass".into(),
        ));
    }
    let first_moment = scheme.weighted_mean(&raw.probs);
    let center_mean = scheme.center_mean();

    // Eliminating beta = (1 - alpha*S)/n from the mean constraint leaves
    // alpha * (M - c̄ S) = mu - c̄.
    let denom = first_moment - center_mean * mass;
    let scale = mass * scheme.centers().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if denom.abs() <= 1e-12 * scale {
        let residual = (first_moment / mass - mu).abs();
        if residual > MEAN_TOLERANCE {
            return Err(Error::InconsistentAdjustment { residual });
        }
        return Ok(AdjustmentParams {
            alpha: 1.0 / mass,
            beta: 0.0,
        });
    }
    let alpha = (mu - center_mean) / denom;
    let beta = (1.0 - alpha * mass) / n;
    Ok(AdjustmentParams { alpha, beta })
}

/// Post-adjust a raw label so it sums to one and recovers `mu`.
///
/// If the transform drives any entry negative the label falls back to
/// [`linear_interp_label`] with provenance
/// [`Provenance::DegenerateFallback`]; the returned parameters are still
/// the solved ones.
pub fn post_adjust(
    raw: &RawLabel,
    mu: f64,
    scheme: &LevelScheme,
) -> Result<(SoftLabel, AdjustmentParams)> {
    let half = scheme.width() / 2.0;
    let (lo, hi) = (scheme.first_center() - half, scheme.last_center() + half);
    if !(mu.is_finite() && mu >= lo && mu <= hi) {
        return Err(Error::OutOfRange {
            value: mu,
            min: lo,
            max: hi,
        });
    }
    let params = solve_adjustment(raw, mu, scheme)?;
    let probs = params.apply(raw);
    if probs.iter().any(|&p| p < 0.0) {
        let fallback = linear_interp_label(mu, scheme)?;
        let label = SoftLabel {
            probs: fallback.probs,
            provenance: Provenance::DegenerateFallback,
        };
        return Ok((label, params));
    }
    Ok((SoftLabel::new(probs, Provenance::Gaussian)?, params))
}

/// Two-level label splitting mass between the centers adjacent to `mu`.
///
/// Means outside `[c_0, c_last]` are clamped to the boundary level.
pub fn linear_interp_label(mu: f64, scheme: &LevelScheme) -> Result<SoftLabel> {
    if !mu.is_finite() {
        return Err(Error::InvalidInput(format!(
            "mean must be finite, got {mu}"
        )));
    }
    let centers = scheme.centers();
    let mut probs = vec![0.0; centers.len()];
    if mu <= centers[0] {
        probs[0] = 1.0;
    } else if mu >= centers[centers.len() - 1] {
        probs[centers.len() - 1] = 1.0;
    } else {
        // c_j < mu <= c_{j+1}
        let j = centers
            .windows(2)
            .position(|w| w[0] < mu && mu <= w[1])
            .ok_or_else(|| Error::InvalidInput(format!("no bracketing centers for {mu}")))?;
        let upper = (mu - centers[j]) / scheme.width();
        probs[j] = (centers[j + 1] - mu) / scheme.width();
        probs[j + 1] = upper;
    }
    Ok(SoftLabel {
        probs,
        provenance: Provenance::Interp,
    })
}

/// Source of the standard deviation used when building a label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelMode {
    /// Annotated standard deviation, normalized units.
    TrueVariance(f64),
    /// Fixed fraction of the score range.
    Pseudo {
        ratio: f64,
    },
    Interp,
}

impl LabelMode {
    pub fn pseudo() -> Self {
        LabelMode::Pseudo {
            ratio: DEFAULT_PSEUDO_RATIO,
        }
    }
}

/// Build a soft label for a normalized mean score.
///
/// A true variance of exactly zero is routed to linear interpolation, the
/// limit of the Gaussian path.
pub fn build_label(mu: f64, mode: LabelMode, scheme: &LevelScheme) -> Result<SoftLabel> {
    let sigma = match mode {
        LabelMode::Interp => return linear_interp_label(mu, scheme),
        LabelMode::TrueVariance(0.0) => return linear_interp_label(mu, scheme),
        LabelMode::TrueVariance(sigma) => sigma,
        LabelMode::Pseudo { ratio } => {
            pseudo_sigma_with_ratio(NORMALIZED_MIN, NORMALIZED_MAX, ratio)?
        }
    };
    let dist = ScoreDistribution::new(mu, sigma)?;
    let raw = discretize_gaussian(dist, scheme)?;
    post_adjust(&raw, mu, scheme).map(|(label, _)| label)
}
