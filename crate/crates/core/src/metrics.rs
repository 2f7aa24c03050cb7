//! SRCC / PLCC and the weighted benchmark score.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rating dimensions scored by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Overall,
    Sharpness,
    Color,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Overall, Dimension::Sharpness, Dimension::Color];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Overall => "overall",
            Dimension::Sharpness => "sharpness",
            Dimension::Color => "color",
        }
    }

    /// Weight in the final score.
    pub fn weight(self) -> f64 {
        match self {
            Dimension::Overall => 0.5,
            Dimension::Sharpness | Dimension::Color => 0.25,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overall" => Ok(Dimension::Overall),
            "sharpness" => Ok(Dimension::Sharpness),
            "color" => Ok(Dimension::Color),
            other => Err(Error::InvalidInput(format!("unknown dimension `{other}`"))),
        }
    }
}

/// Predictions paired with ground-truth scores.
#[derive(Debug, Clone, Copy)]
pub struct PairedSeries<'a> {
    predictions: &'a [f64],
    ground_truth: &'a [f64],
}

impl<'a> PairedSeries<'a> {
    pub fn new(predictions: &'a [f64], ground_truth: &'a [f64]) -> Result<Self> {
        if predictions.len() != ground_truth.len() {
            return Err(Error::Shape {
                expected: ground_truth.len(),
                actual: predictions.len(),
            });
        }
        if predictions.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: predictions.len(),
            });
        }
        if predictions
            .iter()
            .chain(ground_truth)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite score in series".into()));
        }
        Ok(Self {
            predictions,
            ground_truth,
        })
    }

    pub fn predictions(&self) -> &'a [f64] {
        self.predictions
    }

    pub fn ground_truth(&self) -> &'a [f64] {
        self.ground_truth
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("predictions"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("ground truth"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson linear correlation coefficient.
pub fn plcc(series: &PairedSeries<'_>) -> Result<f64> {
    pearson(series.predictions, series.ground_truth)
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank-order correlation: Pearson over fractional ranks.
pub fn srcc(series: &PairedSeries<'_>) -> Result<f64> {
    pearson(
        &fractional_ranks(series.predictions),
        &fractional_ranks(series.ground_truth),
    )
}

pub fn dimension_score(srcc_val: f64, plcc_val: f64) -> f64 {
    0.5 * (srcc_val + plcc_val)
}

pub fn final_score(s_overall: f64, s_sharpness: f64, s_color: f64) -> f64 {
    Dimension::Overall.weight() * s_overall
        + Dimension::Sharpness.weight() * s_sharpness
        + Dimension::Color.weight() * s_color
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub srcc: f64,
    pub plcc: f64,
    pub score: f64,
    pub items: usize,
}

impl DimensionReport {
    pub fn compute(series: &PairedSeries<'_>) -> Result<Self> {
        let srcc = srcc(series)?;
        let plcc = plcc(series)?;
        Ok(Self {
            srcc,
            plcc,
            score: dimension_score(srcc, plcc),
            items: series.len(),
        })
    }
}

/// Per-dimension correlations and the weighted final score. The final
/// score is only defined when all three dimensions were evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dimensions: BTreeMap<Dimension, DimensionReport>,
    #[serde(rename = "final")]
    pub final_score: Option<f64>,
}

impl EvalReport {
    pub fn from_dimensions(dimensions: BTreeMap<Dimension, DimensionReport>) -> Self {
        let score = |d| dimensions.get(&d).map(|r: &DimensionReport| r.score);
        let final_score = match (
            score(Dimension::Overall),
            score(Dimension::Sharpness),
            score(Dimension::Color),
        ) {
            (Some(o), Some(s), Some(c)) => Some(final_score(o, s, c)),
            _ => None,
        };
        Self {
            dimensions,
            final_score,
        }
    }

    pub fn get(&self, dim: Dimension) -> Option<&DimensionReport> {
        self.dimensions.get(&dim)
    }

    /// Fixed-width text table.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>7} {:>9} {:>9} {:>9}\n",
            "dimension", "items", "srcc", "plcc", "score"
        );
        for (dim, r) in &self.dimensions {
            out.push_str(&format!(
                "{:<10} {:>7} {:>9.4} {:>9.4} {:>9.4}\n",
                dim.as_str(),
                r.items,
                r.srcc,
                r.plcc,
                r.score
            ));
        }
        match self.final_score {
            Some(f) => out.push_str(&format!("{:<10} {:>47.4}\n", "final", f)),
            None => out.push_str(&format!("{:<10} {:>47}\n", "final", "n/a")),
        }
        out
    }
}
