use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::table::{fmt_f64, parse_table, TableWriter};
use super::{FeatureRecord, HarnessError, HarnessResult, ScoreRecord};
use crate::metrics::Dimension;
use crate::simulator::{empirical_stats, simulate_panel, AnnotatorPanel};
use crate::softlabel::{NORMALIZED_MAX, NORMALIZED_MIN};

const KIND: &str = "panels";

/// Range the per-item true means are drawn from.
pub const MU_RANGE: (f64, f64) = (1.5, 4.5);
/// Range the per-item true standard deviations are drawn from.
pub const SIGMA_RANGE: (f64, f64) = (0.3, 0.8);

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationParams {
    pub items: usize,
    pub raters: usize,
    pub seed: u64,
    /// Standard deviation of Gaussian noise added to the single feature.
    pub feature_noise: f64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            items: 200,
            raters: 20,
            seed: 0,
            feature_noise: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPanel {
    pub item_id: String,
    pub dimension: Dimension,
    pub panel: AnnotatorPanel,
}

/// Annotations hold the sample means and deviations on a `[1, 5]` range, so
/// raw and normalized values coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub annotations: Vec<ScoreRecord>,
    pub panels: Vec<SimulatedPanel>,
    pub features: Vec<FeatureRecord>,
}

pub fn simulate_dataset(params: &SimulationParams) -> HarnessResult<SimulatedDataset> {
    if params.items < 2 {
        return Err(crate::Error::InsufficientData {
            needed: 2,
            got: params.items,
        }
        .into());
    }
    if !(params.feature_noise.is_finite() && params.feature_noise >= 0.0) {
        return Err(HarnessError::Config(format!(
            "feature noise must be >= 0, got {}",
            params.feature_noise
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let width = (params.items - 1).to_string().len();

    let mut data = SimulatedDataset {
        annotations: Vec::with_capacity(params.items),
        panels: Vec::new(),
        features: Vec::new(),
    };
    for i in 0..params.items {
        let item_id = format!("sim{i:0width$}");
        let mut scores = BTreeMap::new();
        let mut stds = BTreeMap::new();
        for dim in Dimension::ALL {
            let mu = rng.random_range(MU_RANGE.0..=MU_RANGE.1);
            let sigma = rng.random_range(SIGMA_RANGE.0..=SIGMA_RANGE.1);
            let panel = simulate_panel(mu, sigma, params.raters, rng.random())?;
            let stats = empirical_stats(&panel)?;
            scores.insert(dim, stats.mu);
            stds.insert(dim, stats.sigma);

            let z: f64 = StandardNormal.sample(&mut rng);
            let x = (stats.mu - NORMALIZED_MIN) / (NORMALIZED_MAX - NORMALIZED_MIN)
                + params.feature_noise * z;
            data.features.push(FeatureRecord {
                item_id: item_id.clone(),
                dimension: dim,
                features: vec![x],
            });
            data.panels.push(SimulatedPanel {
                item_id: item_id.clone(),
                dimension: dim,
                panel,
            });
        }
        data.annotations.push(ScoreRecord {
            item_id,
            scores,
            stds,
            range_min: NORMALIZED_MIN,
            range_max: NORMALIZED_MAX,
        });
    }
    Ok(data)
}

/// One line per panel: identity, generating parameters, then every rating.
pub fn write_panels(panels: &[SimulatedPanel]) -> String {
    let mut w = TableWriter::new(KIND);
    w.row([
        "item_id",
        "dimension",
        "true_mu",
        "true_sigma",
        "seed",
        "ratings",
    ]);
    for p in panels {
        let mut cells = vec![
            p.item_id.clone(),
            p.dimension.to_string(),
            fmt_f64(p.panel.true_mu),
            fmt_f64(p.panel.true_sigma),
            p.panel.seed.to_string(),
        ];
        cells.extend(p.panel.ratings.iter().map(|r| fmt_f64(*r)));
        w.row(cells);
    }
    w.finish()
}

pub fn parse_panels(text: &str, source: &str) -> HarnessResult<Vec<SimulatedPanel>> {
    let table = parse_table(text, KIND, source, true)?;
    if table.is_empty() {
        return Ok(Vec::new());
    }
    let [id, dim, mu, sigma, seed, first] = [
        "item_id",
        "dimension",
        "true_mu",
        "true_sigma",
        "seed",
        "ratings",
    ]
    .map(|c| table.require_column(c));
    let (id, dim, mu, sigma, seed, first) = (id?, dim?, mu?, sigma?, seed?, first?);
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let ratings = (first..row.cells.len())
            .map(|i| {
                row.cells[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        table.error(
                            row.line,
                            format!("rating `{}` is not a finite number", row.cells[i]),
                        )
                    })
            })
            .collect::<HarnessResult<_>>()?;
        out.push(SimulatedPanel {
            item_id: row.cells[id].to_string(),
            dimension: row.cells[dim]
                .parse()
                .map_err(|e: crate::Error| table.error(row.line, e.to_string()))?,
            panel: AnnotatorPanel {
                ratings,
                true_mu: table.f64_at(row, mu)?,
                true_sigma: table.f64_at(row, sigma)?,
                seed: row.cells[seed]
                    .parse()
                    .map_err(|_| table.error(row.line, "seed is not an unsigned integer"))?,
            },
        });
    }
    Ok(out)
}
