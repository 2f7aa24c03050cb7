use std::collections::{BTreeMap, BTreeSet};

use super::config::EnsembleKind;
use super::labels::{prob_columns, read_scheme_meta, write_scheme_meta, LabelRecord};
use super::table::{fmt_f64, fmt_list, parse_table, TableWriter, MISSING};
use super::{FeatureRecord, HarnessError, HarnessResult};
use crate::ensemble::{average_distributions, EnsembleInput};
use crate::metrics::Dimension;
use crate::scoring::{expected_score, PredictedDistribution};
use crate::softlabel::LevelScheme;
use crate::trainer::{forward, ToyScorer};

const KIND: &str = "predictions";
const SCALAR_TOLERANCE: f64 = 1e-6;

/// Prediction for one (item, dimension) pair. `score` is always set; when a
/// distribution is present the score is its expected value.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub item_id: String,
    pub dimension: Dimension,
    pub score: f64,
    pub distribution: Option<PredictedDistribution>,
}

impl PredictionRecord {
    pub fn from_distribution(
        item_id: String,
        dimension: Dimension,
        distribution: PredictedDistribution,
        scheme: &LevelScheme,
    ) -> HarnessResult<Self> {
        let score = expected_score(&distribution, scheme)?;
        Ok(Self {
            item_id,
            dimension,
            score,
            distribution: Some(distribution),
        })
    }

    fn key(&self) -> (String, Dimension) {
        (self.item_id.clone(), self.dimension)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub scheme: LevelScheme,
    /// Free-form provenance echoed into the `#source` header.
    pub source: String,
    pub records: Vec<PredictionRecord>,
}

impl PredictionFile {
    fn sort(&mut self) {
        self.records
            .sort_by(|a, b| (&a.item_id, a.dimension).cmp(&(&b.item_id, b.dimension)));
    }

    pub fn scores(&self) -> BTreeMap<(String, Dimension), f64> {
        self.records.iter().map(|r| (r.key(), r.score)).collect()
    }
}

pub fn write_predictions(file: &PredictionFile) -> String {
    let mut w = TableWriter::new(KIND);
    write_scheme_meta(&mut w, &file.scheme);
    w.meta("source", &file.source);
    let mut header = vec!["item_id".to_string(), "dimension".into(), "score".into()];
    header.extend(prob_columns(file.scheme.len()));
    w.row(header);
    for r in &file.records {
        let mut cells = vec![r.item_id.clone(), r.dimension.to_string(), fmt_f64(r.score)];
        match &r.distribution {
            Some(d) => cells.extend(d.probs().iter().map(|p| fmt_f64(*p))),
            None => cells.extend(std::iter::repeat_n(MISSING.to_string(), file.scheme.len())),
        }
        w.row(cells);
    }
    w.finish()
}

pub fn parse_predictions(text: &str, source: &str) -> HarnessResult<PredictionFile> {
    let table = parse_table(text, KIND, source, false)?;
    if table.is_empty() {
        return Err(table.error(1, "empty prediction file"));
    }
    let scheme = read_scheme_meta(&table)?;
    let id = table.require_column("item_id")?;
    let dim = table.require_column("dimension")?;
    let score_col = table.require_column("score")?;
    let probs: Vec<usize> = prob_columns(scheme.len())
        .map(|c| table.require_column(&c))
        .collect::<HarnessResult<_>>()?;

    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let item_id = row.cells[id].to_string();
        let dimension: Dimension = row.cells[dim]
            .parse()
            .map_err(|e: crate::Error| table.error(row.line, e.to_string()))?;
        if !seen.insert((item_id.clone(), dimension)) {
            return Err(HarnessError::Validation {
                item_id,
                message: format!("duplicate {dimension} prediction (line {})", row.line),
            });
        }
        let cells: Vec<Option<f64>> = probs
            .iter()
            .map(|&i| table.opt_f64_at(row, i))
            .collect::<HarnessResult<_>>()?;
        let distribution = match (
            cells.iter().all(Option::is_some),
            cells.iter().all(Option::is_none),
        ) {
            (true, _) => Some(
                PredictedDistribution::new(cells.into_iter().flatten().collect())
                    .map_err(|e| table.error(row.line, e.to_string()))?,
            ),
            (_, true) => None,
            _ => return Err(table.error(row.line, "partially missing distribution")),
        };
        let scalar = table.opt_f64_at(row, score_col)?;
        let score = match (&distribution, scalar) {
            (Some(d), Some(s)) => {
                let derived = expected_score(d, &scheme)?;
                if (derived - s).abs() > SCALAR_TOLERANCE {
                    return Err(table.error(
                        row.line,
                        format!("score {s} disagrees with distribution mean {derived}"),
                    ));
                }
                s
            }
            (Some(d), None) => expected_score(d, &scheme)?,
            (None, Some(s)) => s,
            (None, None) => return Err(table.error(row.line, "neither score nor distribution")),
        };
        records.push(PredictionRecord {
            item_id,
            dimension,
            score,
            distribution,
        });
    }
    let mut file = PredictionFile {
        scheme,
        source: table.meta("source").unwrap_or("unknown").to_string(),
        records,
    };
    file.sort();
    Ok(file)
}

/// Expected scores of soft labels, i.e. the label file read back as
/// predictions.
pub fn score_labels(scheme: &LevelScheme, labels: &[LabelRecord]) -> HarnessResult<PredictionFile> {
    let records = labels
        .iter()
        .map(|l| {
            PredictionRecord::from_distribution(
                l.item_id.clone(),
                l.dimension,
                l.label.clone().into(),
                scheme,
            )
        })
        .collect::<HarnessResult<_>>()?;
    let mut file = PredictionFile {
        scheme: scheme.clone(),
        source: "labels".into(),
        records,
    };
    file.sort();
    Ok(file)
}

pub fn score_model(
    model: &ToyScorer,
    scheme: &LevelScheme,
    features: &[FeatureRecord],
) -> HarnessResult<PredictionFile> {
    if model.levels() != scheme.len() {
        return Err(HarnessError::Unsupported(format!(
            "model has {} levels, scheme has {}",
            model.levels(),
            scheme.len()
        )));
    }
    let records = features
        .iter()
        .map(|f| {
            let dist = forward(model, &f.features).map_err(|e| HarnessError::Validation {
                item_id: f.item_id.clone(),
                message: e.to_string(),
            })?;
            PredictionRecord::from_distribution(f.item_id.clone(), f.dimension, dist, scheme)
        })
        .collect::<HarnessResult<_>>()?;
    let mut file = PredictionFile {
        scheme: scheme.clone(),
        source: "toy-scorer".into(),
        records,
    };
    file.sort();
    Ok(file)
}

fn key_name((item, dim): &(String, Dimension)) -> String {
    format!("{item}/{dim}")
}

/// Element-wise average of the distributions in every file. All files must
/// share the level scheme and cover the same (item, dimension) pairs.
pub fn run_ensemble(
    files: &[PredictionFile],
    weights: Option<Vec<f64>>,
    kind: EnsembleKind,
) -> HarnessResult<PredictionFile> {
    let first = files.first().ok_or(crate::Error::EmptyEnsemble)?;
    let mut maps = Vec::with_capacity(files.len());
    for file in files {
        if file.scheme != first.scheme {
            return Err(HarnessError::Unsupported(
                "prediction files use different level schemes".into(),
            ));
        }
        let mut map = BTreeMap::new();
        for r in &file.records {
            let dist = r.distribution.clone().ok_or_else(|| {
                HarnessError::Unsupported(format!(
                    "{}: scalar-only prediction cannot be ensembled",
                    key_name(&r.key())
                ))
            })?;
            map.insert(r.key(), dist);
        }
        maps.push(map);
    }
    let reference: BTreeSet<_> = maps[0].keys().cloned().collect();
    for map in &maps[1..] {
        let keys: BTreeSet<_> = map.keys().cloned().collect();
        if keys != reference {
            return Err(HarnessError::Alignment {
                missing: reference.difference(&keys).map(key_name).collect(),
                extra: keys.difference(&reference).map(key_name).collect(),
            });
        }
    }

    let mut records = Vec::with_capacity(reference.len());
    for key in &reference {
        let members = maps.iter().map(|m| m[key].clone()).collect();
        let input = EnsembleInput::new(members, weights.clone())?;
        records.push(PredictionRecord::from_distribution(
            key.0.clone(),
            key.1,
            average_distributions(&input)?,
            &first.scheme,
        )?);
    }
    let mut source = format!("ensemble kind={} members={}", kind.as_str(), files.len());
    if let Some(w) = &weights {
        source.push_str(&format!(" weights={}", fmt_list(w)));
    }
    Ok(PredictionFile {
        scheme: first.scheme.clone(),
        source,
        records,
    })
}
