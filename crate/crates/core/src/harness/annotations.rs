use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::table::{fmt_f64, parse_table, TableWriter, MISSING};
use super::{read_file, HarnessError, HarnessResult};
use crate::metrics::Dimension;
use crate::softlabel::{normalize_score, normalize_sigma};

const KIND: &str = "annotations";

/// One item's raw per-dimension mean opinion scores and the range they
/// were collected on. Standard deviations are optional and in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub item_id: String,
    pub scores: BTreeMap<Dimension, f64>,
    pub stds: BTreeMap<Dimension, f64>,
    pub range_min: f64,
    pub range_max: f64,
}

impl ScoreRecord {
    pub fn validate(&self) -> HarnessResult<()> {
        let fail = |message: String| HarnessError::Validation {
            item_id: self.item_id.clone(),
            message,
        };
        if !self.scores.contains_key(&Dimension::Overall) {
            return Err(fail("missing `overall` score".into()));
        }
        if !(self.range_max > self.range_min) {
            return Err(fail(format!(
                "invalid range [{}, {}]",
                self.range_min, self.range_max
            )));
        }
        for (dim, v) in &self.scores {
            if !(*v >= self.range_min && *v <= self.range_max) {
                return Err(fail(format!(
                    "{dim} score {v} outside range [{}, {}]",
                    self.range_min, self.range_max
                )));
            }
        }
        for (dim, s) in &self.stds {
            if !self.scores.contains_key(dim) {
                return Err(fail(format!("{dim} std given without a score")));
            }
            if *s < 0.0 {
                return Err(fail(format!("{dim} std {s} is negative")));
            }
        }
        Ok(())
    }

    /// Score mapped onto `[1, 5]`.
    pub fn normalized(&self, dim: Dimension) -> HarnessResult<Option<f64>> {
        self.scores
            .get(&dim)
            .map(|v| normalize_score(*v, self.range_min, self.range_max))
            .transpose()
            .map_err(Into::into)
    }

    /// Standard deviation rescaled to normalized units.
    pub fn normalized_std(&self, dim: Dimension) -> HarnessResult<Option<f64>> {
        self.stds
            .get(&dim)
            .map(|s| normalize_sigma(*s, self.range_min, self.range_max))
            .transpose()
            .map_err(Into::into)
    }
}

pub fn load_annotations(path: &Path) -> HarnessResult<Vec<ScoreRecord>> {
    parse_annotations(&read_file(path)?, &path.display().to_string())
}

/// Parse an annotation file. Records come back sorted by `item_id`.
pub fn parse_annotations(text: &str, source: &str) -> HarnessResult<Vec<ScoreRecord>> {
    let table = parse_table(text, KIND, source, false)?;
    if table.is_empty() || table.rows.is_empty() {
        log::warn!("{source}: no annotation records");
        return Ok(Vec::new());
    }
    let id = table.require_column("item_id")?;
    let lo = table.require_column("range_min")?;
    let hi = table.require_column("range_max")?;
    table.require_column("overall")?;

    let mut score_cols = Vec::new();
    let mut std_cols = Vec::new();
    for (idx, name) in table.columns.iter().enumerate() {
        if [id, lo, hi].contains(&idx) {
            continue;
        }
        if let Some(base) = name.strip_suffix("_std") {
            let dim = base
                .parse::<Dimension>()
                .map_err(|e| table.error(1, e.to_string()))?;
            std_cols.push((dim, idx));
        } else {
            let dim = name
                .parse::<Dimension>()
                .map_err(|e| table.error(1, e.to_string()))?;
            score_cols.push((dim, idx));
        }
    }

    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let item_id = row.cells[id].to_string();
        if item_id.is_empty() {
            return Err(table.error(row.line, "empty item_id"));
        }
        if !seen.insert(item_id.clone()) {
            return Err(HarnessError::Validation {
                item_id,
                message: format!("duplicate item_id (line {})", row.line),
            });
        }
        let mut scores = BTreeMap::new();
        for &(dim, idx) in &score_cols {
            if let Some(v) = table.opt_f64_at(row, idx)? {
                scores.insert(dim, v);
            }
        }
        let mut stds = BTreeMap::new();
        for &(dim, idx) in &std_cols {
            if let Some(v) = table.opt_f64_at(row, idx)? {
                stds.insert(dim, v);
            }
        }
        let record = ScoreRecord {
            item_id,
            scores,
            stds,
            range_min: table.f64_at(row, lo)?,
            range_max: table.f64_at(row, hi)?,
        };
        record.validate()?;
        records.push(record);
    }
    records.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    Ok(records)
}

/// Serialize records; columns cover every dimension (and std) present in
/// any record, absent cells are written as `-`.
pub fn write_annotations(records: &[ScoreRecord]) -> String {
    let dims: BTreeSet<Dimension> = records
        .iter()
        .flat_map(|r| r.scores.keys().copied())
        .collect();
    let std_dims: BTreeSet<Dimension> = records
        .iter()
        .flat_map(|r| r.stds.keys().copied())
        .collect();
    let mut w = TableWriter::new(KIND);
    let mut header = vec![
        "item_id".to_string(),
        "range_min".into(),
        "range_max".into(),
    ];
    header.extend(dims.iter().map(|d| d.to_string()));
    header.extend(std_dims.iter().map(|d| format!("{d}_std")));
    w.row(header);

    let mut sorted: Vec<&ScoreRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    let cell = |v: Option<&f64>| v.map_or(MISSING.to_string(), |v| fmt_f64(*v));
    for r in sorted {
        let mut cells = vec![
            r.item_id.clone(),
            fmt_f64(r.range_min),
            fmt_f64(r.range_max),
        ];
        cells.extend(dims.iter().map(|d| cell(r.scores.get(d))));
        cells.extend(std_dims.iter().map(|d| cell(r.stds.get(d))));
        w.row(cells);
    }
    w.finish()
}
