use super::table::{fmt_f64, parse_table, TableWriter};
use super::HarnessResult;
use crate::metrics::Dimension;

const KIND: &str = "features";

/// Precomputed feature vector for one (item, dimension) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub item_id: String,
    pub dimension: Dimension,
    pub features: Vec<f64>,
}

pub fn write_features(records: &[FeatureRecord]) -> String {
    let dim = records.first().map_or(0, |r| r.features.len());
    let mut w = TableWriter::new(KIND);
    let mut header = vec!["item_id".to_string(), "dimension".into()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.row(header);
    for r in records {
        let mut cells = vec![r.item_id.clone(), r.dimension.to_string()];
        cells.extend(r.features.iter().map(|v| fmt_f64(*v)));
        w.row(cells);
    }
    w.finish()
}

pub fn parse_features(text: &str, source: &str) -> HarnessResult<Vec<FeatureRecord>> {
    let table = parse_table(text, KIND, source, false)?;
    if table.is_empty() {
        return Ok(Vec::new());
    }
    let id = table.require_column("item_id")?;
    let dim = table.require_column("dimension")?;
    let cols: Vec<usize> = (0..table.columns.len())
        .filter(|i| {
            table.columns[*i].starts_with('f') && table.columns[*i][1..].parse::<usize>().is_ok()
        })
        .collect();
    if cols.is_empty() {
        return Err(table.error(1, "no feature columns (f0, f1, ...)"));
    }
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        out.push(FeatureRecord {
            item_id: row.cells[id].to_string(),
            dimension: row.cells[dim]
                .parse()
                .map_err(|e: crate::Error| table.error(row.line, e.to_string()))?,
            features: cols
                .iter()
                .map(|&i| table.f64_at(row, i))
                .collect::<HarnessResult<_>>()?,
        });
    }
    Ok(out)
}
