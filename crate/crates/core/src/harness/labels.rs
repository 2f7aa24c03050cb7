use super::config::{LabelModeName, RunConfig};
use super::table::{fmt_f64, fmt_list, parse_list, parse_table, Table, TableWriter};
use super::{HarnessError, HarnessResult, ScoreRecord};
use crate::metrics::Dimension;
use crate::softlabel::{build_label, LabelMode, LevelScheme, Provenance, SoftLabel};

const KIND: &str = "labels";

/// Soft label for one (item, dimension) pair; `mu` is normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub item_id: String,
    pub dimension: Dimension,
    pub mu: f64,
    pub label: SoftLabel,
}

/// Build one label per (item, dimension), ordered by item then dimension.
pub fn emit_labels(records: &[ScoreRecord], config: &RunConfig) -> HarnessResult<Vec<LabelRecord>> {
    let scheme = config.scheme.build()?;
    let mut out = Vec::new();
    for record in records {
        record.validate()?;
        for &dimension in record.scores.keys() {
            let mu = record
                .normalized(dimension)?
                .expect("dimension taken from scores");
            let mode = match config.label_mode {
                LabelModeName::Interp => LabelMode::Interp,
                LabelModeName::Pseudo => LabelMode::Pseudo {
                    ratio: config.pseudo_ratio,
                },
                LabelModeName::TrueVariance => {
                    let sigma = record.normalized_std(dimension)?.ok_or_else(|| {
                        HarnessError::Validation {
                            item_id: record.item_id.clone(),
                            message: format!("true-variance mode needs `{dimension}_std`"),
                        }
                    })?;
                    LabelMode::TrueVariance(sigma)
                }
            };
            let label = build_label(mu, mode, &scheme).map_err(|e| HarnessError::Validation {
                item_id: record.item_id.clone(),
                message: format!("{dimension}: {e}"),
            })?;
            out.push(LabelRecord {
                item_id: record.item_id.clone(),
                dimension,
                mu,
                label,
            });
        }
    }
    out.sort_by(|a, b| (&a.item_id, a.dimension).cmp(&(&b.item_id, b.dimension)));
    Ok(out)
}

pub(crate) fn write_scheme_meta(w: &mut TableWriter, scheme: &LevelScheme) {
    w.meta("levels", fmt_list(scheme.centers()));
    w.meta("width", fmt_f64(scheme.width()));
    w.meta("names", scheme.names().join(","));
}

pub(crate) fn read_scheme_meta(table: &Table<'_>) -> HarnessResult<LevelScheme> {
    let centers = table
        .meta("levels")
        .and_then(parse_list)
        .ok_or_else(|| table.error(1, "missing or invalid `#levels` metadata"))?;
    let width = table
        .meta("width")
        .and_then(|w| w.parse::<f64>().ok())
        .ok_or_else(|| table.error(1, "missing or invalid `#width` metadata"))?;
    let names = match table.meta("names") {
        Some(n) => n.split(',').map(|s| s.trim().to_string()).collect(),
        None => (0..centers.len()).map(|i| format!("level{i}")).collect(),
    };
    LevelScheme::new(centers, width, names).map_err(|e| table.error(1, e.to_string()))
}

pub(crate) fn prob_columns(n: usize) -> impl Iterator<Item = String> {
    (0..n).map(|i| format!("p{i}"))
}

pub fn write_labels(labels: &[LabelRecord], config: &RunConfig) -> HarnessResult<String> {
    let scheme = config.scheme.build()?;
    let mut w = TableWriter::new(KIND);
    write_scheme_meta(&mut w, &scheme);
    w.meta("mode", config.label_mode.as_str());
    if config.label_mode == LabelModeName::Pseudo {
        w.meta("pseudo_ratio", fmt_f64(config.pseudo_ratio));
    }
    let mut header = vec!["item_id".to_string(), "dimension".into(), "mu".into()];
    header.extend(prob_columns(scheme.len()));
    header.push("provenance".into());
    w.row(header);
    for l in labels {
        let mut cells = vec![l.item_id.clone(), l.dimension.to_string(), fmt_f64(l.mu)];
        cells.extend(l.label.probs().iter().map(|p| fmt_f64(*p)));
        cells.push(l.label.provenance().to_string());
        w.row(cells);
    }
    Ok(w.finish())
}

pub fn parse_labels(text: &str, source: &str) -> HarnessResult<(LevelScheme, Vec<LabelRecord>)> {
    let table = parse_table(text, KIND, source, false)?;
    if table.is_empty() {
        return Err(table.error(1, "empty label file"));
    }
    let scheme = read_scheme_meta(&table)?;
    let id = table.require_column("item_id")?;
    let dim = table.require_column("dimension")?;
    let mu = table.require_column("mu")?;
    let prov = table.require_column("provenance")?;
    let probs: Vec<usize> = prob_columns(scheme.len())
        .map(|c| table.require_column(&c))
        .collect::<HarnessResult<_>>()?;

    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let dimension = row.cells[dim]
            .parse::<Dimension>()
            .map_err(|e| table.error(row.line, e.to_string()))?;
        let provenance = row.cells[prov]
            .parse::<Provenance>()
            .map_err(|e| table.error(row.line, e.to_string()))?;
        let p = probs
            .iter()
            .map(|&i| table.f64_at(row, i))
            .collect::<HarnessResult<Vec<_>>>()?;
        let label =
            SoftLabel::new(p, provenance).map_err(|e| table.error(row.line, e.to_string()))?;
        out.push(LabelRecord {
            item_id: row.cells[id].to_string(),
            dimension,
            mu: table.f64_at(row, mu)?,
            label,
        });
    }
    Ok((scheme, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::parse_annotations;
    use approx::assert_abs_diff_eq;

    fn records(text: &str) -> Vec<ScoreRecord> {
        parse_annotations(text, "mem").unwrap()
    }

    #[test]
    fn midpoint_interp_is_centre_mass() {
        let recs = records(
            "#docqa-annotations v1\nitem_id\trange_min\trange_max\toverall\nm\t0\t100\t50\n",
        );
        let config = RunConfig {
            label_mode: LabelModeName::Interp,
            ..Default::default()
        };
        let labels = emit_labels(&recs, &config).unwrap();
        assert_eq!(labels.len(), 1);
        assert_eq!(labels[0].label.probs(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn pseudo_rows_recover_mean() {
        let recs = records(
            "#docqa-annotations v1\nitem_id\trange_min\trange_max\toverall\tcolor\nq\t0\t100\t61\t35\n",
        );
        let config = RunConfig::default();
        let scheme = config.scheme.build().unwrap();
        for l in emit_labels(&recs, &config).unwrap() {
            assert_abs_diff_eq!(l.label.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(l.label.mean(&scheme), l.mu, epsilon = 1e-9);
        }
    }

    #[test]
    fn ordering_and_text_round_trip() {
        let recs = records(
            "#docqa-annotations v1
item_id\trange_min\trange_max\toverall\tsharpness\tcolor
z\t0\t100\t10\t20\t30
a\t0\t100\t90\t80\t70
",
        );
        let config = RunConfig::default();
        let labels = emit_labels(&recs, &config).unwrap();
        let keys: Vec<_> = labels
            .iter()
            .map(|l| (l.item_id.as_str(), l.dimension))
            .collect();
        assert_eq!(
            keys,
            vec![
                ("a", Dimension::Overall),
                ("a", Dimension::Sharpness),
                ("a", Dimension::Color),
                ("z", Dimension::Overall),
                ("z", Dimension::Sharpness),
                ("z", Dimension::Color),
            ]
        );
        let text = write_labels(&labels, &config).unwrap();
        assert_eq!(
            text,
            write_labels(&emit_labels(&recs, &config).unwrap(), &config).unwrap()
        );
        let (scheme, back) = parse_labels(&text, "mem").unwrap();
        assert_eq!(scheme, LevelScheme::five_level());
        assert_eq!(back, labels);
    }

    #[test]
    fn true_variance_needs_std() {
        let config = RunConfig {
            label_mode: LabelModeName::TrueVariance,
            ..Default::default()
        };
        let recs = records(
            "#docqa-annotations v1\nitem_id\trange_min\trange_max\toverall\nm\t0\t100\t50\n",
        );
        assert!(matches!(
            emit_labels(&recs, &config),
            Err(HarnessError::Validation { .. })
        ));
        let recs = records(
            "#docqa-annotations v1\nitem_id\trange_min\trange_max\toverall\toverall_std\nm\t0\t100\t55\t20\n",
        );
        let labels = emit_labels(&recs, &config).unwrap();
        assert_eq!(labels[0].label.provenance(), Provenance::Gaussian);
    }

    #[test]
    fn corrupt_probabilities_rejected() {
        let config = RunConfig::default();
        let recs = records(
            "#docqa-annotations v1\nitem_id\trange_min\trange_max\toverall\nm\t0\t100\t50\n",
        );
        let text = write_labels(&emit_labels(&recs, &config).unwrap(), &config).unwrap();
        let broken = text.replace("\tgaussian", "\tnonsense");
        assert!(parse_labels(&broken, "mem").is_err());
        let last = text.lines().last().unwrap().to_string();
        let mut cells: Vec<&str> = last.split('\t').collect();
        cells[3] = "0.9";
        let broken = text.replace(&last, &cells.join("\t"));
        assert!(parse_labels(&broken, "mem").is_err());
    }
}
