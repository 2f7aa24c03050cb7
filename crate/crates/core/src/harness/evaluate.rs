use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SchemeConfig;
use super::{load_annotations, parse_predictions, read_file, HarnessError, HarnessResult};
use super::{PredictionFile, ScoreRecord};
use crate::metrics::{Dimension, DimensionReport, EvalReport, PairedSeries};

pub const REPORT_FORMAT: &str = "docqa-report";
pub const REPORT_VERSION: u32 = 1;

/// Score predictions against ground-truth annotations. Every annotated
/// (item, dimension) must have exactly one prediction and vice versa.
pub fn evaluate_records(
    predictions: &PredictionFile,
    ground_truth: &[ScoreRecord],
) -> HarnessResult<EvalReport> {
    let mut truth: BTreeMap<(String, Dimension), f64> = BTreeMap::new();
    for record in ground_truth {
        for &dim in record.scores.keys() {
            let v = record
                .normalized(dim)?
                .expect("dimension taken from scores");
            truth.insert((record.item_id.clone(), dim), v);
        }
    }
    let predicted = predictions.scores();

    let truth_keys: BTreeSet<_> = truth.keys().collect();
    let pred_keys: BTreeSet<_> = predicted.keys().collect();
    if truth_keys != pred_keys {
        let name = |k: &&(String, Dimension)| format!("{}/{}", k.0, k.1);
        return Err(HarnessError::Alignment {
            missing: truth_keys.difference(&pred_keys).map(name).collect(),
            extra: pred_keys.difference(&truth_keys).map(name).collect(),
        });
    }

    let mut dimensions = BTreeMap::new();
    for dim in Dimension::ALL {
        let (pred, gt): (Vec<f64>, Vec<f64>) = truth
            .iter()
            .filter(|((_, d), _)| *d == dim)
            .map(|(k, v)| (predicted[k], *v))
            .unzip();
        if pred.is_empty() {
            continue;
        }
        let series = PairedSeries::new(&pred, &gt)?;
        dimensions.insert(dim, DimensionReport::compute(&series)?);
    }
    if dimensions.is_empty() {
        return Err(crate::Error::InsufficientData { needed: 2, got: 0 }.into());
    }
    Ok(EvalReport::from_dimensions(dimensions))
}

pub fn evaluate(predictions: &Path, ground_truth: &Path) -> HarnessResult<EvalReport> {
    let preds = parse_predictions(&read_file(predictions)?, &predictions.display().to_string())?;
    let truth = load_annotations(ground_truth)?;
    evaluate_records(&preds, &truth)
}

/// Machine-readable report with a config echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub report: EvalReport,
    pub prediction_source: String,
    pub scheme: SchemeConfig,
}

pub fn report_json(report: &EvalReport, predictions: &PredictionFile) -> String {
    let doc = ReportDocument {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        report: report.clone(),
        prediction_source: predictions.source.clone(),
        scheme: SchemeConfig {
            centers: predictions.scheme.centers().to_vec(),
            width: predictions.scheme.width(),
            names: predictions.scheme.names().to_vec(),
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{parse_annotations, PredictionRecord};
    use crate::softlabel::LevelScheme;
    use approx::assert_abs_diff_eq;

    const TRUTH: &str = "#docqa-annotations v1
item_id\trange_min\trange_max\toverall\tsharpness\tcolor
a\t0\t100\t10\t20\t35
b\t0\t100\t40\t30\t20
c\t0\t100\t70\t90\t50
d\t0\t100\t95\t60\t80
";

    fn predictions_from(truth: &[ScoreRecord], f: impl Fn(f64) -> f64) -> PredictionFile {
        let mut records = Vec::new();
        for r in truth {
            for &dim in r.scores.keys() {
                records.push(PredictionRecord {
                    item_id: r.item_id.clone(),
                    dimension: dim,
                    score: f(r.normalized(dim).unwrap().unwrap()),
                    distribution: None,
                });
            }
        }
        PredictionFile {
            scheme: LevelScheme::five_level(),
            source: "test".into(),
            records,
        }
    }

    #[test]
    fn perfect_predictions_score_one() {
        let truth = parse_annotations(TRUTH, "mem").unwrap();
        let report = evaluate_records(&predictions_from(&truth, |v| v), &truth).unwrap();
        for r in report.dimensions.values() {
            assert_abs_diff_eq!(r.srcc, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.plcc, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(report.final_score.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reversed_ranks_give_minus_one() {
        let truth = parse_annotations(TRUTH, "mem").unwrap();
        let report = evaluate_records(&predictions_from(&truth, |v| -v.powi(3)), &truth).unwrap();
        for r in report.dimensions.values() {
            assert_abs_diff_eq!(r.srcc, -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn alignment_errors_list_offenders() {
        let truth = parse_annotations(TRUTH, "mem").unwrap();
        let mut preds = predictions_from(&truth, |v| v);
        preds.records.retain(|r| r.item_id != "b");
        preds.records.push(PredictionRecord {
            item_id: "zz".into(),
            dimension: Dimension::Overall,
            score: 3.0,
            distribution: None,
        });
        match evaluate_records(&preds, &truth) {
            Err(HarnessError::Alignment { missing, extra }) => {
                assert_eq!(missing, vec!["b/overall", "b/sharpness", "b/color"]);
                assert_eq!(extra, vec!["zz/overall"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_few_items() {
        let truth = parse_annotations(
            "#docqa-annotations v1\nitem_id\trange_min\trange_max\toverall\na\t0\t1\t0.5\n",
            "mem",
        )
        .unwrap();
        let err = evaluate_records(&predictions_from(&truth, |v| v), &truth).unwrap_err();
        assert!(matches!(
            err,
            HarnessError::Core(crate::Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn overall_only_has_no_final() {
        let truth = parse_annotations(
            "#docqa-annotations v1\nitem_id\trange_min\trange_max\toverall\na\t0\t1\t0.5\nb\t0\t1\t0.7\nc\t0\t1\t0.1\n",
            "mem",
        )
        .unwrap();
        let preds = predictions_from(&truth, |v| v);
        let report = evaluate_records(&preds, &truth).unwrap();
        assert_eq!(report.final_score, None);
        let json = report_json(&report, &preds);
        let doc: ReportDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc.report, report);
    }
}
