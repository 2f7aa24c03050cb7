use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use docqa::harness::{
    emit_labels, evaluate_records, load_annotations, parse_features, parse_labels,
    parse_predictions, read_file, report_json, run_ensemble, score_labels, score_model,
    simulate_dataset, write_annotations, write_features, write_file, write_labels, write_panels,
    write_predictions, EnsembleKind, LabelModeName, RunConfig, SimulationParams,
};
use docqa::trainer::{train_with_report, LabeledExample, ToyScorer};

#[derive(Parser)]
#[command(name = "docqa", version, about = "Soft-label quality scoring toolkit")]
struct Cli {
    /// TOML run configuration (falls back to $DOCQA_CONFIG, then defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (directory for `simulate`). Defaults to stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build soft labels from an annotation file.
    Label {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<LabelModeName>,
        #[arg(long)]
        pseudo_ratio: Option<f64>,
    },
    /// Turn labels or a trained model into a prediction file.
    Score {
        #[arg(long, conflicts_with_all = ["model", "features"])]
        labels: Option<PathBuf>,
        #[arg(long, requires = "features")]
        model: Option<PathBuf>,
        #[arg(long, requires = "model")]
        features: Option<PathBuf>,
    },
    /// Average the distributions of several prediction files.
    Ensemble {
        #[arg(long, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Comma-separated member weights summing to one.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, value_parser = parse_kind)]
        kind: Option<EnsembleKind>,
    },
    /// Compare predictions with ground truth; `--output` receives JSON.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
    },
    /// Fit the linear-softmax scorer on labels and features.
    TrainToy {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Write a synthetic annotation, panel and feature set to a directory.
    Simulate {
        #[arg(long, default_value_t = SimulationParams::default().items)]
        items: usize,
        #[arg(long, default_value_t = SimulationParams::default().raters)]
        raters: usize,
        #[arg(long, default_value_t = SimulationParams::default().feature_noise)]
        feature_noise: f64,
    },
}

fn parse_mode(s: &str) -> Result<LabelModeName, String> {
    s.parse()
        .map_err(|e: docqa::harness::HarnessError| e.to_string())
}

fn parse_kind(s: &str) -> Result<EnsembleKind, String> {
    s.parse()
        .map_err(|e: docqa::harness::HarnessError| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => write_file(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.train.seed = seed;
    }
    let output = cli.output.or_else(|| config.output.clone());
    let output = output.as_deref();

    match cli.command {
        Command::Label {
            annotations,
            mode,
            pseudo_ratio,
        } => {
            if let Some(m) = mode {
                config.label_mode = m;
            }
            if let Some(r) = pseudo_ratio {
                config.pseudo_ratio = r;
            }
            config.validate()?;
            let records = load_annotations(&annotations)?;
            let labels = emit_labels(&records, &config)?;
            log::info!("{} labels from {} items", labels.len(), records.len());
            emit(output, &write_labels(&labels, &config)?)
        }
        Command::Score {
            labels,
            model,
            features,
        } => {
            let file = match (labels, model, features) {
                (Some(labels), None, None) => {
                    let (scheme, records) =
                        parse_labels(&read_file(&labels)?, &labels.display().to_string())?;
                    score_labels(&scheme, &records)?
                }
                (None, Some(model), Some(features)) => {
                    let (scorer, _) = ToyScorer::from_checkpoint(&read_file(&model)?)
                        .with_context(|| format!("loading {}", model.display()))?;
                    let feats =
                        parse_features(&read_file(&features)?, &features.display().to_string())?;
                    score_model(&scorer, &config.scheme.build()?, &feats)?
                }
                _ => bail!("score needs either --labels or both --model and --features"),
            };
            emit(output, &write_predictions(&file))
        }
        Command::Ensemble {
            inputs,
            weights,
            kind,
        } => {
            let inputs = if inputs.is_empty() {
                config.ensemble.members.clone()
            } else {
                inputs
            };
            if inputs.is_empty() {
                bail!("ensemble needs --inputs or `ensemble.members` in the config");
            }
            let files = inputs
                .iter()
                .map(|p| Ok(parse_predictions(&read_file(p)?, &p.display().to_string())?))
                .collect::<Result<Vec<_>>>()?;
            let weights = weights.or_else(|| config.ensemble.weights.clone());
            let kind = kind.unwrap_or(config.ensemble.kind);
            let fused = run_ensemble(&files, weights, kind)?;
            emit(output, &write_predictions(&fused))
        }
        Command::Eval {
            predictions,
            ground_truth,
        } => {
            let preds = parse_predictions(
                &read_file(&predictions)?,
                &predictions.display().to_string(),
            )?;
            let truth = load_annotations(&ground_truth)?;
            let report = evaluate_records(&preds, &truth)?;
            print!("{}", report.to_table());
            if let Some(path) = output {
                write_file(path, &report_json(&report, &preds))?;
            }
            Ok(())
        }
        Command::TrainToy {
            labels,
            features,
            epochs,
            lr,
            batch_size,
        } => {
            if let Some(e) = epochs {
                config.train.epochs = e;
            }
            if let Some(lr) = lr {
                config.train.learning_rate = lr;
            }
            if let Some(b) = batch_size {
                config.train.batch_size = b;
            }
            config.validate()?;
            let (_, label_records) =
                parse_labels(&read_file(&labels)?, &labels.display().to_string())?;
            let feats = parse_features(&read_file(&features)?, &features.display().to_string())?;
            let mut by_key: BTreeMap<_, _> = feats
                .into_iter()
                .map(|f| ((f.item_id, f.dimension), f.features))
                .collect();
            let data = label_records
                .into_iter()
                .map(|l| {
                    let features = by_key
                        .remove(&(l.item_id.clone(), l.dimension))
                        .with_context(|| {
                            format!("no features for {}/{}", l.item_id, l.dimension)
                        })?;
                    Ok(LabeledExample {
                        features,
                        label: l.label,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (model, report) = train_with_report(&data, &config.train)?;
            log::info!(
                "loss {:.6} -> {:.6} (best epoch {})",
                report.initial_loss,
                report.final_loss,
                report.best_epoch
            );
            emit(output, &model.to_checkpoint(Some(&config.train)))
        }
        Command::Simulate {
            items,
            raters,
            feature_noise,
        } => {
            let Some(dir) = output else {
                bail!("simulate needs --output <directory>");
            };
            let params = SimulationParams {
                items,
                raters,
                seed: config.seed,
                feature_noise,
            };
            let data = simulate_dataset(&params)?;
            write_file(
                &dir.join("annotations.tsv"),
                &write_annotations(&data.annotations),
            )?;
            write_file(&dir.join("panels.tsv"), &write_panels(&data.panels))?;
            write_file(&dir.join("features.tsv"), &write_features(&data.features))?;
            Ok(())
        }
    }
}
