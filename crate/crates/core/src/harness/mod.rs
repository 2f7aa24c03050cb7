//! File formats, batch operations and run configuration behind the CLI.
//!
//! Every file is tab-separated text. The first line is a format tag such as
//! `#docqa-labels v1`, followed by optional `#key value` metadata lines, one
//! column-header line, and one record per line. See `docs/formats.md`.

mod annotations;
mod config;
mod evaluate;
mod features;
mod labels;
mod panels;
mod predictions;
mod table;

pub use annotations::{load_annotations, parse_annotations, write_annotations, ScoreRecord};
pub use config::{EnsembleKind, LabelModeName, RunConfig, SchemeConfig, DEFAULT_CONFIG_ENV};
pub use evaluate::{evaluate, evaluate_records, report_json, ReportDocument};
pub use features::{parse_features, write_features, FeatureRecord};
pub use labels::{emit_labels, parse_labels, write_labels, LabelRecord};
pub use panels::{
    parse_panels, simulate_dataset, write_panels, SimulatedDataset, SimulatedPanel,
    SimulationParams,
};
pub use predictions::{
    parse_predictions, run_ensemble, score_labels, score_model, write_predictions, PredictionFile,
    PredictionRecord,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("item `{item_id}`: {message}")]
    Validation { item_id: String, message: String },

    #[error("alignment error: missing [{}], extra [{}]", .missing.join(", "), .extra.join(", "))]
    Alignment {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] Error),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

pub fn read_file(path: &Path) -> HarnessResult<String> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> HarnessResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
