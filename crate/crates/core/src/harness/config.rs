use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_file, HarnessError, HarnessResult};
use crate::softlabel::{LevelScheme, DEFAULT_PSEUDO_RATIO};
use crate::trainer::TrainConfig;

/// Environment variable naming a config file used when `--config` is absent.
pub const DEFAULT_CONFIG_ENV: &str = "DOCQA_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LabelModeName {
    #[default]
    Pseudo,
    Interp,
    TrueVariance,
}

impl LabelModeName {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelModeName::Pseudo => "pseudo",
            LabelModeName::Interp => "interp",
            LabelModeName::TrueVariance => "true-variance",
        }
    }
}

impl fmt::Display for LabelModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelModeName {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        match s {
            "pseudo" => Ok(Self::Pseudo),
            "interp" => Ok(Self::Interp),
            "true-variance" => Ok(Self::TrueVariance),
            other => Err(HarnessError::Config(format!(
                "unknown label mode `{other}`"
            ))),
        }
    }
}

/// Whether an ensemble fuses different models or prompt variants of one
/// model. Only recorded in output headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    #[default]
    Model,
    Prompt,
}

impl EnsembleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleKind::Model => "model",
            EnsembleKind::Prompt => "prompt",
        }
    }
}

impl FromStr for EnsembleKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        match s {
            "model" => Ok(Self::Model),
            "prompt" => Ok(Self::Prompt),
            other => Err(HarnessError::Config(format!(
                "unknown ensemble kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub centers: Vec<f64>,
    pub width: f64,
    pub names: Vec<String>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        let s = LevelScheme::five_level();
        Self {
            centers: s.centers().to_vec(),
            width: s.width(),
            names: s.names().to_vec(),
        }
    }
}

impl SchemeConfig {
    pub fn build(&self) -> HarnessResult<LevelScheme> {
        Ok(LevelScheme::new(
            self.centers.clone(),
            self.width,
            self.names.clone(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub members: Vec<PathBuf>,
    pub weights: Option<Vec<f64>>,
    pub kind: EnsembleKind,
}

/// Settings shared by the CLI subcommands. Every field has a default, so an
/// empty file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub label_mode: LabelModeName,
    pub pseudo_ratio: f64,
    pub output: Option<PathBuf>,
    pub scheme: SchemeConfig,
    pub train: TrainConfig,
    pub ensemble: EnsembleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            label_mode: LabelModeName::default(),
            pseudo_ratio: DEFAULT_PSEUDO_RATIO,
            output: None,
            scheme: SchemeConfig::default(),
            train: TrainConfig::default(),
            ensemble: EnsembleConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> HarnessResult<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Load `path`, else the file named by `DOCQA_CONFIG`, else defaults.
    pub fn load(path: Option<&Path>) -> HarnessResult<Self> {
        let env_path = std::env::var_os(DEFAULT_CONFIG_ENV).map(PathBuf::from);
        match path.map(Path::to_path_buf).or(env_path) {
            Some(p) => Self::parse(&read_file(&p)?),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> HarnessResult<()> {
        self.scheme.build()?;
        if !(self.pseudo_ratio.is_finite() && self.pseudo_ratio > 0.0) {
            return Err(HarnessError::Config(format!(
                "pseudo_ratio must be > 0, got {}",
                self.pseudo_ratio
            )));
        }
        self.train.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn parses_overrides() {
        let text = r#"
            seed = 9
            label_mode = "interp"
            [train]
            epochs = 3
            [ensemble]
            kind = "prompt"
            members = ["a.tsv", "b.tsv"]
        "#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.label_mode, LabelModeName::Interp);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.learning_rate, TrainConfig::default().learning_rate);
        assert_eq!(c.ensemble.kind, EnsembleKind::Prompt);
        assert_eq!(c.ensemble.members.len(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("pseudo_ratio = -1.0").is_err());
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(
            RunConfig::parse("[scheme]\ncenters = [1.0, 3.0]\nnames = [\"a\", \"b\"]").is_err()
        );
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }
}
