//! Pipeline configuration: defaults, the key = value config file, and the
//! flag-over-file merge.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::pipeline::PipelineError;

/// How the trend threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Median of the estimated trends (the default).
    MedianOfTrends,
    /// User-supplied cutoff.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Md,
}

impl Format {
    fn parse(s: &str) -> Result<Format, PipelineError> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" => Ok(Format::Md),
            other => Err(PipelineError::Config(format!(
                "unknown format {other:?}; expected json, csv, or md"
            ))),
        }
    }
}

/// Fully resolved configuration for a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub panel_path: PathBuf,
    pub target: String,
    pub factors: Vec<String>,
    pub threshold: ThresholdPolicy,
    pub alpha: f64,
    pub breaks_k: usize,
    pub ridge_lambda: f64,
    pub standardize: bool,
    /// Monte Carlo draws for the permutation oracle; 0 skips it.
    pub permutations: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub formats: BTreeSet<Format>,
}

/// Unresolved settings: every field optional so the config file and the
/// command line can each fill in part of the picture. Flags override file
/// values; [`ConfigBuilder::build`] applies defaults and validates.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigBuilder {
    pub panel: Option<PathBuf>,
    pub target: Option<String>,
    pub factors: Option<Vec<String>>,
    pub threshold: Option<ThresholdSpec>,
    pub alpha: Option<f64>,
    pub breaks_k: Option<usize>,
    pub ridge_lambda: Option<f64>,
    pub standardize: Option<bool>,
    pub permutations: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
}

/// `"median"` or a number, as written in the file or on the command line.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    Word(String),
    Value(f64),
}

impl ThresholdSpec {
    pub fn parse(s: &str) -> Result<ThresholdSpec, PipelineError> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(ThresholdSpec::Word("median".into()));
        }
        s.parse::<f64>()
            .map(ThresholdSpec::Value)
            .map_err(|_| {
                PipelineError::Config(format!(
                    "threshold must be \"median\" or a number, got {s:?}"
                ))
            })
    }

    fn resolve(&self) -> Result<ThresholdPolicy, PipelineError> {
        match self {
            ThresholdSpec::Word(w) if w.eq_ignore_ascii_case("median") => {
                Ok(ThresholdPolicy::MedianOfTrends)
            }
            ThresholdSpec::Word(w) => Err(PipelineError::Config(format!(
                "threshold must be \"median\" or a number, got {w:?}"
            ))),
            ThresholdSpec::Value(v) if v.is_finite() => Ok(ThresholdPolicy::Fixed(*v)),
            ThresholdSpec::Value(v) => Err(PipelineError::Config(format!(
                "fixed threshold must be finite, got {v}"
            ))),
        }
    }
}

impl ConfigBuilder {
    /// Parse a TOML config file.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| {
            PipelineError::Config(format!("config file {}: {e}", path.display()))
        })
    }

    /// Overlay `other` on top of `self`: any value set in `other` wins.
    pub fn merged_with(mut self, other: ConfigBuilder) -> Self {
        macro_rules! take {
            ($field:ident) => {
                if other.$field.is_some() {
                    self.$field = other.$field;
                }
            };
        }
        take!(panel);
        take!(target);
        take!(factors);
        take!(threshold);
        take!(alpha);
        take!(breaks_k);
        take!(ridge_lambda);
        take!(standardize);
        take!(permutations);
        take!(seed);
        take!(out);
        take!(formats);
        self
    }

    /// Resolve defaults and validate. `require_output` is false only for
    /// commands that write nothing.
    pub fn build(self, require_output: bool) -> Result<PipelineConfig, PipelineError> {
        let panel_path = self
            .panel
            .ok_or_else(|| PipelineError::Config("missing panel path (--panel)".into()))?;
        let target = self
            .target
            .ok_or_else(|| PipelineError::Config("missing target variable (--target)".into()))?;
        let factors = self
            .factors
            .ok_or_else(|| PipelineError::Config("missing factor list (--factors)".into()))?;
        if factors.is_empty() {
            return Err(PipelineError::Config("factor list is empty".into()));
        }
        if factors.iter().any(|f| f == &target) {
            return Err(PipelineError::Config(format!(
                "target {target:?} cannot also be a factor"
            )));
        }
        let mut seen = BTreeSet::new();
        for f in &factors {
            if !seen.insert(f) {
                return Err(PipelineError::Config(format!("factor {f:?} listed twice")));
            }
        }
        let threshold = match &self.threshold {
            Some(spec) => spec.resolve()?,
            None => ThresholdPolicy::MedianOfTrends,
        };
        let alpha = self.alpha.unwrap_or(0.01);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(PipelineError::Config(format!(
                "alpha must lie strictly between 0 and 1, got {alpha}"
            )));
        }
        let breaks_k = self.breaks_k.unwrap_or(5);
        if breaks_k < 1 {
            return Err(PipelineError::Config("breaks_k must be >= 1".into()));
        }
        let ridge_lambda = self.ridge_lambda.unwrap_or(0.0);
        if !ridge_lambda.is_finite() || ridge_lambda < 0.0 {
            return Err(PipelineError::Config(format!(
                "ridge_lambda must be finite and >= 0, got {ridge_lambda}"
            )));
        }
        let output_dir = match (self.out, require_output) {
            (Some(dir), _) => dir,
            (None, false) => PathBuf::from("."),
            (None, true) => {
                return Err(PipelineError::Config("missing output directory (--out)".into()))
            }
        };
        let formats = match self.formats {
            Some(names) => {
                let mut set = BTreeSet::new();
                for name in &names {
                    set.insert(Format::parse(name)?);
                }
                if set.is_empty() {
                    return Err(PipelineError::Config("format list is empty".into()));
                }
                set
            }
            None => BTreeSet::from([Format::Json, Format::Csv, Format::Md]),
        };
        Ok(PipelineConfig {
            panel_path,
            target,
            factors,
            threshold,
            alpha,
            breaks_k,
            ridge_lambda,
            standardize: self.standardize.unwrap_or(false),
            permutations: self.permutations.unwrap_or(9999),
            seed: self.seed.unwrap_or(42),
            output_dir,
            formats,
        })
    }
}
