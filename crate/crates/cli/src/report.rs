//! Assembled analysis report and its writers: JSON, the CSV family, and a
//! Markdown summary. Output is byte-stable for a fixed config; the JSON
//! timestamp is the one field excluded from stability comparisons.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use heatpanel_core::assoc::CorrelationTable;
use heatpanel_core::breaks::BreaksClassification;
use heatpanel_core::stat_test::{HotellingResult, PermutationEstimate};
use heatpanel_core::trend::{Grouping, TrendEstimate};

use crate::config::{Format, PipelineConfig};
use crate::pipeline::PipelineError;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// ISO-8601 UTC; excluded from determinism checks.
    pub timestamp: String,
    pub config: PipelineConfig,
}

impl Provenance {
    pub fn now(config: &PipelineConfig) -> Self {
        Provenance {
            tool: "heatpanel".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            config: config.clone(),
        }
    }
}

/// Per-factor test outcome as serialized: the parametric result plus the
/// ridge setting and, when run, the permutation estimate.
#[derive(Debug, Clone, Serialize)]
pub struct FactorTest {
    #[serde(flatten)]
    pub hotelling: HotellingResult,
    pub ridge_lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<PermutationEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub trends: Vec<TrendEstimate>,
    pub threshold: f64,
    pub grouping: Grouping,
    pub correlations: CorrelationTable,
    pub breaks_per_factor: BTreeMap<String, BreaksClassification>,
    pub tests: BTreeMap<String, FactorTest>,
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(source),
    }
}

pub fn write_trends_csv(trends: &[TrendEstimate], path: &Path) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(["region", "slope", "intercept", "n_points"])
        .map_err(csv_error(path))?;
    for t in trends {
        w.write_record([
            t.region.as_str(),
            &t.slope.to_string(),
            &t.intercept.to_string(),
            &t.n_points.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

pub fn write_grouping_csv(
    trends: &[TrendEstimate],
    grouping: &Grouping,
    path: &Path,
) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(["region", "group"]).map_err(csv_error(path))?;
    for t in trends {
        let group = if grouping.increasing().contains(&t.region) {
            "increasing"
        } else {
            "non_increasing"
        };
        w.write_record([t.region.as_str(), group])
            .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

pub fn write_correlations_csv(table: &CorrelationTable, path: &Path) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    let mut header = vec!["region".to_string()];
    header.extend(table.factors.iter().cloned());
    w.write_record(&header).map_err(csv_error(path))?;
    for (region, row) in table.regions.iter().zip(&table.rows) {
        let mut record = vec![region.clone()];
        record.extend(row.iter().map(|r| r.to_string()));
        w.write_record(&record).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

pub fn write_breaks_csv(
    table: &CorrelationTable,
    breaks: &BTreeMap<String, BreaksClassification>,
    path: &Path,
) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(["factor", "region", "correlation", "class"])
        .map_err(csv_error(path))?;
    for factor in &table.factors {
        let classification = &breaks[factor];
        let column = table.column(factor).expect("factor comes from the table");
        for ((region, value), class) in table
            .regions
            .iter()
            .zip(&column)
            .zip(&classification.labels)
        {
            w.write_record([
                factor.as_str(),
                region.as_str(),
                &value.to_string(),
                &class.to_string(),
            ])
            .map_err(csv_error(path))?;
        }
    }
    w.flush().map_err(io_error(path))
}

pub fn write_tests_csv(
    tests: &BTreeMap<String, FactorTest>,
    factor_order: &[String],
    path: &Path,
) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(["factor", "t2", "f_stat", "df1", "df2", "p_value", "verdict"])
        .map_err(csv_error(path))?;
    for factor in factor_order {
        let t = &tests[factor].hotelling;
        w.write_record([
            factor.as_str(),
            &t.t2.to_string(),
            &t.f_stat.to_string(),
            &t.df1.to_string(),
            &t.df2.to_string(),
            &t.p_value.to_string(),
            &t.verdict.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

pub fn write_report_json(report: &AnalysisReport, path: &Path) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| PipelineError::Runtime {
            stage: "emit",
            message: e.to_string(),
        })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_error(path))
}

pub fn write_report_md(report: &AnalysisReport, path: &Path) -> Result<(), PipelineError> {
    let config = &report.provenance.config;
    let mut out = Vec::new();
    let w = &mut out;
    writeln!(w, "# Heat-panel analysis").unwrap();
    writeln!(w).unwrap();
    writeln!(
        w,
        "Generated by {} {}.",
        report.provenance.tool, report.provenance.version
    )
    .unwrap();
    writeln!(w).unwrap();
    writeln!(w, "- panel: `{}`", config.panel_path.display()).unwrap();
    writeln!(
        w,
        "- target: `{}`; factors: {}",
        config.target,
        config
            .factors
            .iter()
            .map(|f| format!("`{f}`"))
            .collect::<Vec<_>>()
            .join(", ")
    )
    .unwrap();
    writeln!(
        w,
        "- trend threshold: {} (resolved to {})",
        match config.threshold {
            crate::config::ThresholdPolicy::MedianOfTrends => "median of trends".to_string(),
            crate::config::ThresholdPolicy::Fixed(v) => format!("fixed {v}"),
        },
        report.threshold
    )
    .unwrap();
    writeln!(
        w,
        "- groups: {} increasing, {} non-increasing",
        report.grouping.increasing().len(),
        report.grouping.non_increasing().len()
    )
    .unwrap();
    writeln!(
        w,
        "- alpha = {}, ridge_lambda = {}, standardize = {}, permutations = {}, seed = {}",
        config.alpha, config.ridge_lambda, config.standardize, config.permutations, config.seed
    )
    .unwrap();
    writeln!(w).unwrap();

    writeln!(w, "## Trend grouping").unwrap();
    writeln!(w).unwrap();
    let join = |set: &std::collections::BTreeSet<String>| {
        set.iter().cloned().collect::<Vec<_>>().join(", ")
    };
    writeln!(w, "- increasing: {}", join(report.grouping.increasing())).unwrap();
    writeln!(
        w,
        "- non-increasing: {}",
        join(report.grouping.non_increasing())
    )
    .unwrap();
    writeln!(w).unwrap();

    writeln!(w, "## Group mean-difference tests").unwrap();
    writeln!(w).unwrap();
    writeln!(
        w,
        "| factor | T² | F | df1 | df2 | p-value | permutation p̂ | verdict |"
    )
    .unwrap();
    writeln!(w, "|---|---|---|---|---|---|---|---|").unwrap();
    for factor in &config.factors {
        let t = &report.tests[factor];
        let perm = t
            .permutation
            .as_ref()
            .map(|p| p.p_hat.to_string())
            .unwrap_or_else(|| "-".into());
        writeln!(
            w,
            "| {factor} | {} | {} | {} | {} | {} | {} | {} |",
            t.hotelling.t2,
            t.hotelling.f_stat,
            t.hotelling.df1,
            t.hotelling.df2,
            t.hotelling.p_value,
            perm,
            t.hotelling.verdict
        )
        .unwrap();
    }
    writeln!(w).unwrap();

    writeln!(w, "## Natural breaks (k = {})", config.breaks_k).unwrap();
    writeln!(w).unwrap();
    writeln!(w, "| factor | class boundaries | sdcm |").unwrap();
    writeln!(w, "|---|---|---|").unwrap();
    for factor in &config.factors {
        let b = &report.breaks_per_factor[factor];
        let bounds = b
            .boundaries
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        writeln!(w, "| {factor} | {bounds} | {} |", b.sdcm).unwrap();
    }
    writeln!(w).unwrap();
    writeln!(
        w,
        "> Verdicts are mean-difference significance between the trend groups \
         under the grouping assumption, not confounder-adjusted causation."
    )
    .unwrap();

    std::fs::write(path, out).map_err(io_error(path))
}

/// Write every requested format into `output_dir`, returning the paths.
pub fn emit_report(
    report: &AnalysisReport,
    formats: &std::collections::BTreeSet<Format>,
    output_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(output_dir).map_err(io_error(output_dir))?;
    let factor_order = &report.provenance.config.factors;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let path = output_dir.join("report.json");
        write_report_json(report, &path)?;
        written.push(path);
    }
    if formats.contains(&Format::Csv) {
        for (name, write) in [
            ("trends.csv", Box::new(|p: &Path| write_trends_csv(&report.trends, p))
                as Box<dyn Fn(&Path) -> Result<(), PipelineError>>),
            ("grouping.csv", Box::new(|p: &Path| {
                write_grouping_csv(&report.trends, &report.grouping, p)
            })),
            ("correlations.csv", Box::new(|p: &Path| {
                write_correlations_csv(&report.correlations, p)
            })),
            ("breaks.csv", Box::new(|p: &Path| {
                write_breaks_csv(&report.correlations, &report.breaks_per_factor, p)
            })),
            ("tests.csv", Box::new(|p: &Path| {
                write_tests_csv(&report.tests, factor_order, p)
            })),
        ] {
            let path = output_dir.join(name);
            write(&path)?;
            written.push(path);
        }
    }
    if formats.contains(&Format::Md) {
        let path = output_dir.join("report.md");
        write_report_md(report, &path)?;
        written.push(path);
    }
    Ok(written)
}
