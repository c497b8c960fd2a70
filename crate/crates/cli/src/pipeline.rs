//! Staged pipeline execution: parse/validate the panel, trend and group the
//! target, correlate and bin the factors, then run the per-factor Hotelling
//! tests with the permutation oracle.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use heatpanel_core::assoc::{correlation_table, CorrelationTable};
use heatpanel_core::breaks::{jenks_breaks, BreaksClassification};
use heatpanel_core::panel::{validate, StudyPanel};
use heatpanel_core::stat_test::{
    hotelling_test_ridge, permutation_pvalue_ridge, GroupedSamples,
};
use heatpanel_core::trend::{
    classify_trends, median_threshold, ols_trend, Grouping, TrendEstimate,
};

use crate::config::{PipelineConfig, ThresholdPolicy};
use crate::report::{AnalysisReport, FactorTest, Provenance};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("[{stage}] {message}")]
    Validation { stage: &'static str, message: String },
    #[error("[{stage}] {message}")]
    Runtime { stage: &'static str, message: String },
    #[error("degenerate grouping: {0}")]
    DegenerateGrouping(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit code: 0 is success, 1 an input/validation problem,
    /// 2 a runtime or numerics failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::Validation { .. }
            | PipelineError::DegenerateGrouping(_) => 1,
            PipelineError::Runtime { .. } | PipelineError::Io { .. } => 2,
        }
    }

    fn validation(stage: &'static str, err: impl std::fmt::Display) -> Self {
        PipelineError::Validation {
            stage,
            message: err.to_string(),
        }
    }

    fn runtime(stage: &'static str, err: impl std::fmt::Display) -> Self {
        PipelineError::Runtime {
            stage,
            message: err.to_string(),
        }
    }
}

/// Read, parse, and validate the panel file. Validation warnings are logged;
/// error-severity issues abort.
pub fn load_panel(config: &PipelineConfig) -> Result<StudyPanel, PipelineError> {
    let text = std::fs::read_to_string(&config.panel_path).map_err(|e| {
        PipelineError::validation(
            "read-panel",
            format!("{}: {e}", config.panel_path.display()),
        )
    })?;
    let panel = StudyPanel::parse_csv(&text).map_err(|e| PipelineError::validation("parse", e))?;
    let report = validate(&panel);
    for issue in report.warnings() {
        log::warn!("{} {}: {}", issue.severity, issue.location, issue.message);
    }
    if !report.ok() {
        let first = report
            .issues
            .iter()
            .find(|i| i.severity == heatpanel_core::panel::Severity::Error)
            .expect("not ok implies an error issue");
        return Err(PipelineError::validation(
            "validate",
            format!("{} {}", first.location, first.message),
        ));
    }
    Ok(panel)
}

/// Fail early when the target or a factor is not a panel variable.
pub fn check_variables(panel: &StudyPanel, config: &PipelineConfig) -> Result<(), PipelineError> {
    if !panel.has_variable(&config.target) {
        return Err(PipelineError::Config(format!(
            "target variable {:?} not in panel (available: {})",
            config.target,
            panel.variables().join(", ")
        )));
    }
    for f in &config.factors {
        if !panel.has_variable(f) {
            return Err(PipelineError::Config(format!(
                "factor variable {f:?} not in panel (available: {})",
                panel.variables().join(", ")
            )));
        }
    }
    Ok(())
}

/// OLS trend of the target per region, in panel region order.
pub fn compute_trends(
    panel: &StudyPanel,
    target: &str,
) -> Result<Vec<TrendEstimate>, PipelineError> {
    let mut trends = Vec::with_capacity(panel.regions().len());
    for region in panel.regions() {
        let series = panel
            .extract_series(region, target)
            .map_err(|e| PipelineError::validation("trends", e))?;
        trends.push(ols_trend(&series).map_err(|e| {
            PipelineError::validation("trends", format!("region {region}: {e}"))
        })?);
    }
    Ok(trends)
}

pub fn resolve_threshold(
    trends: &[TrendEstimate],
    policy: &ThresholdPolicy,
) -> Result<f64, PipelineError> {
    match policy {
        ThresholdPolicy::MedianOfTrends => {
            median_threshold(trends).map_err(|e| PipelineError::validation("threshold", e))
        }
        ThresholdPolicy::Fixed(v) => Ok(*v),
    }
}

pub fn compute_grouping(trends: &[TrendEstimate], threshold: f64) -> Grouping {
    classify_trends(trends, threshold)
}

pub fn compute_correlations(
    panel: &StudyPanel,
    config: &PipelineConfig,
) -> Result<CorrelationTable, PipelineError> {
    correlation_table(panel, &config.target, &config.factors)
        .map_err(|e| PipelineError::validation("correlate", e))
}

/// Jenks breaks of each factor's correlation column, keyed by factor.
pub fn compute_breaks(
    table: &CorrelationTable,
    k: usize,
) -> Result<BTreeMap<String, BreaksClassification>, PipelineError> {
    let mut out = BTreeMap::new();
    for factor in &table.factors {
        let column = table.column(factor).expect("factor comes from the table");
        let classification = jenks_breaks(&column, k).map_err(|e| {
            PipelineError::validation("breaks", format!("factor {factor}: {e}"))
        })?;
        out.insert(factor.clone(), classification);
    }
    Ok(out)
}

/// Observation builder: one region's factor series is one p-vector, p equal
/// to the panel's year count. With `standardize`, each dimension is z-scored
/// across the pooled regions (sample standard deviation) before testing.
fn build_samples(
    panel: &StudyPanel,
    grouping: &Grouping,
    factor: &str,
    standardize: bool,
) -> Result<GroupedSamples, PipelineError> {
    let n1 = grouping.increasing().len();
    let n2 = grouping.non_increasing().len();
    if n1 < 2 || n2 < 2 {
        return Err(PipelineError::DegenerateGrouping(format!(
            "threshold {} left group sizes {n1} (increasing) and {n2} (non-increasing); \
             the test needs at least 2 regions per group",
            grouping.threshold()
        )));
    }
    let collect = |regions: &std::collections::BTreeSet<String>| -> Result<
        (Vec<Vec<f64>>, Vec<String>),
        PipelineError,
    > {
        let mut obs = Vec::with_capacity(regions.len());
        let mut labels = Vec::with_capacity(regions.len());
        for region in regions {
            let series = panel
                .extract_series(region, factor)
                .map_err(|e| PipelineError::validation("group-samples", e))?;
            obs.push(series.values().to_vec());
            labels.push(region.clone());
        }
        Ok((obs, labels))
    };
    let (mut g1, labels1) = collect(grouping.increasing())?;
    let (mut g2, labels2) = collect(grouping.non_increasing())?;

    if standardize {
        let p = panel.years().len();
        for j in 0..p {
            let n = (n1 + n2) as f64;
            let sum: f64 = g1.iter().chain(&g2).map(|o| o[j]).sum();
            let mean = sum / n;
            let ss: f64 = g1
                .iter()
                .chain(&g2)
                .map(|o| (o[j] - mean) * (o[j] - mean))
                .sum();
            let sd = (ss / (n - 1.0)).sqrt();
            if sd == 0.0 {
                return Err(PipelineError::validation(
                    "group-samples",
                    format!(
                        "cannot standardize factor {factor}: year {} is constant across regions",
                        panel.years()[j]
                    ),
                ));
            }
            for o in g1.iter_mut().chain(g2.iter_mut()) {
                o[j] = (o[j] - mean) / sd;
            }
        }
    }

    GroupedSamples::with_labels(g1, labels1, g2, labels2)
        .map_err(|e| PipelineError::validation("group-samples", e))
}

/// Hotelling test plus (optionally) the permutation oracle for every factor.
pub fn compute_tests(
    panel: &StudyPanel,
    grouping: &Grouping,
    config: &PipelineConfig,
) -> Result<BTreeMap<String, FactorTest>, PipelineError> {
    let mut out = BTreeMap::new();
    for factor in &config.factors {
        let samples = build_samples(panel, grouping, factor, config.standardize)?;
        let hotelling = hotelling_test_ridge(&samples, config.alpha, config.ridge_lambda)
            .map_err(|e| PipelineError::runtime("hotelling", format!("factor {factor}: {e}")))?;
        let permutation = if config.permutations > 0 {
            Some(
                permutation_pvalue_ridge(
                    &samples,
                    config.permutations,
                    config.seed,
                    config.ridge_lambda,
                )
                .map_err(|e| {
                    PipelineError::runtime("permutation", format!("factor {factor}: {e}"))
                })?,
            )
        } else {
            None
        };
        out.insert(
            factor.clone(),
            FactorTest {
                hotelling,
                ridge_lambda: config.ridge_lambda,
                permutation,
            },
        );
    }
    Ok(out)
}

/// The full pipeline, deterministic given the config.
pub fn run_pipeline(config: &PipelineConfig) -> Result<AnalysisReport, PipelineError> {
    let panel = load_panel(config)?;
    check_variables(&panel, config)?;
    let trends = compute_trends(&panel, &config.target)?;
    let threshold = resolve_threshold(&trends, &config.threshold)?;
    let grouping = compute_grouping(&trends, threshold);
    assert!(
        grouping.is_partition_of(panel.regions()),
        "grouping must partition the panel regions"
    );
    let correlations = compute_correlations(&panel, config)?;
    let breaks_per_factor = compute_breaks(&correlations, config.breaks_k)?;
    let tests = compute_tests(&panel, &grouping, config)?;

    let p = panel.years().len();
    let n1 = grouping.increasing().len();
    let n2 = grouping.non_increasing().len();
    for (factor, test) in &tests {
        assert_eq!(
            test.hotelling.df1, p,
            "factor {factor}: df1 must equal the observation dimension"
        );
        assert_eq!(
            test.hotelling.df2,
            n1 + n2 - 1 - p,
            "factor {factor}: df2 bookkeeping"
        );
    }

    Ok(AnalysisReport {
        provenance: Provenance::now(config),
        trends,
        threshold,
        grouping,
        correlations,
        breaks_per_factor,
        tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigBuilder;
    use std::io::Write;

    fn fixture_config(dir: &std::path::Path) -> PipelineConfig {
        ConfigBuilder {
            panel: Some(fixture_path()),
            target: Some("night_lst".into()),
            factors: Some(vec!["f1".into(), "f2".into()]),
            out: Some(dir.to_path_buf()),
            permutations: Some(499),
            ..ConfigBuilder::default()
        }
        .build(true)
        .unwrap()
    }

    fn fixture_path() -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/fixtures/separable.csv")
    }

    #[test]
    fn planted_effect_is_detected_and_noise_is_not() {
        let dir = tempfile::tempdir().unwrap();
        let config = fixture_config(dir.path());
        let report = run_pipeline(&config).unwrap();
        assert_eq!(report.grouping.increasing().len(), 6);
        assert_eq!(report.grouping.non_increasing().len(), 6);
        let f1 = &report.tests["f1"];
        let f2 = &report.tests["f2"];
        assert_eq!(
            f1.hotelling.verdict,
            heatpanel_core::stat_test::Verdict::Causal
        );
        assert_eq!(
            f2.hotelling.verdict,
            heatpanel_core::stat_test::Verdict::NotCausal
        );
        // C(12,6) = 924 is inside the exact-enumeration window
        let perm = f1.permutation.as_ref().unwrap();
        assert!(perm.exact);
        assert_eq!(perm.n_permutations, 924);
        // parametric and permutation tails agree
        assert!((perm.p_hat - f1.hotelling.p_value).abs() < 0.05);
        let perm2 = f2.permutation.as_ref().unwrap();
        assert!((perm2.p_hat - f2.hotelling.p_value).abs() < 0.1);
    }

    #[test]
    fn infinite_threshold_degenerates_before_testing() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = fixture_config(dir.path());
        config.threshold = ThresholdPolicy::Fixed(f64::INFINITY);
        let err = run_pipeline(&config).unwrap_err();
        assert!(matches!(err, PipelineError::DegenerateGrouping(_)));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn fixed_median_reproduces_median_grouping() {
        let dir = tempfile::tempdir().unwrap();
        let config = fixture_config(dir.path());
        let report = run_pipeline(&config).unwrap();
        let mut config2 = fixture_config(dir.path());
        config2.threshold = ThresholdPolicy::Fixed(report.threshold);
        let report2 = run_pipeline(&config2).unwrap();
        assert_eq!(report.grouping.increasing(), report2.grouping.increasing());
        assert_eq!(
            report.grouping.non_increasing(),
            report2.grouping.non_increasing()
        );
    }

    #[test]
    fn unknown_variables_fail_as_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = fixture_config(dir.path());
        config.target = "ghost".into();
        let err = run_pipeline(&config).unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn standardization_leaves_the_strict_statistic_unchanged() {
        // z-scoring dimensions is an affine map, and T² is affine invariant;
        // with ridge 0 both runs must agree to solver precision
        let dir = tempfile::tempdir().unwrap();
        let raw = fixture_config(dir.path());
        let mut std = fixture_config(dir.path());
        std.standardize = true;
        let a = run_pipeline(&raw).unwrap();
        let b = run_pipeline(&std).unwrap();
        for factor in ["f1", "f2"] {
            let ta = a.tests[factor].hotelling.t2;
            let tb = b.tests[factor].hotelling.t2;
            assert!(
                (ta - tb).abs() <= 1e-8 * (1.0 + ta),
                "{factor}: {ta} vs {tb}"
            );
        }
    }

    #[test]
    fn corrupt_panel_reports_parse_stage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut fh = std::fs::File::create(&path).unwrap();
        writeln!(fh, "region_id,year,variable,value").unwrap();
        writeln!(fh, "a,2003,lst,1.0").unwrap();
        writeln!(fh, "a,2003,lst,2.0").unwrap();
        drop(fh);
        let mut config = fixture_config(dir.path());
        config.panel_path = path;
        let err = run_pipeline(&config).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::Validation { stage: "parse", .. }
        ));
        assert_eq!(err.exit_code(), 1);
    }
}
