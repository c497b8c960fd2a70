use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heatpanel::config::{ConfigBuilder, PipelineConfig, ThresholdSpec};
use heatpanel::pipeline::{self, PipelineError};
use heatpanel::report;

/// Regional heat-panel screening: per-region trends and grouping, factor
/// correlation tables, natural-breaks binning, and Hotelling T² group tests.
#[derive(Parser)]
#[command(name = "heatpanel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the panel file and report validation issues
    Validate(CommonArgs),
    /// Estimate per-region OLS trends of the target (writes trends.csv)
    Trends(CommonArgs),
    /// Split regions into trend groups (writes trends.csv, grouping.csv)
    Classify(CommonArgs),
    /// Correlate each factor with the target (writes correlations.csv)
    Correlate(CommonArgs),
    /// Jenks-bin the correlation columns (writes correlations.csv, breaks.csv)
    Breaks(CommonArgs),
    /// Run the per-factor group tests (writes tests.csv)
    Causal(CommonArgs),
    /// Full pipeline: trends, grouping, correlations, breaks, tests, report
    Run(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Panel CSV (region_id,year,variable,value)
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Target variable name
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated factor variable names
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<String>>,
    /// Trend threshold: "median" (default) or a fixed number
    #[arg(long)]
    threshold: Option<String>,
    /// Significance level for the causal verdict [default: 0.01]
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of natural-breaks classes [default: 5]
    #[arg(long = "breaks-k")]
    breaks_k: Option<usize>,
    /// Ridge stabilizer lambda for the pooled covariance [default: 0]
    #[arg(long = "ridge")]
    ridge: Option<f64>,
    /// Z-score each observation dimension before testing
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    standardize: Option<bool>,
    /// Monte Carlo permutation draws; 0 skips the oracle [default: 9999]
    #[arg(long = "perms")]
    perms: Option<usize>,
    /// Seed for the permutation sampler [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Comma-separated subset of json,csv,md [default: all]
    #[arg(long, value_delimiter = ',')]
    formats: Option<Vec<String>>,
}

impl CommonArgs {
    fn into_config(self, require_output: bool) -> Result<PipelineConfig, PipelineError> {
        let threshold = match &self.threshold {
            Some(raw) => Some(ThresholdSpec::parse(raw)?),
            None => None,
        };
        let from_flags = ConfigBuilder {
            panel: self.panel,
            target: self.target,
            factors: self.factors,
            threshold,
            alpha: self.alpha,
            breaks_k: self.breaks_k,
            ridge_lambda: self.ridge,
            standardize: self.standardize,
            permutations: self.perms,
            seed: self.seed,
            out: self.out,
            formats: self.formats,
        };
        let base = match &self.config {
            Some(path) => ConfigBuilder::from_file(path)?,
            None => ConfigBuilder::default(),
        };
        base.merged_with(from_flags).build(require_output)
    }

    /// The validate command needs only the panel path.
    fn panel_path(&self) -> Result<PathBuf, PipelineError> {
        if let Some(p) = &self.panel {
            return Ok(p.clone());
        }
        if let Some(path) = &self.config {
            if let Some(p) = ConfigBuilder::from_file(path)?.panel {
                return Ok(p);
            }
        }
        Err(PipelineError::Config("missing panel path (--panel)".into()))
    }
}

fn ensure_out_dir(config: &PipelineConfig) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&config.output_dir).map_err(|source| PipelineError::Io {
        path: config.output_dir.clone(),
        source,
    })
}

fn run_command(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Validate(args) => {
            let path = args.panel_path()?;
            let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::Validation {
                stage: "read-panel",
                message: format!("{}: {e}", path.display()),
            })?;
            let panel = heatpanel_core::panel::StudyPanel::parse_csv(&text).map_err(|e| {
                PipelineError::Validation {
                    stage: "parse",
                    message: e.to_string(),
                }
            })?;
            let report = heatpanel_core::panel::validate(&panel);
            for issue in &report.issues {
                log::warn!("{} {}: {}", issue.severity, issue.location, issue.message);
            }
            if !report.ok() {
                return Err(PipelineError::Validation {
                    stage: "validate",
                    message: format!(
                        "{} issue(s), see log (set HEATPANEL_LOG=warn)",
                        report.issues.len()
                    ),
                });
            }
            log::info!(
                "panel ok: {} regions x {} years x {} variables",
                panel.regions().len(),
                panel.years().len(),
                panel.variables().len()
            );
            Ok(())
        }
        Command::Trends(args) => {
            let config = args.into_config(true)?;
            let panel = pipeline::load_panel(&config)?;
            pipeline::check_variables(&panel, &config)?;
            let trends = pipeline::compute_trends(&panel, &config.target)?;
            ensure_out_dir(&config)?;
            report::write_trends_csv(&trends, &config.output_dir.join("trends.csv"))
        }
        Command::Classify(args) => {
            let config = args.into_config(true)?;
            let panel = pipeline::load_panel(&config)?;
            pipeline::check_variables(&panel, &config)?;
            let trends = pipeline::compute_trends(&panel, &config.target)?;
            let threshold = pipeline::resolve_threshold(&trends, &config.threshold)?;
            let grouping = pipeline::compute_grouping(&trends, threshold);
            ensure_out_dir(&config)?;
            report::write_trends_csv(&trends, &config.output_dir.join("trends.csv"))?;
            report::write_grouping_csv(&trends, &grouping, &config.output_dir.join("grouping.csv"))
        }
        Command::Correlate(args) => {
            let config = args.into_config(true)?;
            let panel = pipeline::load_panel(&config)?;
            pipeline::check_variables(&panel, &config)?;
            let table = pipeline::compute_correlations(&panel, &config)?;
            ensure_out_dir(&config)?;
            report::write_correlations_csv(&table, &config.output_dir.join("correlations.csv"))
        }
        Command::Breaks(args) => {
            let config = args.into_config(true)?;
            let panel = pipeline::load_panel(&config)?;
            pipeline::check_variables(&panel, &config)?;
            let table = pipeline::compute_correlations(&panel, &config)?;
            let breaks = pipeline::compute_breaks(&table, config.breaks_k)?;
            ensure_out_dir(&config)?;
            report::write_correlations_csv(&table, &config.output_dir.join("correlations.csv"))?;
            report::write_breaks_csv(&table, &breaks, &config.output_dir.join("breaks.csv"))
        }
        Command::Causal(args) => {
            let config = args.into_config(true)?;
            let panel = pipeline::load_panel(&config)?;
            pipeline::check_variables(&panel, &config)?;
            let trends = pipeline::compute_trends(&panel, &config.target)?;
            let threshold = pipeline::resolve_threshold(&trends, &config.threshold)?;
            let grouping = pipeline::compute_grouping(&trends, threshold);
            let tests = pipeline::compute_tests(&panel, &grouping, &config)?;
            ensure_out_dir(&config)?;
            report::write_tests_csv(&tests, &config.factors, &config.output_dir.join("tests.csv"))
        }
        Command::Run(args) => {
            let config = args.into_config(true)?;
            let analysis = pipeline::run_pipeline(&config)?;
            let written = report::emit_report(&analysis, &config.formats, &config.output_dir)?;
            for path in written {
                log::info!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("HEATPANEL_LOG", "warn"),
    )
    .init();
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
