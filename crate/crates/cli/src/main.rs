//! `selection-audit` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 a selection-rate ratio was flagged and `--fail-on-flag` is set.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use selection_audit::input::{load_table, RowSpec};
use selection_audit::render;
use selection_audit::{
    categorical_worst_case, fisher_exact_2x2, goodness_of_fit, pearson_chi_squared,
    rank_alternatives, raw_ratio, run_audit, symmetrized_ratio, two_proportion_z, AuditConfig,
    CandidateOutcome, ContingencyView, Error, GroupLabel, GroupOutcomeTable, OutcomePolarity,
    ReferenceDistribution, SignificanceResult,
};

#[derive(Debug, Parser)]
#[command(
    name = "selection-audit",
    version,
    about = "Selection-rate ratios and significance tests for group outcome data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Variant {
    Raw,
    Symmetrized,
    Categorical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Chi2,
    Fisher,
    Gof,
    Z,
}

/// Column options for row-level CSV input.
#[derive(Debug, clap::Args)]
struct RowArgs {
    /// Name of the protected-attribute column
    #[arg(long)]
    protected: Option<String>,
    /// Name of the outcome column
    #[arg(long)]
    outcome: Option<String>,
    /// Outcome value that counts as favorable
    #[arg(long)]
    favorable: Option<String>,
    /// Explicit unfavorable values; other values are then rejected
    #[arg(long, value_delimiter = ',')]
    unfavorable: Option<Vec<String>>,
    /// Swap favorable and unfavorable counts after ingestion
    #[arg(long)]
    flip: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one selection-rate ratio
    Metric {
        data: PathBuf,
        #[command(flatten)]
        rows: RowArgs,
        #[arg(long, value_enum)]
        variant: Variant,
        #[arg(long)]
        reference_group: Option<String>,
        #[arg(long)]
        comparison_group: Option<String>,
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run one significance test
    Test {
        data: PathBuf,
        #[command(flatten)]
        rows: RowArgs,
        #[arg(long, value_enum)]
        method: Method,
        /// Apply the continuity correction (2x2 chi-squared only)
        #[arg(long)]
        yates: bool,
        /// JSON object mapping group to population share
        #[arg(long)]
        reference_distribution: Option<PathBuf>,
        /// Groups to include, in order (default: all groups)
        #[arg(long, value_delimiter = ',')]
        groups: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run a full audit described by a JSON configuration
    Audit {
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        fail_on_flag: bool,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Rank candidate alternatives that reach a utility floor
    Compare {
        manifest: PathBuf,
        #[arg(long)]
        utility_floor: f64,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn data(message: impl ToString) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingRowSpec(_)
            | Error::InvalidPolarity(_)
            | Error::InvalidReferenceDistribution(_)
            | Error::InvalidTau(_)
            | Error::InvalidAlpha(_)
            | Error::IdenticalGroups(_)
            | Error::YatesRequiresTwoGroups(_)
            | Error::RequiresTwoGroups(_)
            | Error::ZeroDegreesOfFreedom
            | Error::MissingReferenceDistribution
            | Error::EmptyLabel => Failure::usage(e),
            _ => Failure::data(e),
        }
    }
}

struct Output {
    text: String,
    code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

fn row_spec(rows: &RowArgs) -> Result<RowSpec, Failure> {
    let polarity = match &rows.favorable {
        Some(f) => {
            Some(OutcomePolarity::new(f, rows.unfavorable.as_ref()).map_err(Failure::usage)?)
        }
        None if rows.unfavorable.is_some() => {
            return Err(Failure::usage("--unfavorable requires --favorable"))
        }
        None => None,
    };
    Ok(RowSpec {
        protected_field: rows.protected.clone(),
        outcome_field: rows.outcome.clone(),
        polarity,
    })
}

fn load(path: &Path, spec: &RowSpec, flip: bool) -> Result<GroupOutcomeTable, Failure> {
    let table = load_table(path, spec)?;
    Ok(if flip { table.flip_polarity() } else { table })
}

fn read_config(path: &Path) -> Result<AuditConfig, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    AuditConfig::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn config_row_spec(config: &AuditConfig) -> RowSpec {
    RowSpec {
        protected_field: config.protected_field.clone(),
        outcome_field: config.outcome_field.clone(),
        polarity: config.polarity.clone(),
    }
}

fn emit<T: Serialize>(
    value: &T,
    format: Format,
    markdown: impl FnOnce(&T) -> String,
) -> Result<String, Failure> {
    match format {
        Format::Json => render::to_json(value).map_err(Failure::data),
        Format::Markdown => Ok(markdown(value)),
    }
}

fn required<'a>(value: &'a Option<String>, flag: &str) -> Result<&'a str, Failure> {
    value
        .as_deref()
        .ok_or_else(|| Failure::usage(format!("{flag} is required for this variant")))
}

fn cmd_metric(
    data: &Path,
    rows: &RowArgs,
    variant: Variant,
    reference_group: &Option<String>,
    comparison_group: &Option<String>,
    tau: f64,
    format: Format,
) -> Result<Output, Failure> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidTau(tau).into());
    }
    let (comparison, reference) = match variant {
        Variant::Categorical => (None, None),
        _ => (
            Some(required(comparison_group, "--comparison-group")?),
            Some(required(reference_group, "--reference-group")?),
        ),
    };
    let table = load(data, &row_spec(rows)?, rows.flip)?;
    let assessment = match (variant, comparison, reference) {
        (Variant::Raw, Some(c), Some(r)) => raw_ratio(&table, c, r, tau)?,
        (Variant::Symmetrized, Some(c), Some(r)) => symmetrized_ratio(&table, c, r, tau)?,
        _ => categorical_worst_case(&table, tau)?,
    };
    emit(&assessment, format, render::assessment_markdown).map(Output::ok)
}

#[derive(Serialize, Deserialize)]
struct TestOutput {
    groups: Vec<GroupLabel>,
    result: SignificanceResult,
}

fn cmd_test(
    data: &Path,
    rows: &RowArgs,
    method: Method,
    yates: bool,
    reference_distribution: &Option<PathBuf>,
    groups: &Option<Vec<String>>,
    format: Format,
) -> Result<Output, Failure> {
    if yates && !matches!(method, Method::Chi2) {
        return Err(Failure::usage("--yates applies only to --method chi2"));
    }
    let distribution = match (method, reference_distribution) {
        (Method::Gof, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            Some(
                serde_json::from_str::<ReferenceDistribution>(&text)
                    .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
            )
        }
        (Method::Gof, None) => return Err(Error::MissingReferenceDistribution.into()),
        (_, Some(_)) => {
            return Err(Failure::usage(
                "--reference-distribution applies only to --method gof",
            ))
        }
        (_, None) => None,
    };
    let table = load(data, &row_spec(rows)?, rows.flip)?;
    let view = match groups {
        Some(order) => ContingencyView::with_order(&table, order)?,
        None => ContingencyView::from_table(&table)?,
    };
    let (groups, result) = match (method, distribution) {
        (Method::Chi2, _) => (view.groups().to_vec(), pearson_chi_squared(&view, yates)?),
        (Method::Fisher, _) => (view.groups().to_vec(), fisher_exact_2x2(&view)?),
        (Method::Z, _) => (view.groups().to_vec(), two_proportion_z(&view)?),
        (Method::Gof, Some(dist)) => {
            let observed: BTreeMap<GroupLabel, u64> = view
                .groups()
                .iter()
                .zip(view.cells())
                .filter(|(g, c)| c[0] > 0 || dist.get(g).is_some())
                .map(|(g, c)| (g.clone(), c[0]))
                .collect();
            let groups = dist.iter().map(|(g, _)| g.clone()).collect();
            (groups, goodness_of_fit(&observed, &dist)?)
        }
        (Method::Gof, None) => unreachable!(),
    };
    let out = TestOutput { groups, result };
    emit(&out, format, |o| {
        let names: Vec<&str> = o.groups.iter().map(GroupLabel::as_str).collect();
        render::test_markdown(&o.result, &names.join(" vs "))
    })
    .map(Output::ok)
}

fn cmd_audit(
    data: &Path,
    config_path: &Path,
    fail_on_flag: bool,
    tau: Option<f64>,
    alpha: Option<f64>,
    format: Format,
) -> Result<Output, Failure> {
    let mut config = read_config(config_path)?;
    if let Some(tau) = tau {
        config.tau = tau;
    }
    if let Some(alpha) = alpha {
        config.alpha = alpha;
    }
    config.fail_on_flag |= fail_on_flag;
    config.validate()?;
    let table = load(data, &config_row_spec(&config), false)?;
    let report = run_audit(&table, &config)?;
    let text = emit(&report, format, render::report_markdown)?;
    let code = if report.flagged() && config.fail_on_flag {
        3
    } else {
        0
    };
    Ok(Output { text, code })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    candidates: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    label: String,
    data: PathBuf,
    utility: f64,
}

#[derive(Serialize)]
struct CompareOutput {
    utility_floor: f64,
    threshold_tau: f64,
    ranking: Vec<selection_audit::RankedAlternative>,
}

fn cmd_compare(
    manifest_path: &Path,
    utility_floor: f64,
    config_path: &Path,
    tau: Option<f64>,
    format: Format,
) -> Result<Output, Failure> {
    let mut config = read_config(config_path)?;
    if let Some(tau) = tau {
        config.tau = tau;
    }
    config.validate()?;
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| Failure::data(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Failure::data(format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let spec = config_row_spec(&config);
    let candidates = manifest
        .candidates
        .into_iter()
        .map(|entry| {
            let path = base.join(&entry.data);
            Ok(CandidateOutcome {
                label: entry.label,
                table: load(&path, &spec, false)?,
                utility: entry.utility,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let ranking = rank_alternatives(&candidates, utility_floor, &config)?;
    let out = CompareOutput {
        utility_floor,
        threshold_tau: config.tau,
        ranking,
    };
    emit(&out, format, |o| render::ranking_markdown(&o.ranking)).map(Output::ok)
}

fn run(cli: Cli) -> Result<Output, Failure> {
    match cli.command {
        Command::Metric {
            data,
            rows,
            variant,
            reference_group,
            comparison_group,
            tau,
            format,
        } => cmd_metric(
            &data,
            &rows,
            variant,
            &reference_group,
            &comparison_group,
            tau,
            format,
        ),
        Command::Test {
            data,
            rows,
            method,
            yates,
            reference_distribution,
            groups,
            format,
        } => cmd_test(
            &data,
            &rows,
            method,
            yates,
            &reference_distribution,
            &groups,
            format,
        ),
        Command::Audit {
            data,
            config,
            fail_on_flag,
            tau,
            alpha,
            format,
        } => cmd_audit(&data, &config, fail_on_flag, tau, alpha, format),
        Command::Compare {
            manifest,
            utility_floor,
            config,
            tau,
            format,
        } => cmd_compare(&manifest, utility_floor, &config, tau, format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.text.as_bytes()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
