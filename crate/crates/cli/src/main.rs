use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fairpath::qp::SolverOptions;
use fairpath::{
    chi_square_utility, estimate_cpts, load_csv, pse_dd, pse_dr, read_model_file, save_csv,
    write_model_file, CausalModel, DiscoveryReport, DiscriminationQuery, Outcome, RemovalMode,
    RepairOptions, ReportDocument, SamplingMode, DEFAULT_TAU,
};

const SOLVER_ITERS_ENV: &str = "FAIRPATH_SOLVER_ITERS";

#[derive(Parser)]
#[command(name = "fairpath", version, about = "Discover and remove direct and indirect discrimination with path-specific effects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure direct and indirect effects and judge them against tau.
    Discover(DiscoverArgs),
    /// Repair the decision's CPT and generate a non-discriminatory dataset.
    Remove(RemoveArgs),
    /// Label test data with a model's argmax predictor and audit the labels.
    Audit(AuditArgs),
    /// Chi-square distance between an original and a modified dataset.
    Metrics(MetricsArgs),
    /// Sample a dataset from a fully specified model.
    Sample(SampleArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model file: variables, arcs and optionally CPTs.
    #[arg(long)]
    graph: PathBuf,
    /// CSV to estimate CPTs from; required when the model file has no CPTs.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Additive smoothing used when estimating CPTs from data.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Args)]
struct QueryArgs {
    /// Protected attribute as NAME:NEG,POS.
    #[arg(long)]
    protected: String,
    /// Decision attribute as NAME:NEG,POS.
    #[arg(long)]
    decision: String,
    /// Comma-separated redlining attributes.
    #[arg(long, value_delimiter = ',', required = true)]
    redlining: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    query: QueryArgs,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Both,
    Direct,
    Indirect,
}

impl From<ModeArg> for RemovalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Both => RemovalMode::Both,
            ModeArg::Direct => RemovalMode::DirectOnly,
            ModeArg::Indirect => RemovalMode::IndirectOnly,
        }
    }
}

#[derive(Args)]
struct RemoveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Number of tuples to generate; defaults to the size of --data, or 1000.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit n·P(v) rows per joint state instead of sampling.
    #[arg(long)]
    expected_counts: bool,
    #[arg(long)]
    out_model: Option<PathBuf>,
    #[arg(long)]
    out_data: Option<PathBuf>,
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Repaired model file with CPTs.
    #[arg(long)]
    graph: PathBuf,
    /// Test CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Model file whose variables define the CSV schema.
    #[arg(long)]
    graph: PathBuf,
    /// Original dataset.
    #[arg(long)]
    data: PathBuf,
    /// Modified dataset.
    #[arg(long)]
    modified: PathBuf,
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    expected_counts: bool,
    #[arg(long)]
    out_data: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<fairpath::Error>() {
                Some(fairpath::Error::SolverFailure { .. }) => ExitCode::from(4),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Discover(args) => discover(args),
        Command::Remove(args) => remove(args),
        Command::Audit(args) => audit(args),
        Command::Metrics(args) => metrics(args),
        Command::Sample(args) => sample(args),
    }
}

fn exit_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::NoDiscrimination => 0,
        Outcome::Discrimination => 2,
        Outcome::Indeterminate => 3,
    }
}

/// The model and, when estimated from data, the number of input rows.
fn load_model(args: &ModelArgs) -> anyhow::Result<(CausalModel, Option<usize>)> {
    let spec = read_model_file(&args.graph)?;
    match &args.data {
        Some(data) => {
            let dataset = load_csv(data, spec.graph.variables())?;
            Ok((estimate_cpts(&dataset, &spec.graph, args.alpha)?, Some(dataset.len())))
        }
        None if spec.has_cpts() => Ok((spec.into_model()?, None)),
        None => bail!("{} declares no CPTs; pass --data to estimate them", args.graph.display()),
    }
}

fn parse_attribute(raw: &str) -> anyhow::Result<(&str, &str, &str)> {
    let (name, labels) = raw
        .split_once(':')
        .with_context(|| format!("expected NAME:NEG,POS, got `{raw}`"))?;
    let (neg, pos) = labels
        .split_once(',')
        .with_context(|| format!("expected NAME:NEG,POS, got `{raw}`"))?;
    Ok((name, neg, pos))
}

fn resolve_query(model: &CausalModel, args: &QueryArgs) -> anyhow::Result<DiscriminationQuery> {
    let redlining: Vec<&str> = args.redlining.iter().map(String::as_str).collect();
    Ok(DiscriminationQuery::resolve(
        model,
        parse_attribute(&args.protected)?,
        parse_attribute(&args.decision)?,
        &redlining,
    )?)
}

fn solver_options() -> anyhow::Result<SolverOptions> {
    let mut options = SolverOptions::default();
    if let Ok(raw) = std::env::var(SOLVER_ITERS_ENV) {
        options.max_iterations = raw
            .trim()
            .parse()
            .with_context(|| format!("{SOLVER_ITERS_ENV} must be a non-negative integer, got `{raw}`"))?;
    }
    Ok(options)
}

fn emit(report: &ReportDocument, path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(path) => std::fs::write(path, report.to_string())
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn discovery_document(model: &CausalModel, report: &DiscoveryReport) -> ReportDocument {
    let mut doc = report.to_document(model.graph());
    doc.set("outcome", outcome_name(report.outcome()));
    doc
}

fn outcome_name(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::NoDiscrimination => "no_discrimination",
        Outcome::Discrimination => "discrimination",
        Outcome::Indeterminate => "indeterminate",
    }
}

fn discover(args: DiscoverArgs) -> anyhow::Result<u8> {
    let (model, _) = load_model(&args.model)?;
    let query = resolve_query(&model, &args.query)?;
    let report = pse_dd(&model, &query, args.query.tau)?;
    emit(&discovery_document(&model, &report), args.out_report.as_deref())?;
    Ok(exit_code(report.outcome()))
}

fn remove(args: RemoveArgs) -> anyhow::Result<u8> {
    let (model, input_rows) = load_model(&args.model)?;
    let query = resolve_query(&model, &args.query)?;
    let tau = args.query.tau;
    let before = pse_dd(&model, &query, tau)?;
    let options = RepairOptions {
        mode: args.mode.into(),
        solver: solver_options()?,
        rows: args.n.or(input_rows).unwrap_or(1000),
        seed: args.seed,
        sampling: if args.expected_counts {
            SamplingMode::ExpectedCounts
        } else {
            SamplingMode::Ancestral
        },
    };
    let (result, data) = pse_dr(&model, &query, tau, &options)?;
    let repaired = &result.repaired_model;

    let mut doc = ReportDocument::new();
    doc.extend_prefixed("pre_", &discovery_document(&model, &before));
    doc.set("objective_value", result.objective_value);
    let arcs: Vec<String> = result
        .removed_arcs
        .iter()
        .map(|&(q, e)| format!("{}->{}", model.graph().name(q), model.graph().name(e)))
        .collect();
    doc.set("removed_arcs", arcs.join(","));
    doc.set("solver_iterations", result.iterations);
    doc.extend_prefixed("post_", &discovery_document(repaired, &result.post_effects));
    doc.set("rows", data.len());
    doc.set("seed", args.seed);

    if let Some(path) = &args.out_model {
        write_model_file(path, repaired)?;
    }
    if let Some(path) = &args.out_data {
        save_csv(path, &data)?;
    }
    emit(&doc, args.out_report.as_deref())?;
    Ok(exit_code(result.post_effects.outcome()))
}

fn audit(args: AuditArgs) -> anyhow::Result<u8> {
    let spec = read_model_file(&args.graph)?;
    if !spec.has_cpts() {
        bail!("{} declares no CPTs; audit needs a fully specified model", args.graph.display());
    }
    let model = spec.into_model()?;
    let query = resolve_query(&model, &args.query)?;
    let test = load_csv(&args.data, model.graph().variables())?;
    let report = fairpath::predict_and_audit(&model, &query, &test, args.query.tau, args.alpha)?;
    let mut doc = discovery_document(&model, &report);
    doc.set("test_rows", test.len());
    emit(&doc, args.out_report.as_deref())?;
    Ok(exit_code(report.outcome()))
}

fn metrics(args: MetricsArgs) -> anyhow::Result<u8> {
    let spec = read_model_file(&args.graph)?;
    let original = load_csv(&args.data, spec.graph.variables())?;
    let modified = load_csv(&args.modified, spec.graph.variables())?;
    let mut doc = ReportDocument::new();
    doc.set("chi_square", chi_square_utility(&original, &modified)?);
    doc.set("original_rows", original.len());
    doc.set("modified_rows", modified.len());
    emit(&doc, args.out_report.as_deref())?;
    Ok(0)
}

fn sample(args: SampleArgs) -> anyhow::Result<u8> {
    let spec = read_model_file(&args.graph)?;
    if !spec.has_cpts() {
        bail!("{} declares no CPTs", args.graph.display());
    }
    let model = spec.into_model()?;
    let mode = if args.expected_counts {
        SamplingMode::ExpectedCounts
    } else {
        SamplingMode::Ancestral
    };
    save_csv(&args.out_data, &fairpath::sampling::generate(&model, args.n, args.seed, mode))?;
    Ok(0)
}
