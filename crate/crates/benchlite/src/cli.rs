// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: `run`, `rank`, `compare`, `import` and `serve`.
//!
//! Failures print a single `error|<code>|<message>` line to standard error.
//! Exit status 2 means bad usage or a missing input file, 1 any other failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use benchlite_core::{
    compare, empirical_ranks, rank_targets, ContainerSpec, RankMethod, RankingError, WeightVector,
};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::files::{load_catalog, load_fixtures, load_inventory, load_rank_file, load_timings, read_text, LoadError};
use crate::orchestrator::{execute_run, plan_run, NoopObserver, PlanOptions, RunError, DEFAULT_SUITE_COMMAND};
use crate::report;
use crate::repository::{Repository, RepositoryError};
use crate::service::{self, ApiConfig, ExecutorConfig, StartupError};

const DEFAULT_REPOSITORY: &str = "benchlite.store";

#[derive(Debug, Parser)]
#[command(name = "benchlite", version, about = "Container-based cloud VM benchmarking and ranking")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Benchmark every inventory target inside a resource-limited container.
    Run(RunArgs),
    /// Rank the targets in the repository using group weights.
    Rank(RankArgs),
    /// Compare benchmark ranks with empirical ranks.
    Compare(CompareArgs),
    /// Import canonical whole-VM results as historic data.
    Import(ImportArgs),
    /// Start the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct StoreArgs {
    /// Repository file.
    #[arg(long, default_value = DEFAULT_REPOSITORY)]
    repo: PathBuf,
    /// Attribute catalog replacing the builtin one.
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExecutorKind {
    Mock,
    Docker,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Container memory limit in MB.
    #[arg(long)]
    mem: u32,
    /// Container CPU cores.
    #[arg(long)]
    cores: u32,
    #[arg(long)]
    inventory: PathBuf,
    #[command(flatten)]
    store: StoreArgs,
    #[arg(long, value_enum, default_value = "docker")]
    executor: ExecutorKind,
    /// Mock executor profile (`target|attribute_id|base_value|noise_fraction`).
    #[arg(long, required_if_eq("executor", "mock"))]
    profile: Option<PathBuf>,
    /// Mock executor seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Container image holding the benchmark suite.
    #[arg(long, default_value = "benchlite/suite:latest")]
    image: String,
    /// Container runtime CLI.
    #[arg(long, default_value = "docker")]
    runtime: String,
    #[arg(long, default_value = DEFAULT_SUITE_COMMAND)]
    suite_command: String,
    /// Only these targets (comma-separated).
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<String>>,
    #[arg(long, default_value_t = 4)]
    max_parallel: usize,
    /// Per-target timeout in seconds.
    #[arg(long, default_value_t = 1800)]
    timeout: u64,
    /// Fix the run timestamp (RFC 3339) for reproducible runs.
    #[arg(long)]
    timestamp: Option<DateTime<Utc>>,
    /// Fix the run-id nonce for reproducible runs.
    #[arg(long)]
    nonce: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Native,
    Hybrid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RankFormat {
    Table,
    Lines,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Four group weights in [0, 5]: memory/process, local communication,
    /// computation, storage.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    weights: Vec<f64>,
    #[arg(long, value_enum, default_value = "native")]
    method: MethodArg,
    /// Container memory size in MB whose results are ranked.
    #[arg(long)]
    mem: u32,
    #[command(flatten)]
    store: StoreArgs,
    #[arg(long, value_enum, default_value = "table")]
    format: RankFormat,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Rank file (`target|rank` or `target|score|rank`).
    #[arg(long, requires = "empirical", conflicts_with = "fixtures")]
    benchmark: Option<PathBuf>,
    /// Timing file (`target|seconds`).
    #[arg(long, requires = "benchmark")]
    empirical: Option<PathBuf>,
    /// Published rank tables (`table|case|mode|method|size|target|empirical|rank`).
    #[arg(long, required_unless_present = "benchmark")]
    fixtures: Option<PathBuf>,
    /// Emit CSV instead of a text report.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ImportRole {
    Historic,
}

#[derive(Debug, Args)]
struct ImportArgs {
    #[arg(long, value_enum, default_value = "historic")]
    role: ImportRole,
    /// Canonical-format file.
    file: PathBuf,
    #[command(flatten)]
    store: StoreArgs,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: "usage",
            message: message.into(),
            exit: 2,
        }
    }

    fn failure(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit: 1,
        }
    }

    /// The single machine-readable stderr line.
    pub fn line(&self) -> String {
        format!("error|{}|{}", self.code, self.message.replace(['\n', '\r'], " "))
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::NotFound(_) => Self {
                code: "file_not_found",
                message: e.to_string(),
                exit: 2,
            },
            LoadError::Io { .. } => Self::failure("io", e.to_string()),
            _ => Self {
                code: "invalid_input",
                message: e.to_string(),
                exit: 2,
            },
        }
    }
}

impl From<RepositoryError> for CliError {
    fn from(e: RepositoryError) -> Self {
        let code = match e {
            RepositoryError::Io { .. } => "io",
            RepositoryError::Corrupt { .. } => "corrupt_repository",
            RepositoryError::DuplicateRun(_) => "duplicate_run",
            RepositoryError::InvariantViolation(_) => "invariant_violation",
            RepositoryError::Format(_) => "invalid_input",
        };
        Self::failure(code, e.to_string())
    }
}

fn open_repository(store: &StoreArgs) -> Result<Repository, CliError> {
    let catalog = load_catalog(store.catalog.as_deref())?;
    Ok(Repository::open(&store.repo, catalog)?)
}

fn cmd_run(args: RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let inventory = load_inventory(&args.inventory)?;
    let container = ContainerSpec::new(args.mem, args.cores).map_err(|e| CliError::usage(e.to_string()))?;
    let mut repo = open_repository(&args.store)?;
    let executor = match args.executor {
        ExecutorKind::Mock => ExecutorConfig::Mock {
            profile: args.profile.clone().ok_or_else(|| CliError::usage("--profile is required with --executor mock"))?,
            seed: args.seed,
        },
        ExecutorKind::Docker => ExecutorConfig::Container {
            runtime: args.runtime.clone(),
            image: args.image.clone(),
        },
    }
    .build(repo.catalog())?;
    let defaults = PlanOptions::default();
    let options = PlanOptions {
        targets: args.targets,
        suite_command: args.suite_command,
        max_parallel_targets: args.max_parallel,
        timeout: Duration::from_secs(args.timeout),
        created_at: args.timestamp.unwrap_or(defaults.created_at),
        nonce: args.nonce.unwrap_or(defaults.nonce),
    };
    let plan = plan_run(&inventory, container, options).map_err(|e| CliError::usage(e.to_string()))?;
    match execute_run(&plan, executor.as_ref(), &mut repo, &NoopObserver) {
        Ok((result, ack)) => {
            let _ = write!(out, "{}", report::run_summary_text(&result));
            let _ = writeln!(out, "stored {} records in {}", ack.records, repo.path().display());
            Ok(())
        }
        Err(e) => {
            let result = match &e {
                RunError::AllTargetsFailed(r) => r,
                RunError::RepositoryWriteFailure { result, .. } => result,
            };
            let _ = write!(out, "{}", report::run_summary_text(result));
            let code = match e {
                RunError::AllTargetsFailed(_) => "all_targets_failed",
                RunError::RepositoryWriteFailure { .. } => "repository_write_failure",
            };
            Err(CliError::failure(code, e.to_string()))
        }
    }
}

fn cmd_rank(args: RankArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let w: [f64; 4] = args
        .weights
        .as_slice()
        .try_into()
        .map_err(|_| CliError::usage(format!("--weights needs 4 values, got {}", args.weights.len())))?;
    let weights = WeightVector::from_array(w).map_err(|e| CliError::usage(e.to_string()))?;
    if weights.is_all_zero() {
        return Err(CliError::usage(RankingError::AllZeroWeights.to_string()));
    }
    if !args.store.repo.exists() {
        return Err(LoadError::NotFound(args.store.repo.clone()).into());
    }
    let repo = open_repository(&args.store)?;
    let method = match args.method {
        MethodArg::Native => RankMethod::Native,
        MethodArg::Hybrid => RankMethod::Hybrid,
    };
    let table = rank_targets(&weights, repo.index(), method, args.mem, repo.catalog()).map_err(|e| {
        let code = match e {
            RankingError::InsufficientData(_) => "insufficient_data",
            _ => "incomplete_data",
        };
        CliError::failure(code, e.to_string())
    })?;
    let text = match args.format {
        RankFormat::Table => report::rank_table_text(&table),
        RankFormat::Lines => report::rank_table_lines(&table),
    };
    let _ = write!(out, "{text}");
    Ok(())
}

fn cmd_compare(args: CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let analysis_err = |e: benchlite_core::AnalysisError| CliError::failure("analysis", e.to_string());
    if let Some(path) = &args.fixtures {
        let mut rows = Vec::new();
        for fixture in load_fixtures(path)? {
            let cmp = compare(&fixture.benchmark, &fixture.empirical)
                .map_err(|e| CliError::failure("analysis", format!("{}: {e}", fixture.key())))?;
            rows.push((fixture, cmp));
        }
        let text = if args.csv {
            report::fixture_summary_csv(&rows)
        } else {
            report::fixture_summary_text(&rows)
        };
        let _ = write!(out, "{text}");
        return Ok(());
    }
    let (Some(bench), Some(emp)) = (&args.benchmark, &args.empirical) else {
        return Err(CliError::usage("--benchmark and --empirical are required"));
    };
    let benchmark = load_rank_file(bench, RankMethod::Native)?;
    let empirical = empirical_ranks(&load_timings(emp)?);
    let cmp = compare(&benchmark, &empirical).map_err(analysis_err)?;
    let text = if args.csv {
        report::comparison_csv(&cmp)
    } else {
        report::comparison_text(&cmp)
    };
    let _ = write!(out, "{text}");
    Ok(())
}

fn cmd_import(args: ImportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ImportRole::Historic = args.role;
    let text = read_text(&args.file)?;
    let mut repo = open_repository(&args.store)?;
    let acks = repo.import(&text)?;
    let records: usize = acks.iter().map(|a| a.records).sum();
    let _ = writeln!(
        out,
        "imported {} runs, {records} historic records into {}",
        acks.len(),
        repo.path().display()
    );
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<(), CliError> {
    let text = read_text(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let config = ApiConfig::parse(&text, base).map_err(|e| CliError {
        code: "invalid_config",
        message: format!("{}: {e}", args.config.display()),
        exit: 2,
    })?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::failure("io", e.to_string()))?;
    runtime.block_on(service::serve(config)).map_err(|e| match e {
        StartupError::Load(l) => l.into(),
        StartupError::Repository(r) => r.into(),
        StartupError::Config(c) => CliError {
            code: "invalid_config",
            message: c.to_string(),
            exit: 2,
        },
        e @ StartupError::Bind { .. } => CliError::failure("bind", e.to_string()),
    })
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Rank(a) => cmd_rank(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Import(a) => cmd_import(a, out),
        Command::Serve(a) => cmd_serve(a),
    }
}

/// Parses `args`, runs the command and reports failures on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", CliError::usage(first.trim_start_matches("error: ")).line());
            return ExitCode::from(2);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("{}", e.line());
            ExitCode::from(e.exit)
        }
    }
}
