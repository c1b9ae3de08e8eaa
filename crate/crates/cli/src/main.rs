//! `cartpush`: run scenarios and benchmark suites, export logs.
//!
//! Exit status: 0 on completion (failed scenarios are reported, not fatal),
//! 2 on invalid configuration or arguments, 3 on I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use cartpush::bench::{
    aggregate_by_method, expand_scenarios, read_csv, run_suite, summary_csv, summary_table, write_csv, LoadError,
    LogRow, MetricsReport, ScenarioSpec, Suite, SuiteOptions, SummaryRow,
};
use cartpush::controller::ControllerKind;
use cartpush::planner::PlannerVariant;

#[derive(Debug, Parser)]
#[command(
    name = "cartpush",
    version,
    about = "Cart pushing with a dual-arm mobile robot: planners, controllers and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run scenario files and write logs, a report and a summary.
    Simulate(SimulateArgs),
    /// Generate and run a benchmark suite and print a comparison table.
    Bench(BenchArgs),
    /// Re-emit trajectory logs in the canonical CSV schema.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct RunOptions {
    /// Output directory; nothing is written outside it.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for every random element (suite generation, trajectory noise,
    /// disturbance noise).
    #[arg(long)]
    seed: Option<u64>,
    /// Scenarios run in parallel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    /// Planner variants (comma separated): nmpc, wb, tt, lf.
    #[arg(long, value_delimiter = ',')]
    planner: Vec<PlannerVariant>,
    /// Controller variants (comma separated): pd, pdf, dpd, mrac, gob.
    #[arg(long, value_delimiter = ',')]
    controller: Vec<ControllerKind>,
    /// Payload masses in kg (comma separated).
    #[arg(long, value_delimiter = ',')]
    payload: Vec<f64>,
    /// Simulated time per scenario, s.
    #[arg(long)]
    duration: Option<f64>,
}

impl RunOptions {
    fn suite_options(&self) -> SuiteOptions {
        fn some<T: Clone>(v: &[T]) -> Option<Vec<T>> {
            (!v.is_empty()).then(|| v.to_vec())
        }
        SuiteOptions {
            seed: self.seed.unwrap_or(0),
            planners: some(&self.planner),
            controllers: some(&self.controller),
            payloads: some(&self.payload),
            duration: self.duration,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario file (TOML) or directory of scenario files; repeatable.
    #[arg(long, required = true)]
    scenario: Vec<PathBuf>,
    #[command(flatten)]
    run: RunOptions,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Suite: static-poses, trajectories, control-payload, impact, arm-failure.
    #[arg(long)]
    suite: String,
    #[command(flatten)]
    run: RunOptions,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Directory holding `*.csv` trajectory logs.
    #[arg(long)]
    logs: PathBuf,
    /// Output directory; defaults to rewriting the logs in place.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(_) => Failure::Io(e.to_string()),
            LoadError::Parse(_) => Failure::Config(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct RunReport<'a> {
    command: &'a str,
    suite: Option<&'a str>,
    seed: Option<u64>,
    summary: &'a [SummaryRow],
    reports: &'a [MetricsReport],
}

fn init_logging() {
    let level = std::env::var("CARTPUSH_LOG_LEVEL").unwrap_or_else(|_| "warn".into());
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .init();
}

fn scenario_files(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io_err(path))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

fn check_unique(specs: &[ScenarioSpec]) -> Result<(), Failure> {
    let mut names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    match names.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(Failure::Config(format!("two scenarios are named `{}`", w[0]))),
        None => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn write_log(path: &Path, rows: &[LogRow]) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Runs the scenarios and writes `logs/`, `report.json`, `summary.csv` and
/// `summary.txt` under `out`.
fn run_and_write(
    command: &str,
    suite: Option<&str>,
    specs: &[ScenarioSpec],
    run: &RunOptions,
    save_specs: bool,
) -> Result<(), Failure> {
    check_unique(specs)?;
    for s in specs {
        s.validate()
            .map_err(|e| Failure::Config(format!("scenario `{}`: {e}", s.name)))?;
    }
    let logs = run.out.join("logs");
    fs::create_dir_all(&logs).map_err(io_err(&logs))?;
    if save_specs {
        let dir = run.out.join("scenarios");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for s in specs {
            let text = s.to_toml_string().map_err(|e| Failure::Config(e.to_string()))?;
            write_file(&dir.join(format!("{}.toml", s.name)), text.as_bytes())?;
        }
    }
    info!("running {} scenarios on {} workers", specs.len(), run.jobs);
    let results = run_suite(specs, run.jobs as usize);
    let mut reports = Vec::with_capacity(results.len());
    for (rows, report) in results {
        if let Some(e) = &report.flags.error {
            warn!("{}: {e}", report.name);
        }
        info!("{}: success {}", report.name, report.success);
        write_log(&logs.join(format!("{}.csv", report.name)), &rows)?;
        reports.push(report);
    }
    let summary = aggregate_by_method(&reports);
    let json = serde_json::to_string_pretty(&RunReport {
        command,
        suite,
        seed: run.seed,
        summary: &summary,
        reports: &reports,
    })
    .map_err(|e| Failure::Io(e.to_string()))?;
    write_file(&run.out.join("report.json"), json.as_bytes())?;
    write_file(&run.out.join("summary.csv"), summary_csv(&summary).as_bytes())?;
    let table = summary_table(&summary);
    write_file(&run.out.join("summary.txt"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut specs = Vec::new();
    for path in &args.scenario {
        for file in scenario_files(path)? {
            let spec = ScenarioSpec::load(&file)?;
            specs.push(match args.run.seed {
                Some(seed) => spec.with_seed(seed),
                None => spec,
            });
        }
    }
    if specs.is_empty() {
        return Err(Failure::Config("no scenario files found".into()));
    }
    let specs = expand_scenarios(specs, &args.run.suite_options());
    run_and_write("simulate", None, &specs, &args.run, false)
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let suite: Suite = args.suite.parse().map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        Failure::Config(format!(
            "unknown suite `{}`; expected one of {}",
            args.suite,
            names.join(", ")
        ))
    })?;
    let specs = suite.build(&args.run.suite_options());
    run_and_write("bench", Some(suite.name()), &specs, &args.run, true)
}

fn export(args: &ExportArgs) -> Result<(), Failure> {
    let Format::Csv = args.format;
    let out = args.out.as_ref().unwrap_or(&args.logs);
    let mut files: Vec<PathBuf> = fs::read_dir(&args.logs)
        .map_err(io_err(&args.logs))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        warn!("no logs in {}", args.logs.display());
        return Ok(());
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    for file in files {
        let input = fs::File::open(&file).map_err(io_err(&file))?;
        let rows = read_csv(std::io::BufReader::new(input))
            .map_err(|e| Failure::Config(format!("{}: {e}", file.display())))?;
        let name = file.file_name().unwrap_or_default();
        write_log(&out.join(name), &rows)?;
        info!("exported {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
        Command::Export(a) => export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(m) | Failure::Io(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
