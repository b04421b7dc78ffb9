//! Command-line harness: run a scenario under one pointing policy, compare
//! policies on the same scenario and seed, or just validate a scenario file.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 environment error
//! (unwritable output directory and the like).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cease_core::sim::{
    compare_csv, load_scenario, run_policy, temporal_coverage, CoverageReport, Policy, Scenario,
    WorldTrace,
};

#[derive(Parser)]
#[command(name = "cease", version, about = "Active-sensing scenario harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy on a scenario and write its artifacts.
    Run(RunArgs),
    /// Run several policies on the same scenario and tabulate coverage.
    Compare(CompareArgs),
    /// Validate a scenario file against the schema.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Pointing policy: fixed, tcp, or cease.
    #[arg(long)]
    policy: String,
    /// Output directory for coverage.csv, cpe_trace.csv, axes.csv and the
    /// run manifest.
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also dump per-step safe-region depth fields (sr_depth.csv) and the
    /// planner trace.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated policies, at least two.
    #[arg(long, value_delimiter = ',')]
    policies: Vec<String>,
    /// Output directory for compare.csv and per-policy artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
}

/// Input/usage problems exit 2, environment problems exit 3.
enum CliError {
    Input(String),
    Environment(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Environment(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Environment(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Serialize)]
struct RunManifest<'a> {
    scenario_path: String,
    scenario_name: &'a str,
    policy: String,
    seed: u64,
    dt_s: f64,
    duration_s: f64,
    steps: usize,
    /// Scenario with every default materialized; a run is reproducible from
    /// this block alone.
    scenario: &'a cease_core::sim::ScenarioFile,
    wall_time_ms: u128,
    version: &'static str,
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut scenario = load_scenario(path).map_err(input_err)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
        scenario.file.seed = seed;
    }
    Ok(scenario)
}

fn parse_policy(name: &str) -> Result<Policy, CliError> {
    name.parse::<Policy>().map_err(input_err)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), contents)
        .map_err(|e| CliError::Environment(format!("writing {}/{name}: {e}", dir.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Environment(format!("creating {}: {e}", dir.display())))
}

fn execute_run(
    scenario: &Scenario,
    policy: Policy,
    out: &Path,
    scenario_path: &Path,
    trace_depths: bool,
) -> Result<(WorldTrace, CoverageReport), CliError> {
    ensure_dir(out)?;
    let started = Instant::now();
    let trace = run_policy(scenario, policy, trace_depths).map_err(input_err)?;
    let coverage = temporal_coverage(&trace);
    write_file(out, "coverage.csv", &trace.coverage_csv(&coverage))?;
    write_file(out, "cpe_trace.csv", &trace.cpe_csv())?;
    write_file(out, "axes.csv", &trace.axes_csv())?;
    if let Some(depths) = trace.sr_depth_csv() {
        write_file(out, "sr_depth.csv", &depths)?;
    }
    if let Some(plans) = trace.planner_trace_jsonl() {
        write_file(out, "planner_trace.jsonl", &plans)?;
    }
    let manifest = RunManifest {
        scenario_path: scenario_path.display().to_string(),
        scenario_name: &scenario.name,
        policy: policy.to_string(),
        seed: scenario.seed,
        dt_s: scenario.dt,
        duration_s: scenario.duration,
        steps: scenario.steps(),
        scenario: &scenario.file,
        wall_time_ms: started.elapsed().as_millis(),
        version: env!("CARGO_PKG_VERSION"),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Input(format!("serializing manifest: {e}")))?;
    write_file(out, "manifest.json", &manifest_json)?;
    Ok((trace, coverage))
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let policy = parse_policy(&args.policy)?;
    let scenario = load(&args.scenario, args.seed)?;
    let (_, coverage) = execute_run(&scenario, policy, &args.out, &args.scenario, args.trace)?;
    println!(
        "{} on {}: Avg coverage {:.3} ({} steps)",
        policy,
        scenario.name,
        coverage.avg,
        scenario.steps()
    );
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    if args.policies.len() < 2 {
        return Err(CliError::Input(format!(
            "compare needs at least 2 policies, got {}",
            args.policies.len()
        )));
    }
    let policies = args
        .policies
        .iter()
        .map(|p| parse_policy(p))
        .collect::<Result<Vec<_>, _>>()?;
    let scenario = load(&args.scenario, args.seed)?;
    ensure_dir(&args.out)?;

    let mut rows = Vec::with_capacity(policies.len());
    for policy in policies {
        let subdir = args.out.join(policy.to_string());
        let (_, coverage) = execute_run(&scenario, policy, &subdir, &args.scenario, false)?;
        rows.push((policy, coverage));
    }
    let table = compare_csv(&rows);
    write_file(&args.out, "compare.csv", &table)?;

    println!("scenario: {} (seed {})", scenario.name, scenario.seed);
    println!("{:<8} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}", "policy", "Body", "RA", "RH", "LA", "LH", "Avg");
    for (policy, report) in &rows {
        print!("{:<8}", policy.to_string());
        for p in report.parts {
            print!(" {p:>6.3}");
        }
        println!(" {:>6.3}", report.avg);
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario, None)?;
    println!(
        "{}: ok ({} cameras, {} humanoids, {} steps)",
        args.scenario.display(),
        scenario.cameras.len(),
        scenario.humanoids.len(),
        scenario.steps()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
