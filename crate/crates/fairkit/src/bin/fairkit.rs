//! Command-line front end: audit a cohort, run mitigation experiments,
//! generate synthetic cohorts, and re-render figures from saved reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration error,
//! 3 when the run completed but some cells failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use fairkit::harness::config::ExperimentConfig;
use fairkit::harness::figures::render_figures;
use fairkit::harness::report::ExperimentReport;
use fairkit::harness::run_experiment;
use fairkit::synth::{generate_cohort, CohortSpec};

#[derive(Parser)]
#[command(name = "fairkit", version, about = "Fairness auditing and bias mitigation for binary tabular classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Report output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Emit a fixed timestamp and zero wall-clock time, for reproducible
    /// output bytes.
    #[arg(long)]
    fixed_clock: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the base model only; any configured mitigations are ignored.
    Audit(RunArgs),
    /// Run the base model and all configured mitigations.
    Mitigate(RunArgs),
    /// Generate a synthetic cohort from a cohort spec (TOML).
    Synth {
        /// Cohort spec (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for cohort.csv and schema.toml.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the cohort spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-render figures (and optionally CSV) from a saved report.
    Report {
        /// Saved report (JSON).
        #[arg(long)]
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Report output format.
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

fn write_report(report: &ExperimentReport, out: &PathBuf, format: Format) -> fairkit::Result<()> {
    std::fs::create_dir_all(out)?;
    if matches!(format, Format::Json | Format::Both) {
        report.write_json(out.join("report.json"))?;
    }
    if matches!(format, Format::Csv | Format::Both) {
        report.write_csv(out)?;
    }
    render_figures(report, out.join("figures"))?;
    Ok(())
}

fn run(args: &RunArgs, audit_only: bool) -> fairkit::Result<bool> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if audit_only {
        config.mitigation.clear();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let report = run_experiment(&config, args.fixed_clock)?;
    write_report(&report, &args.out, args.format)?;
    for cell in &report.cells {
        let status = if cell.is_ok() { "ok" } else { "FAILED" };
        eprintln!("{} / {}: {status}", cell.attribute, cell.method);
    }
    Ok(report.has_failures())
}

fn synth(config: &PathBuf, out: &PathBuf, seed: Option<u64>) -> fairkit::Result<()> {
    let text = std::fs::read_to_string(config)?;
    let mut spec: CohortSpec = toml::from_str(&text)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let cohort = generate_cohort(&spec)?;
    std::fs::create_dir_all(out)?;
    cohort.write_csv(out.join("cohort.csv"))?;
    let schema = toml::to_string_pretty(cohort.schema())
        .map_err(|e| fairkit::Error::InvalidSchema(e.to_string()))?;
    std::fs::write(out.join("schema.toml"), schema)?;
    Ok(())
}

fn rerender(input: &PathBuf, out: &PathBuf, format: Format) -> fairkit::Result<bool> {
    let report = ExperimentReport::load_json(input)?;
    write_report(&report, out, format)?;
    Ok(report.has_failures())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let outcome = match &cli.command {
        Command::Audit(args) => run(args, true),
        Command::Mitigate(args) => run(args, false),
        Command::Synth { config, out, seed } => synth(config, out, *seed).map(|()| false),
        Command::Report { input, out, format } => rerender(input, out, *format),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
