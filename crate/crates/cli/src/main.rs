//! `schwarz-contact run|sweep|compare|verify`.
//!
//! Exit codes: 0 ok, 2 config error, 3 solver error, 4 acceptance failure.
//! Errors go to stderr as `error: <Name>: <message>`.

use clap::{Parser, Subcommand};
use schwarz_contact::acceptance::run_acceptance;
use schwarz_contact::config::{parse_config, ExperimentConfig};
use schwarz_contact::experiment::{run_experiment, run_many, summary_csv, summary_rows, summary_text, RunReport, SummaryRow};
use schwarz_contact::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "schwarz-contact", version, about = "Two-rod impact: Schwarz contact vs penalty and Lagrange baselines")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Directory for CSV and summary output.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Accepted for compatibility; nothing here is random.
    #[arg(long, global = true)]
    seedless: bool,
    /// Do not print the summary table.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// One run; any [sweep] block is ignored.
    Run { config: PathBuf },
    /// Every entry of the config's [sweep] block.
    Sweep { config: PathBuf },
    /// One run per config file, summarized together in argument order.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Acceptance criteria 1 to 10.
    Verify,
}

enum Failure {
    Config(Error),
    Solver(Error),
    Acceptance(Vec<usize>),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Acceptance(_) => 4,
        }
    }
}

fn solver(e: Error) -> Failure {
    if e.is_config_error() {
        Failure::Config(e)
    } else {
        Failure::Solver(e)
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(Error::Io(format!("{}: {e}", path.display()))))?;
    parse_config(&text).map_err(|e| match e {
        Error::Parse { line, message } => Failure::Config(Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        }),
        other => Failure::Config(other),
    })
}

fn write_all(cli: &Cli, reports: &[RunReport], rows: &[SummaryRow]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Solver(Error::from(e));
    for r in reports {
        r.write_csv(&cli.out_dir).map_err(Failure::Solver)?;
    }
    let text = summary_text(rows);
    std::fs::write(cli.out_dir.join("summary.txt"), &text).map_err(io)?;
    std::fs::write(cli.out_dir.join("summary.csv"), summary_csv(rows).map_err(Failure::Solver)?).map_err(io)?;
    if !cli.quiet {
        print!("{text}");
    }
    Ok(())
}

fn collect(results: Vec<schwarz_contact::Result<RunReport>>) -> Result<Vec<RunReport>, Failure> {
    results.into_iter().map(|r| r.map_err(solver)).collect()
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.verb {
        Verb::Run { config } => {
            let cfg = load(config)?;
            let r = run_experiment(&cfg).map_err(solver)?;
            let rows = vec![SummaryRow::from_report(&r)];
            write_all(cli, std::slice::from_ref(&r), &rows)
        }
        Verb::Sweep { config } => {
            let cfg = load(config)?;
            if cfg.sweep.is_none() {
                return Err(Failure::Config(Error::Validation("sweep needs a [sweep] block".into())));
            }
            let reports = collect(run_many(&cfg.expand().map_err(Failure::Config)?))?;
            write_all(cli, &reports, &summary_rows(&cfg, &reports))
        }
        Verb::Compare { configs } => {
            let cfgs = configs.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
            let reports = collect(run_many(&cfgs))?;
            let rows: Vec<SummaryRow> = reports.iter().map(SummaryRow::from_report).collect();
            write_all(cli, &reports, &rows)
        }
        Verb::Verify => {
            let results = run_acceptance();
            for c in &results {
                println!("{}", c.line());
            }
            let failed: Vec<usize> = results.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Acceptance(failed))
            }
        }
    }
}

/// The diagnostics line: `error: <Name>: <message>`.
fn diagnostic(f: &Failure) -> String {
    match f {
        Failure::Config(e) | Failure::Solver(e) => format!("error: {}: {e}", e.name()),
        Failure::Acceptance(ids) => format!("error: AcceptanceFailure: criteria {ids:?} failed"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", diagnostic(&f));
            ExitCode::from(f.code())
        }
    }
}
