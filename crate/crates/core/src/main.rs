use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use daugavet_core::scenario::{parse_scenario, run, selftest, Report, RunOptions, Selection};
use daugavet_core::LabError;

#[derive(Parser)]
#[command(name = "daugavet", version, about = "Norm-equation checks for weighted composition operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of a scenario.
    Verify(Common),
    /// Run the refinement checks over a list of grid sizes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated grid sizes, replacing the scenario's list.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Run the counterexample constructors of a scenario.
    Counterexample(Common),
    /// Run the disk-algebra checks of a scenario.
    Disk(Common),
    /// Run the built-in invariant suite.
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the scenario tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Record wall time per check. Reports are then no longer reproducible.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn scenario_report(common: &Common, command: &str, selection: Selection, sizes: Option<Vec<usize>>) -> Result<Report, String> {
    let path = common.scenario.as_ref().ok_or_else(|| format!("`{command}` needs --scenario"))?;
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut scenario = parse_scenario(&text).map_err(|e| e.to_string())?;
    if let Some(tol) = common.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(LabError::Scenario { path: "--tol".into(), reason: format!("must be positive, got {tol}") }.to_string());
        }
        scenario.tolerance = tol;
    }
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    let opts = RunOptions { command: command.into(), selection, sizes, threads: common.threads, timing: common.timing };
    run(&scenario, &opts).map_err(|e| e.to_string())
}

fn emit(report: &Report, common: &Common) -> Result<(), String> {
    let bytes = match common.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match &common.out {
        Some(path) => fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, report) = match cli.command {
        Command::Verify(c) => {
            let r = scenario_report(&c, "verify", Selection::All, None);
            (c, r)
        }
        Command::Sweep { common, sizes } => {
            let r = scenario_report(&common, "sweep", Selection::Sweeps, sizes);
            (common, r)
        }
        Command::Counterexample(c) => {
            let r = scenario_report(&c, "counterexample", Selection::Counterexamples, None);
            (c, r)
        }
        Command::Disk(c) => {
            let r = scenario_report(&c, "disk", Selection::Disk, None);
            (c, r)
        }
        Command::Selftest(c) => {
            let r = selftest(c.seed.unwrap_or(0), c.threads, c.timing).map_err(|e| e.to_string());
            (c, r)
        }
    };
    let report = match report {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    if let Err(msg) = emit(&report, &common) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    if report.invariant_violated() {
        eprintln!("error: internal invariant violated; see the report");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
