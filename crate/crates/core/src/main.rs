use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use premia_core::report::{report_json, trace_csv};
use premia_core::scenario::{load_scenario, load_scenario_value, sweep, ScenarioError};

#[derive(Parser)]
#[command(
    name = "premia",
    version,
    about = "Premium additivity equilibrium simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the equilibrium iteration for one scenario.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Overrides the scenario round budget.
        #[arg(long)]
        max_rounds: Option<u64>,
        /// Where to write the per-round CSV trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Where to write the JSON report; printed to stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Validate a scenario without running it.
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run one scenario per value of a parameter, e.g. `insurers.0.loading`.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated JSON values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "sweep_out")]
        out_dir: PathBuf,
    },
}

const EXIT_CONVERGED: u8 = 0;
const EXIT_IO: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            tolerance,
            max_rounds,
            trace,
            report,
        } => run(&scenario, tolerance, max_rounds, trace, report),
        Command::Check { scenario } => check(&scenario),
        Command::Sweep {
            scenario,
            param,
            values,
            out_dir,
        } => run_sweep(&scenario, &param, &values, &out_dir),
    }
}

fn fail(err: &ScenarioError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn write(path: &Path, contents: &str) -> Result<(), ExitCode> {
    std::fs::write(path, contents).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })
}

fn run(
    path: &Path,
    tolerance: Option<f64>,
    max_rounds: Option<u64>,
    trace: Option<PathBuf>,
    report: Option<PathBuf>,
) -> ExitCode {
    let mut scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if let Some(tol) = tolerance {
        scenario.tolerance = tol;
    }
    if let Some(n) = max_rounds {
        scenario.max_rounds = n;
    }
    let outcome = match scenario.run() {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };

    if let Some(p) = trace {
        if let Err(code) = write(&p, &trace_csv(&outcome)) {
            return code;
        }
    }
    let json = report_json(&outcome);
    match report {
        Some(p) => {
            if let Err(code) = write(&p, &json) {
                return code;
            }
            let last = outcome.final_record();
            println!(
                "converged={} rounds={} P={} P1={} P2={} delta={:e}",
                outcome.converged,
                outcome.rounds_used,
                last.global,
                last.first,
                last.second,
                last.delta
            );
        }
        None => print!("{json}"),
    }
    ExitCode::from(if outcome.converged {
        EXIT_CONVERGED
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn check(path: &Path) -> ExitCode {
    match load_scenario(path).and_then(|s| s.resolve()) {
        Ok(resolved) => {
            let state = &resolved.state;
            println!(
                "ok: {} insurers, delta={:e}",
                state.insurers().len(),
                state.mispricing().unwrap_or(f64::NAN)
            );
            ExitCode::from(EXIT_CONVERGED)
        }
        Err(e) => fail(&e),
    }
}

fn run_sweep(path: &Path, param: &str, values: &[String], out_dir: &Path) -> ExitCode {
    let base = match load_scenario_value(path) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(EXIT_IO);
    }

    let mut worst = EXIT_CONVERGED;
    for (i, point) in sweep(&base, param, values).into_iter().enumerate() {
        match point.outcome {
            Ok(report) => {
                let stem = out_dir.join(format!("run_{i:03}"));
                if let Err(code) = write(&stem.with_extension("json"), &report_json(&report))
                    .and_then(|_| write(&stem.with_extension("csv"), &trace_csv(&report)))
                {
                    return code;
                }
                let last = report.final_record();
                println!(
                    "{param}={} converged={} rounds={} delta={:e}",
                    point.value, report.converged, report.rounds_used, last.delta
                );
                if !report.converged {
                    worst = worst.max(EXIT_NOT_CONVERGED);
                }
            }
            Err(e) => {
                eprintln!("{param}={}: error: {e}", point.value);
                worst = worst.max(e.exit_code() as u8);
            }
        }
    }
    ExitCode::from(worst)
}
