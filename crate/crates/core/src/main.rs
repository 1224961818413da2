use std::path::PathBuf;
use std::process::ExitCode;

use cdsurf::cli::{self, RunConfig, EXIT_USAGE};
use cdsurf::experiments::DEFAULT_SEED;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cdsurf", version, about = "Numerical experiments on constant-distance surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (or `all`) and write its CSV/SVG artifacts.
    Run {
        #[arg(long, default_value = "all")]
        experiment: String,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Distance parameter for round-cylinder and capped-cylinder.
        #[arg(long, allow_negative_numbers = true)]
        r: Option<f64>,
        #[arg(long)]
        plot: bool,
        /// Replace a row's absolute tolerance, as `label=value`; repeatable.
        #[arg(long = "tol", value_parser = cli::parse_tol_override)]
        tol: Vec<(String, f64)>,
    },
    /// List the registered experiments.
    List,
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match args.command {
        Command::List => {
            for name in cdsurf::experiments::EXPERIMENTS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { experiment, out, seed, r, plot, tol } => {
            let config = RunConfig { experiment, out_dir: out, seed, r, plot, tol_overrides: tol };
            match cli::run(&config) {
                Ok(outcome) => {
                    for report in &outcome.reports {
                        let failed = report.failures().count();
                        let verdict = if failed == 0 { "PASS" } else { "FAIL" };
                        println!("{verdict} {} ({} rows, {failed} failing)", report.name, report.rows.len());
                        for row in report.failures() {
                            println!(
                                "  {}: measured {} target {} tolerance {}",
                                row.label,
                                cli::format_real(row.measured),
                                cli::format_real(row.target),
                                cli::format_real(row.tolerance)
                            );
                        }
                    }
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    let code = e.exit_code();
                    ExitCode::from(if code == 0 { EXIT_USAGE as u8 } else { code as u8 })
                }
            }
        }
    }
}
