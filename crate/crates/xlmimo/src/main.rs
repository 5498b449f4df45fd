use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xlmimo::commands::{self, BenchArgs, EstimateArgs, MapArgs, Method, SynthArgs};
use xlmimo::CliError;
use xlmimo_core::spectral::View;
use xlmimo_core::Model;

/// XL-MIMO FMCW radar simulator and target estimators.
///
/// Any scenario key can be overridden from the environment as
/// XLMIMO_<SECTION>_<KEY>, or XLMIMO_TARGET<k>_<KEY> for the k-th target
/// (1-based).
#[derive(Parser, Debug)]
#[command(name = "xlmimo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize an IF matrix as `m,n,re,im` CSV.
    Synth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_model)]
        model: Option<Model>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a magnitude map of a synthesized or stored IF matrix.
    Map {
        #[arg(long, required_unless_present = "matrix")]
        scenario: Option<PathBuf>,
        /// Read the IF matrix from this CSV instead of synthesizing.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_parser = parse_view, default_value = "range_angle")]
        view: View,
        #[arg(long, value_parser = parse_model)]
        model: Option<Model>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate target signatures; the report goes to `<out>.report.json`.
    Estimate {
        #[arg(long)]
        scenario: PathBuf,
        /// Estimate from this IF matrix CSV instead of synthesizing.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value = "decoupled")]
        method: Method,
        #[arg(long, value_parser = parse_model)]
        model: Option<Model>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall-clock timings in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Run a Monte-Carlo sweep described by a sweep file.
    Bench {
        #[arg(long = "sweep", visible_alias = "scenario")]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the sweep's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Fill `runtime_ms` with wall-clock times.
        #[arg(long)]
        timings: bool,
    },
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse()
        .map_err(|_| format!("unknown model `{s}` (expected narrowband|wideband|exact)"))
}

fn parse_view(s: &str) -> Result<View, String> {
    s.parse()
        .map_err(|_| format!("unknown view `{s}` (expected range_angle|angle_time|range_antenna)"))
}

fn run(cli: Cli) -> Result<String, CliError> {
    let env: commands::Env = std::env::vars().collect();
    match cli.command {
        Command::Synth { scenario, model, out, seed } => commands::synth(&SynthArgs { scenario, out, model, seed }, &env),
        Command::Map { scenario, matrix, view, model, out, seed } => commands::map(
            &MapArgs {
                scenario,
                matrix,
                view,
                out,
                model,
                seed,
            },
            &env,
        ),
        Command::Estimate {
            scenario,
            matrix,
            method,
            model,
            out,
            seed,
            timings,
        } => commands::estimate(
            &EstimateArgs {
                scenario,
                matrix,
                method,
                model,
                out,
                seed,
                timings,
            },
            &env,
        ),
        Command::Bench {
            sweep,
            out,
            seed,
            threads,
            timings,
        } => commands::bench(
            &BenchArgs {
                sweep,
                out,
                seed,
                threads,
                timings,
            },
            &env,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
