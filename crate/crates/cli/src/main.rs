//! `dicke-vrs`: closed forms, exact diagonalization, Husimi grids, sweeps and
//! finite-size fits from the command line.

mod commands;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::Value;

use commands::{analytic, ed, fit, husimi, sweep};
use error::{CliError, CliResult};
use output::{OutputArgs, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "dicke-vrs", version, about = "Squeezing and polariton splittings of light-matter ground states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resonant closed forms over a grid of coupling ratios.
    Analytic(analytic::AnalyticArgs),
    /// Ground-state observables by exact diagonalization.
    Ed(ed::EdArgs),
    /// Husimi Q grid of one mode of the two-oscillator ground state.
    Husimi(husimi::HusimiArgs),
    /// Fits `y = alpha * N^beta + gamma` to a CSV table.
    Fit(fit::FitArgs),
    /// Runs a parameter sweep described by a JSON config.
    Sweep(sweep::SweepArgs),
    /// Re-runs the command recorded in a manifest (or in a JSON output).
    Replay(ReplayArgs),
}

#[derive(clap::Args, Debug)]
struct ReplayArgs {
    manifest: PathBuf,

    #[arg(long, short)]
    output: Option<PathBuf>,

    #[arg(long = "manifest-out")]
    manifest_out: Option<PathBuf>,
}

fn parameters<T: DeserializeOwned>(path: &Path, value: &Value) -> CliResult<T> {
    serde_json::from_value(value.clone())
        .map_err(|e| CliError::Config { path: path.to_path_buf(), message: format!("parameters: {e}") })
}

fn replay(args: &ReplayArgs) -> CliResult<()> {
    let path = args.manifest.as_path();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config_err = |message: String| CliError::Config { path: path.to_path_buf(), message };
    let doc: Value = serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
    let manifest = doc.get("manifest").cloned().unwrap_or(doc);
    let manifest: RunManifest = serde_json::from_value(manifest).map_err(|e| config_err(e.to_string()))?;
    let redirect = |out: &mut OutputArgs| {
        out.output = args.output.clone();
        out.manifest = args.manifest_out.clone();
    };
    let p = &manifest.parameters;
    match manifest.command.as_str() {
        "analytic" => {
            let mut a: analytic::AnalyticArgs = parameters(path, p)?;
            redirect(&mut a.out);
            analytic::run(&a)
        }
        "ed" => {
            let mut a: ed::EdArgs = parameters(path, p)?;
            redirect(&mut a.out);
            ed::run(&a)
        }
        "husimi" => {
            let mut a: husimi::HusimiArgs = parameters(path, p)?;
            redirect(&mut a.out);
            husimi::run(&a)
        }
        "fit" => {
            let mut a: fit::FitArgs = parameters(path, p)?;
            redirect(&mut a.out);
            fit::run(&a)
        }
        "sweep" => {
            let spec: dicke_vrs::sweep_fit::SweepSpec = parameters(path, &p["spec"])?;
            spec.validate().map_err(|e| config_err(e.to_string()))?;
            let mut out: OutputArgs = parameters(path, &p["out"])?;
            redirect(&mut out);
            sweep::run_spec(&spec, &out, path)
        }
        other => Err(config_err(format!("unknown command `{other}`"))),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analytic(a) => analytic::run(&a),
        Command::Ed(a) => ed::run(&a),
        Command::Husimi(a) => husimi::run(&a),
        Command::Fit(a) => fit::run(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::Replay(a) => replay(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
