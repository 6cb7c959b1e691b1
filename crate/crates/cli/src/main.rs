//! `currentflow`: generate test forms, run proximal TV flows, and report
//! Hodge splits and norms.

mod commands;
mod config;
mod error;
mod expr;
mod gen;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, FlowOpts, GridOpts};
use error::{CliError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(
    name = "currentflow",
    version,
    about = "Proximal TV flows of discrete currents on flat tori"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print results and errors as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// CSV file for the per-iteration flow trace.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    /// TOML file with the same keys as the long flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a test form.
    Gen(GenArgs),
    /// Unconstrained flow to the nearest closed form.
    Denoise(FlowArgs),
    /// Flow constrained to the cone of a calibration.
    Calibrate(CalibrateArgs),
    /// Exact, coexact and harmonic parts.
    Hodge(HodgeArgs),
    /// Euclidean, mass and comass norms of a k-vector such as `e12+2e34`.
    Norms(NormsArgs),
    /// TV energy with a dual lower bound.
    Energy(EnergyArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    grid: GridOpts,
    /// noisy-closed, step, harmonic-plus-coexact or calibrated-random.
    #[arg(long)]
    preset: Option<String>,
    /// volume, kahler4 or axis:i,j,... (one-based).
    #[arg(long)]
    calibration: Option<String>,
    /// Value of every component of the closed part.
    #[arg(long)]
    mean: Option<f64>,
    /// Peak amplitude of the coexact noise.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Where to write the limit form.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    flow: FlowOpts,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    io: FlowArgs,
    /// volume, kahler4 or axis:i,j,... (one-based).
    #[arg(long)]
    calibration: Option<String>,
    /// Keep the transversal pairing with the calibration at 1.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args, Debug)]
struct HodgeArgs {
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Residual report; the parts go next to it as NAME.exact.json and so on.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    cg_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct NormsArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    vector: Option<String>,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Random starts for the dual ascent.
    #[arg(long)]
    restarts: Option<usize>,
}

impl Cli {
    fn into_config(self) -> (Command, ExperimentConfig) {
        let mut c = ExperimentConfig {
            seed: self.seed,
            json: self.json.then_some(true),
            trace: self.trace,
            ..Default::default()
        };
        match &self.command {
            Command::Gen(a) => {
                c.grid = a.grid.clone();
                c.preset = a.preset.clone();
                c.calibration = a.calibration.clone();
                c.mean = a.mean;
                c.noise = a.noise;
                c.output = a.output.clone();
            }
            Command::Denoise(a) => a.apply(&mut c),
            Command::Calibrate(a) => {
                a.io.apply(&mut c);
                c.calibration = a.calibration.clone();
                c.normalize = a.normalize.then_some(true);
            }
            Command::Hodge(a) => {
                c.input = a.input.clone();
                c.output = a.output.clone();
                c.cg_tol = a.cg_tol;
            }
            Command::Norms(a) => {
                c.n = a.n;
                c.k = a.k;
                c.vector = a.vector.clone();
            }
            Command::Energy(a) => {
                c.input = a.input.clone();
                c.restarts = a.restarts;
            }
        }
        (self.command, c)
    }
}

impl FlowArgs {
    fn apply(&self, c: &mut ExperimentConfig) {
        c.input = self.input.clone();
        c.output = self.output.clone();
        c.flow = self.flow.clone();
    }
}

fn run(cli: Cli) -> Result<(commands::Report, bool), (CliError, bool)> {
    let file = cli.config.clone();
    let cli_json = cli.json;
    let (command, mut cfg) = cli.into_config();
    if let Some(path) = file {
        let loaded = ExperimentConfig::load(&path).map_err(|e| (e, cli_json))?;
        cfg.fill_from(&loaded);
    }
    let json = cfg.json();
    let report = match command {
        Command::Gen(_) => commands::gen(&cfg),
        Command::Denoise(_) => commands::denoise(&cfg),
        Command::Calibrate(_) => commands::calibrate(&cfg),
        Command::Hodge(_) => commands::hodge(&cfg),
        Command::Norms(_) => commands::norms(&cfg),
        Command::Energy(_) => commands::energy(&cfg),
    }
    .map_err(|e| (e, json))?;
    Ok((report, json))
}

fn fail(e: &CliError, json: bool) -> ExitCode {
    if json {
        eprintln!("{}", e.to_json());
    } else {
        eprintln!("error: {e}");
    }
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            if std::env::args().any(|a| a == "--json") {
                let err = CliError::usage(e.kind().to_string());
                eprintln!("{}", err.to_json());
            } else {
                eprint!("{}", e.render());
            }
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok((report, json)) => {
            let text = report.render(json);
            let mut out = std::io::stdout().lock();
            let _ = if json {
                writeln!(out, "{text}")
            } else {
                write!(out, "{text}")
            };
            match report.1 {
                None => ExitCode::SUCCESS,
                Some(e) => fail(&e, json),
            }
        }
        Err((e, json)) => fail(&e, json),
    }
}
