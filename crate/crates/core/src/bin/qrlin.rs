use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qrlin::pipeline::{self, exit_code, ModeChoice, Settings};
use qrlin::spec::SpecFile;
use qrlin::Error;

#[derive(Parser)]
#[command(name = "qrlin", version, about = "Linearize planar quasiregular maps near a fixed point")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the fixed point and report degree, simplicity, L and BIP energy.
    Analyze {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the conjugacy and write its summary.
    Linearize {
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump (z, psi(z)) on the residual probe disk.
        #[arg(long)]
        grid_csv: Option<PathBuf>,
        /// Dump the radial profile.
        #[arg(long)]
        profile_csv: Option<PathBuf>,
        /// Dump the generalized derivative on the unit circle.
        #[arg(long)]
        circle_csv: Option<PathBuf>,
    },
    /// Run the linearization with oracle comparisons and invariant checks.
    Verify {
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Attracting,
    Repelling,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    /// Sup Cauchy gap at which the iteration stops.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 60)]
    kmax: usize,
    /// Probe grid size per axis.
    #[arg(long, default_value_t = 33)]
    grid: usize,
    #[arg(long, default_value_t = 1e-6)]
    residual_tol: f64,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn settings(&self) -> Settings {
        Settings {
            mode: match self.mode {
                ModeArg::Auto => ModeChoice::Auto,
                ModeArg::Attracting => ModeChoice::Attracting,
                ModeArg::Repelling => ModeChoice::Repelling,
            },
            tol: self.tol,
            k_max: self.kmax,
            grid: self.grid,
            residual_tol: self.residual_tol,
            seed: self.seed,
        }
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))? + "\n";
    write_text(&text, out)
}

fn write_text(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Analyze { spec, out, seed } => {
            let spec = SpecFile::from_path(&spec)?;
            let settings = Settings { seed, ..Settings::default() };
            let analysis = pipeline::analyze(&spec, &settings)?;
            write_json(&analysis, out.as_deref())?;
            Ok(0)
        }
        Command::Linearize { spec, run, out, grid_csv, profile_csv, circle_csv } => {
            let spec = SpecFile::from_path(&spec)?;
            let lin = pipeline::linearize(&spec, &run.settings())?;
            write_json(&lin.summary(), out.as_deref())?;
            if let Some(path) = grid_csv {
                write_text(&lin.result.grid_csv(&lin.probe_disk())?, Some(&path))?;
            }
            if let Some(path) = profile_csv {
                write_text(&lin.setup.profile.to_csv(), Some(&path))?;
            }
            if let Some(path) = circle_csv {
                write_text(&lin.setup.rep.circle.to_csv(), Some(&path))?;
            }
            if let Some(msg) = &lin.message {
                eprintln!("qrlin: {msg}");
            }
            Ok(lin.exit_code)
        }
        Command::Verify { spec, run, out } => {
            let spec = SpecFile::from_path(&spec)?;
            let checks = pipeline::verify(&spec, &run.settings());
            print!("{}", pipeline::format_checks(&checks));
            if let Some(path) = out {
                write_json(&checks, Some(&path))?;
            }
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qrlin: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
