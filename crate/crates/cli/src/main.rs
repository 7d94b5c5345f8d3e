use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::{CliError, Report};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage, instance parse or input error
  3  numerical contract failure (a checked inequality or cross-check failed)
  4  capacity exhausted (series term cap, block count, tail length)";

#[derive(Parser, Debug)]
#[command(name = "altproj", version, about = "Experiments on cyclic products of orthogonal projections", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Instance file (`altproj-instance v1`)
    #[arg(long)]
    instance: PathBuf,
    /// Write the CSV here instead of stdout (atomically)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Start {
    /// seeded Gaussian unit vector
    Random,
    /// top right singular vector of T − P_M
    Worst,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Friedrichs number, inclinations, θ₀ and rate base as a one-row CSV
    Geometry {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Error trace eₙ with both geometric bounds
    Iterate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = Start::Random)]
        start: Start,
        /// required with --start random
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Numerical-range boundary and its containment in Ω_N ∩ S_θ₀
    Numrange {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 256)]
        angles: usize,
        #[arg(long, default_value_t = 1e-7)]
        slack: f64,
    },
    /// Power profile n‖Tⁿ(I−T)‖ and sampled resolvent constants
    Ritt {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        n_max: usize,
        #[arg(long, default_value_t = 256)]
        angles: usize,
    },
    /// Decay slopes of orbits started in Ran(I−T)^α
    Fracpow {
        #[command(flatten)]
        common: Common,
        /// comma-separated exponents
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Vector whose errors stay above 1/log(n+2) up to the horizon (block instances)
    Slowvec {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        n_max: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// also write the vector as `index,re,im`
        #[arg(long)]
        x_out: Option<PathBuf>,
    },
    /// The acceptance battery; exits 3 if any criterion fails
    Suite {
        #[arg(long)]
        seed: u64,
        /// comma-separated criterion numbers (default: all)
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Write via a temporary file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    for (path, text) in &report.extra_files {
        write_atomic(path, text).map_err(|e| CliError::Io(path.clone(), e))?;
    }
    match out {
        Some(path) => write_atomic(path, &report.csv).map_err(|e| CliError::Io(path.to_path_buf(), e))?,
        None => print!("{}", report.csv),
    }
    for line in &report.summary {
        eprintln!("{line}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (report, out) = match cli.command {
        Command::Geometry { common, seed, restarts } => {
            (commands::geometry(&common.instance, seed, restarts)?, common.out)
        }
        Command::Iterate {
            common,
            n_max,
            start,
            seed,
        } => (commands::iterate(&common.instance, n_max, start, seed)?, common.out),
        Command::Numrange { common, angles, slack } => {
            (commands::numrange(&common.instance, angles, slack)?, common.out)
        }
        Command::Ritt { common, n_max, angles } => (commands::ritt(&common.instance, n_max, angles)?, common.out),
        Command::Fracpow {
            common,
            alpha,
            seed,
            n_max,
            tol,
        } => (commands::fracpow(&common.instance, &alpha, seed, n_max, tol)?, common.out),
        Command::Slowvec {
            common,
            n_max,
            eps,
            x_out,
        } => (commands::slowvec(&common.instance, n_max, eps, x_out)?, common.out),
        Command::Suite { seed, only, out } => (commands::suite(seed, &only)?, out),
    };
    emit(&report, out.as_deref())?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
