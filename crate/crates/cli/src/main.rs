use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kypc::sim::SimConfig;
use kypc_cli::commands::{self, CommandError, DetArgs, FeedbackKind, GridArgs};
use kypc_cli::parse_system_file;

/// Frequency-domain, coercivity and Riccati analysis of linear-quadratic
/// control problems.
#[derive(Parser)]
#[command(name = "kypc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GridOpts {
    /// Base frequency grid size.
    #[arg(long, default_value_t = GridArgs::default().points)]
    grid_points: usize,
    /// Largest grid frequency.
    #[arg(long, default_value_t = GridArgs::default().omega_max)]
    grid_max: f64,
}

impl GridOpts {
    fn args(&self) -> GridArgs {
        GridArgs { points: self.grid_points, omega_max: self.grid_max }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Frequency scan, Riccati equation and coercivity oracle for (A, B, M).
    AnalyzeDet {
        file: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        /// Sampling step of the coercivity oracle.
        #[arg(long, default_value_t = DetArgs::default().dt)]
        dt: f64,
        /// Oracle horizon; chosen from the plant when omitted.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Mean-square stability, Wonham and stochastic Riccati analysis.
    AnalyzeStoch { file: PathBuf },
    /// Smallest Popov eigenvalue over the frequency grid as CSV.
    ScanFrequency {
        file: PathBuf,
        #[command(flatten)]
        grid: GridOpts,
        /// Write the CSV here and print a JSON summary instead.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Input with negative cost built at a violating frequency.
    Witness {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        /// Input direction as JSON, e.g. "[1, [0, 0.5]]"; the most violating
        /// direction at omega when omitted.
        #[arg(long)]
        eta: Option<String>,
        /// Initial number of oscillation cycles.
        #[arg(long, default_value_t = 1)]
        cycles: usize,
        /// Write the input samples here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte Carlo cost and second moments under state feedback.
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = FeedbackKind::Zero)]
        feedback: FeedbackKind,
        #[arg(long, default_value_t = SimConfig::default().paths)]
        paths: usize,
        #[arg(long, default_value_t = SimConfig::default().dt)]
        dt: f64,
        #[arg(long, default_value_t = SimConfig::default().horizon)]
        horizon: f64,
        #[arg(long, default_value_t = SimConfig::default().seed)]
        seed: u64,
        /// Initial state as JSON; defaults to the first basis vector.
        #[arg(long)]
        x0: Option<String>,
        /// Disable antithetic path pairs.
        #[arg(long)]
        no_antithetic: bool,
        /// Write (t, E|x|^2) here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<String, CommandError> {
    match cli.command {
        Command::AnalyzeDet { file, grid, dt, horizon } => {
            let bundle = parse_system_file(&file)?;
            commands::analyze_det(&bundle, &DetArgs { grid: grid.args(), dt, horizon })
        }
        Command::AnalyzeStoch { file } => commands::analyze_stoch(&parse_system_file(&file)?),
        Command::ScanFrequency { file, grid, csv } => {
            commands::scan_frequency(&parse_system_file(&file)?, &grid.args(), csv.as_deref())
        }
        Command::Witness { file, omega, eta, cycles, csv } => {
            let bundle = parse_system_file(&file)?;
            let eta = eta.map(|s| commands::parse_vector(&s, "--eta")).transpose()?;
            commands::witness(&bundle, omega, eta, cycles, csv.as_deref())
        }
        Command::Simulate { file, feedback, paths, dt, horizon, seed, x0, no_antithetic, csv } => {
            let bundle = parse_system_file(&file)?;
            let x0 = x0.map(|s| commands::parse_vector(&s, "--x0")).transpose()?;
            let cfg = SimConfig { dt, horizon, paths, seed, antithetic: !no_antithetic };
            commands::simulate(&bundle, feedback, x0, &cfg, csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KYPC_LOG", "error")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
