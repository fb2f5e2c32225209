use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geocount_cli::commands;
use geocount_cli::config::{Overrides, RunConfig, CACHE_ENV};
use geocount_cli::CliError;

#[derive(Parser)]
#[command(name = "geocount", version, about = "Closed-geodesic counting experiments on hyperbolic surfaces")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Surface preset name or path to a surface file.
    #[arg(long, global = true)]
    surface: Option<String>,
    /// Spectrum cutoff radius.
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Comma-separated time grid.
    #[arg(long = "t", global = true, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Phase box `cx,cy,dir,radius,halfwidth`.
    #[arg(long = "box", global = true, allow_hyphen_values = true)]
    phase_box: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// `full` or `quick`.
    #[arg(long, global = true)]
    tolerance_profile: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or load the cached length spectrum.
    Spectrum,
    /// Counting laws against the spectrum.
    Count,
    /// Patterson-Sullivan transformation and equivariance checks.
    Density,
    /// Measure of maximal entropy and its conditionals.
    Mme,
    /// Mixing and equidistribution on phase boxes.
    Cube,
    /// Rank classifier suites on the conformal metric presets.
    Rank {
        #[arg(long)]
        dump_trajectory: bool,
    },
    /// Full acceptance battery.
    VerifyAll,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let o = Overrides {
        config: cli.config,
        surface: cli.surface,
        radius: cli.radius,
        t_grid: cli.t,
        epsilon: cli.epsilon,
        samples: cli.samples,
        seed: cli.seed,
        phase_box: cli.phase_box,
        out: cli.out,
        cache_dir: cli.cache_dir,
        profile: cli.tolerance_profile,
    };
    let cfg = RunConfig::resolve(&o, std::env::var(CACHE_ENV).ok())?;
    let text = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg)?,
        Command::Count => commands::count(&cfg)?,
        Command::Density => commands::density(&cfg)?,
        Command::Mme => commands::mme(&cfg)?,
        Command::Cube => commands::cube(&cfg)?,
        Command::Rank { dump_trajectory } => commands::rank(&cfg, dump_trajectory)?,
        Command::VerifyAll => {
            let (report, summary) = commands::verify_all(&cfg)?;
            println!("{summary}");
            if !report.failed.is_empty() {
                return Err(CliError::Acceptance(report.failed));
            }
            return Ok(());
        }
    };
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let err = CliError::Config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
