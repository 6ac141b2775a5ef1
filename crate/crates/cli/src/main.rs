use std::path::PathBuf;
use std::process::ExitCode;

use capmap_cli::{run_and_write, CliError, Config, Experiment};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "capmap", version, about = "Planar vs spherical modeling error for non-terrestrial networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Print the fully resolved config and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Optimal planar altitude per metric over LoS caps.
    OptAlt,
    /// Minimum relative error per metric over deployment altitudes.
    ErrAlt,
    /// Relative error over altitude by beam angle.
    HeatmapBeam,
    /// Relative error over altitude by cap area.
    HeatmapArea,
    /// HAP vs LEO relative error over beam angles.
    CaseStudy,
    /// Statistical checks of the generator and closed forms.
    Validate,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::OptAlt => Experiment::OptAlt,
            Command::ErrAlt => Experiment::ErrAlt,
            Command::HeatmapBeam => Experiment::HeatmapBeam,
            Command::HeatmapArea => Experiment::HeatmapArea,
            Command::CaseStudy => Experiment::CaseStudy,
            Command::Validate => Experiment::Validate,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let experiment = Experiment::from(cli.command);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let manifest = pool.install(|| run_and_write(experiment, &cfg, &cli.out))?;
    for (file, rows) in &manifest.rows {
        eprintln!("wrote {} ({rows} rows)", cli.out.join(file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
