use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ht_bnp::error::{Error, Result};
use ht_bnp::harness::{expect_experiment, load_config, run, Experiment, RunOptions};
use ht_bnp::plot::{emit_plot, PlotKind};

/// Heavy-tailed series priors: experiments, validation and plots.
#[derive(Parser)]
#[command(name = "ht-bnp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the published chain lengths and Monte Carlo sizes.
    #[arg(long)]
    paper_scale: bool,
    /// Parent output directory (artifacts go to `<out>/<experiment>/`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior mean against the observation for a sigma sweep.
    #[command(name = "fig1_posterior_means")]
    Fig1PosteriorMeans(RunArgs),
    /// Inverse (Volterra) regression: means and 95% bands per prior, n and rho.
    #[command(name = "inverse_regression")]
    InverseRegression(RunArgs),
    /// Wavelet denoising of the four DJ94 signals.
    #[command(name = "dj94_denoise")]
    Dj94Denoise(RunArgs),
    /// Density estimation with wavelet series priors on the log-density.
    #[command(name = "density_estimation")]
    DensityEstimation(RunArgs),
    /// Binary classification with a logistic link.
    #[command(name = "classification")]
    Classification(RunArgs),
    /// Posterior-mean error against n, with a fitted log-log slope.
    #[command(name = "rate_sweep")]
    RateSweep(RunArgs),
    /// Prior mass of shrinking balls around the truth.
    #[command(name = "prior_mass")]
    PriorMass(RunArgs),
    /// Battery of numerical property checks.
    #[command(name = "theory_suite")]
    TheorySuite(RunArgs),
    /// Parse and validate a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a result table as SVG next to it.
    Plot {
        table: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Output path (default: the table path with `.svg`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("HT_BNP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config {
            path: "HT_BNP_THREADS".into(),
            message: format!("must be a positive integer, got `{v}`"),
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Domain(format!("cannot build thread pool: {e}")))
}

fn run_experiment(exp: Experiment, args: RunArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    expect_experiment(&cfg, exp)?;
    let summary = run(
        &cfg,
        &RunOptions {
            seed: args.seed,
            paper_scale: args.paper_scale,
            out: args.out,
        },
    )?;
    println!(
        "{}: {} artifacts in {} ({:.1} s)",
        exp.name(),
        summary.manifest.outputs.len(),
        summary.dir.display(),
        summary.manifest.wall_clock_seconds
    );
    Ok(())
}

fn dispatch(cmd: Command) -> Result<()> {
    init_threads()?;
    match cmd {
        Command::Fig1PosteriorMeans(a) => run_experiment(Experiment::Fig1PosteriorMeans, a),
        Command::InverseRegression(a) => run_experiment(Experiment::InverseRegression, a),
        Command::Dj94Denoise(a) => run_experiment(Experiment::Dj94Denoise, a),
        Command::DensityEstimation(a) => run_experiment(Experiment::DensityEstimation, a),
        Command::Classification(a) => run_experiment(Experiment::Classification, a),
        Command::RateSweep(a) => run_experiment(Experiment::RateSweep, a),
        Command::PriorMass(a) => run_experiment(Experiment::PriorMass, a),
        Command::TheorySuite(a) => run_experiment(Experiment::TheorySuite, a),
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!("{}: ok ({})", config.display(), cfg.experiment.name());
            Ok(())
        }
        Command::Plot { table, kind, out } => {
            let path = emit_plot(&table, kind, out.as_deref())?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
