use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ngbvar_cli::config::{DisaggMethod, RunConfig};
use ngbvar_cli::pipeline::{disaggregate_file, generate_synthetic, run_pipeline, Stage};
use ngbvar_core::disagg::AggregationRule;
use ngbvar_core::Result;

/// Bayesian VAR estimation with normal-gamma shrinkage: ingest, temporal
/// disaggregation, Gibbs sampling, recursive identification, IRF report,
/// robustness battery. Log verbosity via the NGBVAR_LOG environment
/// variable (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "ngbvar", version)]
struct Cli {
    /// Worker threads for chain- and draw-level parallelism (default: all
    /// cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, validate, disaggregate and transform the data; write panel.csv.
    Ingest(ConfigArgs),
    /// Disaggregate one quarterly series in a CSV to monthly.
    Disaggregate {
        /// Input CSV in the ingest schema.
        #[arg(long)]
        input: PathBuf,
        /// Id of the quarterly series to disaggregate.
        #[arg(long)]
        series: String,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Monthly indicator id (chow-lin only).
        #[arg(long)]
        indicator: Option<String>,
        #[arg(long, value_enum, default_value = "average")]
        rule: RuleArg,
        /// Fixed AR(1) autocorrelation; omit for maximum likelihood.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run through estimation; write the draw store.
    Estimate(ConfigArgs),
    /// Run through impulse responses; write irf_bands.csv and plots.
    Irf(ConfigArgs),
    /// Run the robustness battery; write battery.json.
    Battery(ConfigArgs),
    /// Generate a synthetic dataset with a truth sidecar and a runnable
    /// config.
    Synthetic {
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, default_value_t = 300)]
        t: usize,
        /// Probability that a true coefficient is nonzero.
        #[arg(long, default_value_t = 0.4)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Full pipeline: ingest, estimate, identify, report, battery.
    Run(ConfigArgs),
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Spline,
    ChowLin,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RuleArg {
    Sum,
    Average,
    LastOfPeriod,
}

fn staged_run(args: &ConfigArgs, stage: Stage) -> Result<()> {
    let (config, bytes) = RunConfig::load(&args.config)?;
    run_pipeline(&config, &bytes, args.seed, args.out.as_deref(), stage)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(args) => staged_run(args, Stage::Ingest),
        Command::Estimate(args) => staged_run(args, Stage::Estimate),
        Command::Irf(args) => staged_run(args, Stage::Irf),
        Command::Battery(args) | Command::Run(args) => staged_run(args, Stage::Battery),
        Command::Disaggregate {
            input,
            series,
            method,
            indicator,
            rule,
            rho,
            out,
        } => {
            let method = match method {
                MethodArg::Spline => DisaggMethod::Spline,
                MethodArg::ChowLin => DisaggMethod::ChowLin,
            };
            let rule = match rule {
                RuleArg::Sum => AggregationRule::Sum,
                RuleArg::Average => AggregationRule::Average,
                RuleArg::LastOfPeriod => AggregationRule::LastOfPeriod,
            };
            let path =
                disaggregate_file(input, series, method, rule, indicator.as_deref(), *rho, out)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Synthetic {
            m,
            p,
            t,
            density,
            seed,
            out,
        } => {
            let path = generate_synthetic(*m, *p, *t, *density, *seed, out)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NGBVAR_LOG", "info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
