//! `swpv` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swpv_cli::{emit_report, run_scenario, CliError, Result, RunConfig, Scenario};

/// Simulations of the semilinear wave equation with an inverse-square
/// potential and numerical checks of its energy estimates.
///
/// Exit codes: 0 success, 1 I/O or artifact error, 2 configuration error,
/// 3 numerical failure.
#[derive(Parser)]
#[command(name = "swpv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the rayon default.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Semilinear evolution of the standard bump data.
    Solve(Common),
    /// Picard iteration towards the semilinear solution.
    Picard {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Weighted Hardy and trace inequalities on random test functions.
    VerifyInequalities {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        /// Comma-separated support radii, e.g. 1,2,4,8.
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<f64>>,
    },
    /// Multiplier identity convergence and remainder sign sweep.
    VerifyIdentity(Common),
    /// Flux balance on a characteristic hexagon or pentagon.
    Hexagon(Common),
    /// Semilinear runs over exponents and amplitudes, with J(t) tables.
    Sweep(Common),
    /// Runs the scenario named by the `scenario` entry of the configuration.
    Run(Common),
    /// Regenerates plots and summary.txt from a run directory's energy.csv.
    EmitReport {
        run_dir: PathBuf,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        config.output.dir = Some(out.clone());
    }
    if let Some(seed) = common.seed {
        config.run.seed = Some(seed);
    }
    Ok(config)
}

fn execute(scenario: Scenario, config: RunConfig, threads: Option<usize>) -> Result<()> {
    let resolved = config.resolve(scenario)?;
    let run = || run_scenario(&resolved);
    let outcome = match threads {
        Some(0) => return Err(CliError::config("threads", "must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config("threads", e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    println!("{}", outcome.run_dir.display());
    match outcome.failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(c) => execute(Scenario::Solve, load(&c)?, c.threads),
        Command::Picard { common, m_max, tol } => {
            let mut config = load(&common)?;
            config.picard.m_max = m_max.or(config.picard.m_max);
            config.picard.tol = tol.or(config.picard.tol);
            execute(Scenario::Picard, config, common.threads)
        }
        Command::VerifyInequalities { common, samples, k_list } => {
            let mut config = load(&common)?;
            config.inequalities.samples = samples.or(config.inequalities.samples);
            config.inequalities.k_list = k_list.or(config.inequalities.k_list);
            execute(Scenario::VerifyInequalities, config, common.threads)
        }
        Command::VerifyIdentity(c) => execute(Scenario::VerifyIdentity, load(&c)?, c.threads),
        Command::Hexagon(c) => execute(Scenario::Hexagon, load(&c)?, c.threads),
        Command::Sweep(c) => execute(Scenario::Sweep, load(&c)?, c.threads),
        Command::Run(c) => {
            let config = load(&c)?;
            let scenario = config.scenario.ok_or_else(|| CliError::config("scenario", "required entry is missing"))?;
            execute(scenario, config, c.threads)
        }
        Command::EmitReport { run_dir } => {
            let out = emit_report(&run_dir)?;
            println!("{} rows, summary in {}", out.rows, out.summary.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
