use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use windgame_cli::config::Profile;
use windgame_cli::error::{Stage, StageExt};
use windgame_cli::scenario::{ensemble_stats, prepare};
use windgame_cli::{emit_report, run_scenario, CliError, ScenarioConfig};
use windgame_core::{fit_sigmoid, read_curve_points, StatsReport};

#[derive(Parser)]
#[command(name = "windgame", version, about = "Wind scenario generation and line-investment equilibria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario sweep and write the reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override chain and grid sizes.
        #[arg(long, value_enum)]
        profile: Option<Profile>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convergence statistics of the realisation ensemble only.
    Stats {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum)]
        profile: Option<Profile>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of states per chain.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the number of realisations.
        #[arg(long)]
        realisations: Option<usize>,
    },
    /// Fit the logistic power curve to a CSV with `wind_ms` and `per_unit` columns.
    FitCurve {
        #[arg(long)]
        points: PathBuf,
    },
    /// Write a synthetic wind and demand dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2017)]
        seed: u64,
    },
}

fn load(config: &Path, profile: Option<Profile>, seed: Option<u64>) -> Result<ScenarioConfig, CliError> {
    let mut c = ScenarioConfig::from_file(config)?;
    if let Some(p) = profile {
        c.apply_profile(p);
    }
    if let Some(s) = seed {
        c.chain.seed = s;
    }
    c.validate()?;
    Ok(c)
}

fn set_workers(workers: Option<usize>) -> Result<(), CliError> {
    if let Some(k) = workers {
        if k == 0 {
            return Err(CliError::new(Stage::Config, "--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::new(Stage::Config, e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            profile,
            seed,
        } => {
            set_workers(workers)?;
            let c = load(&config, profile, seed)?;
            let result = run_scenario(&c)?;
            for path in emit_report(&result, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Stats {
            config,
            workers,
            profile,
            seed,
            samples,
            realisations,
        } => {
            set_workers(workers)?;
            let mut c = load(&config, profile, seed)?;
            if let Some(n) = samples {
                c.chain.samples = n;
            }
            if let Some(n) = realisations {
                c.chain.realisations = n;
            }
            c.validate()?;
            let prepared = prepare(&c)?;
            let report = ensemble_stats(&c, &prepared)?;
            let h = prepared.historic.means();
            println!(
                "historic means: w1 {:.4}, w2 {:.4}, P_D {:.4}",
                h[0], h[1], h[2]
            );
            println!("{}", StatsReport::table_header());
            let label = format!("n={} N={}", c.chain.samples, c.chain.realisations);
            println!("{}", report.table_row(&label));
        }
        Command::FitCurve { points } => {
            let pts = read_curve_points(&points).stage(Stage::Sim)?;
            let fit = fit_sigmoid(&pts).stage(Stage::Sim)?;
            println!("alpha = {}", fit.curve.alpha);
            println!("beta = {}", fit.curve.beta);
            println!("# residual sum of squares {:.6}, rms {:.6}", fit.sse, fit.rms);
        }
        Command::Synth { out, seed } => {
            let cfg = windgame_core::synth::SyntheticConfig {
                seed,
                ..Default::default()
            };
            let data = windgame_core::synth::generate(&cfg).stage(Stage::Ingest)?;
            windgame_core::synth::write_fixture(&data, &out, seed.wrapping_add(1))
                .stage(Stage::Report)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
