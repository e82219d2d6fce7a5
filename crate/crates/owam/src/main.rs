use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use owam::config::ConfigFile;
use owam::io::{load_csv, save_csv, Layout, LoadOptions};
use owam::runner::{run_bench, run_file, run_sweep, SweepAxis};
use owam::{Error, Result};

/// Outlier-weighted streaming traffic forecasting.
///
/// Thread count comes from OWAM_THREADS (default: all cores).
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a CSV, repair gaps, and write the canonical wide file.
    Prepare {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value = "wide")]
        layout: Layout,
        /// Grid spacing in seconds.
        #[arg(long, default_value_t = 300)]
        interval: i64,
    },
    /// Run one config file and write its run directory.
    Run {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cross product of parameter values over a base config.
    Sweep {
        config: PathBuf,
        /// `name=v1,v2,...` with name in theta, loss_kind, window_T, update_mode; repeatable.
        #[arg(short, long = "param", required = true)]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several config files and write one combined table.
    Bench {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<ConfigFile> {
    let mut file = ConfigFile::load(path)?;
    if let Some(out) = out {
        file.output.dir = out;
    }
    Ok(file)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare {
            input,
            output,
            layout,
            interval,
        } => {
            let opts = LoadOptions {
                layout,
                sample_interval: interval,
                ..LoadOptions::default()
            };
            let loaded = load_csv(&input, &opts)?;
            save_csv(&loaded.dataset, &output)?;
            println!("sensor,repaired");
            for (id, n) in &loaded.repaired {
                println!("{id},{n}");
            }
        }
        Command::Run { config, out } => {
            let file = load(&config, out)?;
            let (report, _) = run_file(&file, "run")?;
            info!("wrote {}", file.output.dir.display());
            println!("rmse {}", report.rmse);
        }
        Command::Sweep {
            config,
            params,
            out,
        } => {
            let file = load(&config, out)?;
            let axes = params
                .iter()
                .map(|p| p.parse())
                .collect::<Result<Vec<SweepAxis>>>()?;
            let rows = run_sweep(&file, &axes)?;
            let failed = rows.iter().filter(|r| !r.is_ok()).count();
            info!("wrote {}", file.output.dir.display());
            println!("{} rows, {failed} failed", rows.len());
        }
        Command::Bench { configs, out } => {
            let files = configs
                .iter()
                .map(|c| load(c, None))
                .collect::<Result<Vec<_>>>()?;
            let rows = run_bench(&files, &out)?;
            let failed = rows.iter().filter(|r| !r.is_ok()).count();
            println!("{} rows, {failed} failed", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Ok(n) = std::env::var("OWAM_THREADS") {
        match n.parse::<usize>() {
            Ok(n) => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(1);
                }
            }
            Err(_) => {
                eprintln!("error: OWAM_THREADS must be a thread count, got {n:?}");
                return ExitCode::from(2);
            }
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
