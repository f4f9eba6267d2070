use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dewetting::config::RunConfig;
use dewetting::io::{self, Manifest, EVENTS_FILE, MANIFEST_FILE, SERIES_FILE};

/// Solid-state dewetting simulator.
#[derive(Debug, Parser)]
#[command(name = "dewet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a single configuration (or re-run a manifest).
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run every point of the configuration's sweep, one subdirectory each.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Number of runs to execute at once.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Print a run's manifest and final diagnostics.
    Inspect { run_dir: PathBuf },
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Directory for the run artifacts.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Also write snapshots every this many time units.
    #[arg(long)]
    snapshot_every: Option<f64>,
    /// Root under which runs without an explicit directory are placed.
    #[arg(
        long,
        env = "DEWET_OUTPUT_ROOT",
        default_value = "runs",
        hide_env_values = true
    )]
    output_root: PathBuf,
}

fn prepare(path: &Path, out: &OutputArgs) -> anyhow::Result<(RunConfig, PathBuf)> {
    let mut cfg = io::load_config(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(dt) = out.snapshot_every {
        cfg.add_snapshot_every(dt)?;
    }
    let dir = match (&out.output_dir, &cfg.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => {
            let stem = path
                .file_stem()
                .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
            out.output_root.join(stem)
        }
    };
    Ok((cfg, dir))
}

fn report(results: &[io::RunResult]) -> ExitCode {
    let mut failed = 0;
    for r in results {
        match &r.failure {
            None => println!("ok      {} ({})", r.name, r.dir.display()),
            Some(f) => {
                failed += 1;
                println!("FAILED  {} ({}): {f}", r.name, r.dir.display());
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn inspect(dir: &Path) -> anyhow::Result<()> {
    let manifest = Manifest::read(dir)?;
    let path = if dir.is_dir() {
        dir.join(MANIFEST_FILE)
    } else {
        dir.to_path_buf()
    };
    print!("{}", fs::read_to_string(&path)?);
    let dir = path.parent().unwrap_or(Path::new("."));
    println!();
    println!("status: {:?}", manifest.status);
    if let Some(f) = &manifest.failure {
        println!("failure: {f}");
    }
    if let Ok(series) = fs::read_to_string(dir.join(SERIES_FILE)) {
        let rows = series.lines().count().saturating_sub(1);
        if let Some(last) = series.lines().skip(1).last() {
            println!("samples: {rows}");
            println!("last sample (t,mass,energy,h_min,agglomerates,x_c): {last}");
        }
    }
    if let Ok(events) = fs::read_to_string(dir.join(EVENTS_FILE)) {
        println!("events: {}", events.lines().count());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => prepare(&config, &out).and_then(|(cfg, dir)| {
            if !cfg.sweep.is_empty() {
                bail!("{} defines a sweep; use `dewet sweep`", config.display());
            }
            Ok(report(&io::execute(&cfg, &dir, 1)?))
        }),
        Command::Sweep {
            config,
            out,
            parallel,
        } => prepare(&config, &out).and_then(|(cfg, dir)| {
            if cfg.sweep.is_empty() {
                bail!("{} has no [sweep] axes; use `dewet run`", config.display());
            }
            Ok(report(&io::execute(&cfg, &dir, parallel)?))
        }),
        Command::Inspect { run_dir } => inspect(&run_dir).map(|_| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
