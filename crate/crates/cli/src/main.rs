use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use savsim::config::ScenarioConfig;
use savsim::report::{build_report, write_report};
use savsim::runner::{run, sweep, SweepAxes};
use savsim::Error;

/// Shared autonomous vehicle fleet simulation.
///
/// Exit codes: 0 success, 1 configuration or input error, 2 invariant violation.
#[derive(Parser, Debug)]
#[command(name = "savsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario to equilibrium and write events, kpi.json and the iteration log.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of scenarios and aggregate kpi.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Axis as name=v1,v2,...; names: fleet, capacity, ridesharing, rebalancing, fare.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        /// Grid points run in parallel.
        #[arg(long, env = "SAVSIM_WORKERS", default_value_t = 1)]
        workers: usize,
        /// Also write the event stream of every grid point.
        #[arg(long)]
        events: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a sweep's kpi.csv into long-format tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to a `report` directory next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a bundled scenario config (grid16 or grid8).
    Generate {
        #[arg(long, default_value = "grid16")]
        preset: String,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_invariant() {
        2
    } else {
        1
    }
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = load(&config, out)?;
            let res = run(&cfg)?;
            let k = &res.kpi;
            println!(
                "{}: sav share {:.2}%, mean wait {:.0} s, empty ratio {:.3}, outputs in {}",
                cfg.name,
                k.modal_split.sav,
                k.wait_s.mean,
                k.empty_distance_ratio,
                cfg.output_dir.display()
            );
        }
        Command::Sweep {
            config,
            axes,
            workers,
            events,
            out,
        } => {
            let cfg = load(&config, out)?;
            let mut grid = SweepAxes::default();
            for a in &axes {
                grid.add(a)?;
            }
            let res = sweep(&cfg, &grid, workers, events)?;
            println!("{} runs, kpi.csv in {}", res.rows.len(), cfg.output_dir.display());
            for f in &res.findings {
                println!("{f}");
            }
        }
        Command::Report { input, out } => {
            let file = File::open(&input).map_err(|e| Error::file(&input, e))?;
            let rep = build_report(file)?;
            let dir = out.unwrap_or_else(|| input.parent().unwrap_or(&PathBuf::from(".")).join("report"));
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            for p in write_report(&dir, &rep)? {
                println!("{}", p.display());
            }
        }
        Command::Generate { preset, out } => {
            let cfg = ScenarioConfig::preset(&preset)
                .ok_or_else(|| Error::Config(format!("unknown preset '{preset}'; expected grid16 or grid8")))?;
            match out {
                Some(p) => std::fs::write(&p, cfg.to_toml()).map_err(|e| Error::file(&p, e))?,
                None => print!("{}", cfg.to_toml()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
