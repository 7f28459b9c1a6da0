use std::path::PathBuf;
use std::process::ExitCode;

use cerebellar_cli::{load_config, run, sweep, CliError, Grid, TraceLevel};
use clap::{Parser, Subcommand, ValueEnum};

/// Closed-loop spiking cerebellar control of a compliant arm.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Pd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override one key, e.g. `--set decoder.gains=[0.5,0.5]`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        trace: Option<TraceLevel>,
        /// Replace the cerebellum by a baseline controller.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Hold each control step to at least 2 ms of wall time.
        #[arg(long)]
        realtime_pacing: bool,
    },
    /// Run every point of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, default_value = "runs/sweep")]
        out: PathBuf,
        /// Runs in flight; defaults to the number of CPUs.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { config, mut sets, out, seed, trace, baseline, realtime_pacing } => {
            if let Some(s) = seed {
                sets.push(format!("seed={s}"));
            }
            if let Some(Baseline::Pd) = baseline {
                sets.push("controller=\"pd\"".into());
            }
            let mut cfg = load_config(&config, &sets)?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            if let Some(t) = trace {
                cfg.output.trace = t;
            }
            cfg.output.realtime_pacing |= realtime_pacing;
            let outcome = run(&cfg)?;
            let last = outcome.trials.last().map_or(f64::NAN, |t| t.mean_mae);
            println!("{} trials, last mean MAE {last:.5} rad -> {}", outcome.trials.len(), outcome.dir.display());
            if let Some(s) = outcome.manifest.step_compute {
                println!("step compute: median {:.0} us, p99 {:.0} us", s.median_us, s.p99_us);
            }
            Ok(())
        }
        Cmd::Sweep { config, grid, sets, out, workers } => {
            let text = std::fs::read_to_string(&grid).map_err(|e| CliError::Parse(format!("{}: {e}", grid.display())))?;
            let grid = Grid::parse(&text)?;
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let results = sweep(&config, &sets, &grid, &out, workers)?;
            for r in &results {
                match &r.final_mae {
                    Ok(m) => println!("point {:3} final MAE {m:.5}  {}", r.index, r.overrides.join(" ")),
                    Err(e) => println!("point {:3} FAILED {e}  {}", r.index, r.overrides.join(" ")),
                }
            }
            println!("summary: {}", out.join("summary.csv").display());
            Ok(())
        }
        Cmd::Validate { config, sets } => {
            let cfg = load_config(&config, &sets)?;
            print!("{}", cfg.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
