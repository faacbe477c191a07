use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use holonomy_cli::{run, sweep_csv, Artifacts, CliError, Scenario};

#[derive(Parser)]
#[command(name = "holonomy", version, about = "Run holonomic approximation scenarios")]
struct Cli {
    /// Output directory (default: the scenario's `out`, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: HOLONOMY_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run { file: PathBuf },
    /// Re-run a scenario for each value of one parameter.
    Sweep {
        file: PathBuf,
        /// N_floor, delta, eps or grid.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut sc = Scenario::parse(&text)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    Ok(sc)
}

fn write(dir: &Path, a: &Artifacts) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("report.txt"), &a.report)?;
    fs::write(dir.join("metrics.csv"), &a.metrics)?;
    if let Some(svg) = &a.figure {
        fs::write(dir.join("figure.svg"), svg)?;
    }
    Ok(())
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("HOLONOMY_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::input(format!("HOLONOMY_THREADS = '{v}' is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> anyhow::Result<u8> {
    if let Some(t) = threads(cli.threads)? {
        if t == 0 {
            return Err(CliError::input("thread count must be positive").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Run { file } => {
            let sc = load(&file, cli.seed)?;
            let dir = cli.out.or_else(|| sc.out.clone()).unwrap_or_else(|| "out".into());
            let a = run(&sc)?;
            write(&dir, &a)?;
            print!("{}", a.report);
            Ok(if a.success { 0 } else { 2 })
        }
        Command::Sweep { file, param, values } => {
            if values.iter().all(|v| v.trim().is_empty()) {
                return Err(CliError::input("--values needs at least one value").into());
            }
            let base = load(&file, cli.seed)?;
            let dir = cli.out.or_else(|| base.out.clone()).unwrap_or_else(|| "out".into());
            let mut rows = Vec::new();
            for v in values.iter().map(|v| v.trim()).filter(|v| !v.is_empty()) {
                let mut sc = base.clone();
                sc.set(&param, v)?;
                let a = run(&sc)?;
                write(&dir.join(format!("{param}={v}")), &a)?;
                rows.push((v.to_string(), a));
            }
            let csv = sweep_csv(&param, &rows);
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("sweep.csv"), &csv)?;
            print!("{csv}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(2, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
