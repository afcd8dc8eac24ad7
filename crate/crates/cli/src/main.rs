//! `tdho`: batch driver for the verification runs.
//!
//! Exit codes: 0 when every checked metric passes, 2 when any fails, 1 on errors.

mod commands;
mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use rayon::prelude::*;

use commands::Subcommand;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "tdho", version, about = "Verification runs for time-decaying harmonic oscillator scattering")]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// JSON run config: one object or an array of runs.
    #[arg(long)]
    config: PathBuf,
    /// Output root; each run writes into `<out>/<run id>/`.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps and independent series.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write TDHO snapshots of final states (also enabled per run by `output.snapshot`).
    #[arg(long)]
    snapshot: bool,
}

fn run_one(cli: &Cli, cfg: &RunConfig, setup: &config::Setup) -> Result<bool> {
    let (output, snapshots) = commands::run(cli.command, cfg, setup).with_context(|| format!("run {:?}", cfg.id))?;
    let dir = cli.out.join(&cfg.id);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = cli.command.name();
    report::write_report(&dir.join(format!("{name}.csv")), &cfg.id, name, &cfg.echo(), &output.rows)?;
    for table in &output.tables {
        report::write_table(&dir.join(format!("{name}_{}.csv", table.name)), table)?;
    }
    if cli.snapshot || cfg.output.snapshot {
        for (label, psi) in &snapshots {
            write_snapshot(&dir.join(format!("{name}_{label}.tdho")), psi)?;
        }
    }
    let failed = output.rows.iter().filter(|r| !r.pass).count();
    for r in output.rows.iter().filter(|r| !r.pass) {
        log::warn!("{}: {} = {:e} fails tolerance {:?}", cfg.id, r.metric, r.value, r.tolerance);
    }
    println!("{} {name}: {} metrics, {failed} failed", cfg.id, output.rows.len());
    Ok(output.all_pass())
}

fn write_snapshot(path: &Path, psi: &tdho::WaveFunction) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    tdho::snapshot::write_snapshot(psi, std::io::BufWriter::new(file))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TDHO_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = (|| -> Result<Vec<Result<bool>>> {
        let runs = config::load(&cli.config)?;
        let setups = runs
            .iter()
            .map(|r| r.setup().with_context(|| format!("invalid config for run {:?}", r.id)))
            .collect::<Result<Vec<_>>>()?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build()?;
        Ok(pool.install(|| runs.par_iter().zip(&setups).map(|(cfg, s)| run_one(&cli, cfg, s)).collect()))
    })();
    match outcome {
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(results) => {
            let mut code = 0;
            for r in results {
                match r {
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        code = 1;
                    }
                    Ok(false) if code == 0 => code = 2,
                    Ok(_) => {}
                }
            }
            ExitCode::from(code)
        }
    }
}
