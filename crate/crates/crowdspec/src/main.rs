//! Thin command-line front end over the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crowdspec::experiment::{
    estimate_reliability, generate_dataset, run_sweep, theory_curves, write_theory_curves,
    ExperimentConfig, RealDataset,
};
use crowdspec::rng::stream;
use crowdspec::Error;

#[derive(Parser)]
#[command(name = "crowdspec", version, about = "Typed crowdsourcing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (responses, truth, types, pilot flags).
    Generate(Common),
    /// Run a single configuration (no sweep lists) for its trials.
    Run(Common),
    /// Run the full grid sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker pool size (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Emit the theory-curve CSV for the configured grid.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Target accuracy for the bounds.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Estimate the empirical reliability table from a collected dataset.
    Ingest(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) | Error::InvalidParameter(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    common.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let dir = out_dir(&common, &cfg);
            let seed = common.seed.unwrap_or(cfg.sweep.master_seed);
            generate_dataset(&cfg, &dir, &mut stream(seed))?;
            println!("dataset written to {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(common) => {
            let cfg = ExperimentConfig::load(&common.config)?;
            if !cfg.is_single() {
                return Err(Error::Config(
                    "config has sweep lists; use the sweep subcommand".into(),
                ));
            }
            sweep_and_report(&cfg, &common, 1)
        }
        Command::Sweep { common, jobs } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            sweep_and_report(&cfg, &common, jobs)
        }
        Command::Bounds { common, alpha } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let rows = theory_curves(&cfg, alpha)?;
            let dir = out_dir(&common, &cfg);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("bounds.csv");
            write_theory_curves(&rows, &path)?;
            println!("bounds written to {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Ingest(common) => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let data_block = cfg
                .data
                .as_ref()
                .ok_or_else(|| Error::Config("ingest needs a [data] block".into()))?;
            let data = RealDataset::load(data_block)?;
            let est = estimate_reliability(&data)?;
            let dir = out_dir(&common, &cfg);
            std::fs::create_dir_all(&dir)?;
            let table_path = dir.join("empirical_reliability.csv");
            std::fs::write(&table_path, est.table_csv())?;
            let mut workers = String::from("worker_id,estimated_type\n");
            for (j, t) in est.worker_types.iter().enumerate() {
                let label =
                    t.map(|t| t.to_string()).unwrap_or_else(|| "unassigned".into());
                workers.push_str(&format!("{},{}\n", data.worker_ids[j], label));
            }
            std::fs::write(dir.join("worker_types.csv"), workers)?;
            println!(
                "{} tasks, {} workers; empirical table written to {}",
                data.m(),
                data.n(),
                table_path.display()
            );
            if !est.below_half.is_empty() {
                println!("cells below 1/2: {:?}", est.below_half);
            }
            if !est.undefined_cells.is_empty() {
                println!("cells with no data: {:?}", est.undefined_cells);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn sweep_and_report(
    cfg: &ExperimentConfig,
    common: &Common,
    jobs: usize,
) -> Result<ExitCode, Error> {
    let dir = out_dir(common, cfg);
    let report = run_sweep(cfg, Some(&dir), common.seed, jobs)?;
    let ok = report.records.iter().filter(|r| r.success).count();
    println!(
        "{} trials ({} ok, {} failed); results in {}",
        report.records.len(),
        ok,
        report.records.len() - ok,
        dir.display()
    );
    for row in &report.aggregates {
        let le = row
            .label_error_mean
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        let ce = row
            .clustering_error_mean
            .or(row.ss_restricted_mean)
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "  config {} [{}] label_error {} clustering {} ({}/{} ok)",
            row.config_id, row.estimator, le, ce, row.successes, row.trials
        );
    }
    if report.all_failed() {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
