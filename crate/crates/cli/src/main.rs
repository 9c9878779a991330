use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mol_core::harness::{compare_files, report_importance, run_experiment, ExperimentConfig};
use mol_core::Error;

#[derive(Parser)]
#[command(name = "mol", version, about = "Micro-objective learning experiments")]
struct Cli {
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent seeds.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write per-seed and summary CSVs.
    Run { config: PathBuf },
    /// Compare two summary CSVs checkpoint by checkpoint.
    Compare {
        summary_a: PathBuf,
        summary_b: PathBuf,
    },
    /// Rank the sampled states of a trained run by micro-objective reward.
    ReportImportance {
        run_dir: PathBuf,
        /// Rows shown per band.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Band boundaries `low,high` on R_obj.
        #[arg(long, default_value = "0.2,0.4")]
        thresholds: String,
    },
}

fn parse_thresholds(raw: &str) -> Result<(f64, f64), Error> {
    let bad = || Error::Config {
        field: "thresholds".into(),
        message: format!("expected `low,high`, got `{raw}`"),
    };
    let (a, b) = raw.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn execute(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if cli.out.is_some() {
                cfg.out = cli.out;
            }
            if cfg.out.is_none() {
                return Err(Error::Config {
                    field: "out".into(),
                    message: "no output directory; set `out` in the config or pass --out".into(),
                });
            }
            let result = run_experiment(&cfg, cli.jobs)?;
            let last = result.summary.last();
            Ok(format!(
                "wrote {} seeds to {}; final checkpoint mean score {}\n",
                result.runs.len(),
                cfg.out
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
                last.map_or(0.0, |r| r.mean)
            ))
        }
        Command::Compare {
            summary_a,
            summary_b,
        } => {
            let table = compare_files(&summary_a, &summary_b)?.to_table();
            if let Some(out) = cli.out {
                std::fs::create_dir_all(&out).map_err(|e| Error::Runtime(e.to_string()))?;
                let path = out.join("comparison.csv");
                std::fs::write(&path, &table).map_err(|e| Error::Runtime(e.to_string()))?;
            }
            Ok(table)
        }
        Command::ReportImportance {
            run_dir,
            top,
            thresholds,
        } => {
            let thresholds = parse_thresholds(&thresholds)?;
            Ok(report_importance(&run_dir, thresholds)?.to_text(top))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
