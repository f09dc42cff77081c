use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use cfxcs::experiment::{self, ExperimentConfig, Mode};
use clap::{Parser, Subcommand};

/// Run and compare code-fragment XCS experiments.
#[derive(Debug, Parser)]
#[command(name = "cfxcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every seed of an experiment config (TOML, or a run's manifest.json).
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare two finished Boolean runs.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Also write the aligned mean accuracy curves to this CSV.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &PathBuf) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.resolved_output());
            let summary = experiment::run(&cfg, &dir).with_context(|| format!("run into {}", dir.display()))?;
            if let Some(cv) = &summary.cv {
                println!(
                    "{} folds x {} seeds: accuracy {:.4} (sd {:.4})",
                    cv.folds.len() / summary.seeds.len().max(1),
                    summary.seeds.len(),
                    cv.mean,
                    cv.sd
                );
            } else {
                for (seed, b) in summary.seeds.iter().zip(&summary.bundles) {
                    for (task, name) in b.task_names.iter().enumerate() {
                        let last = b.accuracy.iter().filter(|s| s.task == task).last();
                        println!(
                            "seed {seed} {name}: final accuracy {:.4}",
                            last.map_or(0.0, |s| s.accuracy)
                        );
                    }
                }
            }
            println!("wrote {}", dir.display());
        }
        Command::Compare { dir_a, dir_b, curves } => {
            let c = experiment::compare(&dir_a, &dir_b)?;
            print!("{}", c.render());
            if let Some(path) = curves {
                c.write_curves(&path)?;
            }
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            cfg.validate()?;
            let what = match cfg.mode {
                Mode::Multiclass => format!("dataset {}", cfg.dataset.as_ref().map_or_else(String::new, |d| d.path.display().to_string())),
                _ => format!("tasks {}", cfg.problems.tasks.join(", ")),
            };
            println!("ok: {:?} mode, {} seeds, {what}", cfg.mode, cfg.seeds.list().len());
        }
    }
    Ok(())
}
