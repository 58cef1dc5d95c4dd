//! Command-line harness for reproducible multi-locale domain-classification
//! experiments: corpus generation, training, evaluation, gradient checking,
//! and the end-to-end experiment pipeline.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage/config error,
//! 3 artifact incompatibility.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use unidomain_core::checkpoint;
use unidomain_core::corpus::{stats, Corpus, CorpusConfig};
use unidomain_core::error::Error;
use unidomain_core::eval::evaluate;
use unidomain_core::experiment::{ensure_data, jobs, run_experiment, ExperimentConfig};
use unidomain_core::gradcheck;
use unidomain_core::model::Variant;
use unidomain_core::presets;
use unidomain_core::registry::DomainRegistry;
use unidomain_core::trainer::{render_log, train};

#[derive(Parser)]
#[command(
    name = "unidomain",
    about = "Multi-locale domain classification experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Default,
    Tiny,
}

#[derive(Subcommand)]
enum Command {
    /// Write a starter experiment config.
    InitConfig {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "default")]
        preset: Preset,
    },
    /// Generate the synthetic corpus, registry, and stats report.
    GenerateData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the corpus seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one variant on previously generated data.
    Train {
        #[arg(long)]
        variant: String,
        #[arg(long)]
        config: PathBuf,
        /// Directory holding the generated data; checkpoints land here too.
        #[arg(long)]
        out: PathBuf,
        /// Locale for the per-locale variants (default: all locales).
        #[arg(long)]
        locale: Option<String>,
    },
    /// Evaluate a checkpoint on a test corpus.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the finite-difference gradient-check suite.
    Gradcheck {
        /// Also check the composed universal model end to end.
        #[arg(long)]
        full: bool,
        /// Negative control: corrupt one backward pass and expect failure.
        #[arg(long, hide = true)]
        corrupt_backward: bool,
    },
    /// Generate data, train every configured variant, evaluate, and write a
    /// combined report. Existing checkpoints are reused.
    RunExperiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Input(_) | Error::Parse { .. } | Error::Json(_) => 2,
        Error::CheckpointMismatch(_) => 3,
        Error::Io(_) => 2,
        _ => 1,
    }
}

/// Accept either a full experiment config or a bare corpus config.
fn load_corpus_config(path: &Path) -> Result<CorpusConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("corpus").is_some() {
        let config: ExperimentConfig = serde_json::from_value(value)?;
        Ok(config.corpus)
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::InitConfig { out, preset } => {
            let config = match preset {
                Preset::Default => presets::desk_experiment_config(),
                Preset::Tiny => presets::tiny_experiment_config(),
            };
            config.save(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::GenerateData { config, out, seed } => {
            let mut corpus_config = load_corpus_config(&config)?;
            if let Some(seed) = seed {
                corpus_config.seed = seed;
            }
            let generated = ensure_data(&corpus_config, &out)?;
            let st = stats(&generated)?;
            print!("{}", st.render(&corpus_config.locales));
            println!(
                "wrote registry.json, train.tsv, val.tsv, test.tsv, stats.txt under {}",
                out.display()
            );
            Ok(())
        }
        Command::Train {
            variant,
            config,
            out,
            locale,
        } => {
            let variant = Variant::parse(&variant)?;
            let experiment = ExperimentConfig::load(&config)?;
            let data = ensure_data(&experiment.corpus, &out)?;
            let registry = &data.registry;

            let selected_jobs: Vec<_> = match (&locale, variant.per_locale()) {
                (Some(name), _) => vec![(variant, Some(registry.locale_id(name)?))],
                (None, true) => jobs(&[variant], registry),
                (None, false) => vec![(variant, None)],
            };
            for (variant, locale) in selected_jobs {
                let locale_name = locale.map(|l| registry.locale_name(l).to_string());
                let outcome = train(variant, locale, &data, &experiment.train)?;
                let ckpt = out.join(checkpoint::file_name(variant, locale_name.as_deref()));
                checkpoint::save(
                    &outcome.model,
                    variant,
                    locale,
                    registry,
                    outcome.best_epoch,
                    outcome.best_val_accuracy,
                    &ckpt,
                )?;
                let log_name = match &locale_name {
                    Some(l) => format!("{}.{}.log.ndjson", variant.name(), l),
                    None => format!("{}.log.ndjson", variant.name()),
                };
                std::fs::write(out.join(&log_name), render_log(&outcome.log))?;
                match locale_name {
                    Some(l) => println!(
                        "{} [{}]: best validation accuracy {:.2}% (epoch {}) -> {}",
                        variant.name(),
                        l,
                        outcome.best_val_accuracy,
                        outcome.best_epoch,
                        ckpt.display()
                    ),
                    None => println!(
                        "{}: best validation accuracy {:.2}% (epoch {}) -> {}",
                        variant.name(),
                        outcome.best_val_accuracy,
                        outcome.best_epoch,
                        ckpt.display()
                    ),
                }
            }
            Ok(())
        }
        Command::Evaluate {
            checkpoint: ckpt_path,
            test,
            registry,
            format,
            out,
        } => {
            let registry = DomainRegistry::load(&registry)?;
            let (model, header) = checkpoint::load(&ckpt_path, &registry)?;
            let corpus = Corpus::load(&test)?;
            let outcome = evaluate(&model, header.variant.name(), &corpus, &registry)?;
            let rendered = match format {
                ReportFormat::Table => outcome.report.render_table(),
                ReportFormat::Csv => outcome.report.render_csv(),
            };
            match out {
                Some(path) => std::fs::write(path, rendered)?,
                None => print!("{rendered}"),
            }
            if outcome.out_of_set_predictions > 0 {
                return Err(Error::Routing(format!(
                    "{} predictions outside the request locale's domain set",
                    outcome.out_of_set_predictions
                )));
            }
            Ok(())
        }
        Command::Gradcheck {
            full,
            corrupt_backward,
        } => {
            let entries = gradcheck::suite(full, corrupt_backward)?;
            let mut failed = false;
            for e in &entries {
                let status = if e.passed() { "ok" } else { "FAIL" };
                println!(
                    "{status:<5} {:<28} max rel err {:.3e} (threshold {:.0e}{})",
                    e.name,
                    e.max_rel_error,
                    e.threshold,
                    if e.worst_param.is_empty() {
                        String::new()
                    } else {
                        format!(", worst {}", e.worst_param)
                    }
                );
                failed |= !e.passed();
            }
            if failed {
                let worst = entries
                    .iter()
                    .filter(|e| !e.passed())
                    .map(|e| e.name)
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(Error::NonFinite {
                    context: format!("gradient check failed: {worst}"),
                });
            }
            println!("all gradient checks passed");
            Ok(())
        }
        Command::RunExperiment { config, out } => {
            let experiment = ExperimentConfig::load(&config)?;
            let result = run_experiment(&experiment, &out)?;
            print!("{}", result.report.render_table());
            println!("\nreport written to {}", out.join("report.txt").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
