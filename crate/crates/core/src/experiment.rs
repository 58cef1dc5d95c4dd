//! End-to-end experiment pipeline: generate data, train every requested
//! variant, evaluate each on the test split, and write a combined report.
//!
//! Everything lands under one output directory:
//!
//! ```text
//! out/
//!   config.json          echo of the experiment config
//!   registry.json        domain registry
//!   train.tsv val.tsv test.tsv
//!   stats.txt            corpus statistics tables
//!   <variant>[.<locale>].ckpt / .log.ndjson
//!   report.txt           combined accuracy table
//!   report.csv
//! ```
//!
//! Re-running with an existing output directory skips any variant whose
//! checkpoint is already present, so interrupted experiments resume.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::corpus::{generate, stats, CorpusConfig, GeneratedCorpus};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalOutcome, EvalReport};
use crate::model::Variant;
use crate::registry::{DomainRegistry, LocaleId};
use crate::trainer::{render_log, train, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "all_variants")]
    pub variants: Vec<Variant>,
}

fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub struct ExperimentResult {
    pub report: EvalReport,
    pub data: GeneratedCorpus,
    /// Sum of out-of-locale predictions across every evaluation (must be 0).
    pub out_of_set_predictions: usize,
    pub out_dir: PathBuf,
}

/// Generate (or reuse) the corpus files in `out_dir`.
pub fn ensure_data(config: &CorpusConfig, out_dir: &Path) -> Result<GeneratedCorpus> {
    std::fs::create_dir_all(out_dir)?;
    let generated = generate(config)?;
    generated.registry.save(&out_dir.join("registry.json"))?;
    generated.train.save(&out_dir.join("train.tsv"))?;
    generated.val.save(&out_dir.join("val.tsv"))?;
    generated.test.save(&out_dir.join("test.tsv"))?;
    let st = stats(&generated)?;
    std::fs::write(out_dir.join("stats.txt"), st.render(&config.locales))?;
    Ok(generated)
}

/// The (variant, locale) training jobs an experiment runs: per-locale
/// variants expand to one job per locale.
pub fn jobs(variants: &[Variant], registry: &DomainRegistry) -> Vec<(Variant, Option<LocaleId>)> {
    let mut out = Vec::new();
    for &v in variants {
        if v.per_locale() {
            for l in registry.locale_ids() {
                out.push((v, Some(l)));
            }
        } else {
            out.push((v, None));
        }
    }
    out
}

/// Train one job, writing its checkpoint and log; reuses an existing
/// checkpoint when present (resume semantics). Returns the evaluation
/// outcome on the test split.
pub fn run_job(
    variant: Variant,
    locale: Option<LocaleId>,
    data: &GeneratedCorpus,
    config: &TrainConfig,
    out_dir: &Path,
) -> Result<EvalOutcome> {
    let registry = &data.registry;
    let locale_name = locale.map(|l| registry.locale_name(l).to_string());
    let ckpt_path = out_dir.join(checkpoint::file_name(variant, locale_name.as_deref()));

    let model = if ckpt_path.exists() {
        let (model, _header) = checkpoint::load(&ckpt_path, registry)?;
        model
    } else {
        let outcome = train(variant, locale, data, config)?;
        checkpoint::save(
            &outcome.model,
            variant,
            locale,
            registry,
            outcome.best_epoch,
            outcome.best_val_accuracy,
            &ckpt_path,
        )?;
        let log_path = out_dir.join(format!(
            "{}.log.ndjson",
            match &locale_name {
                Some(l) => format!("{}.{}", variant.name(), l),
                None => variant.name().to_string(),
            }
        ));
        std::fs::write(log_path, render_log(&outcome.log))?;
        outcome.model
    };

    evaluate(&model, variant.name(), &data.test, registry)
}

/// Run the full experiment. `out_dir` is created if needed; existing
/// checkpoints under it are reused rather than retrained.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentResult> {
    let data = ensure_data(&config.corpus, out_dir)?;
    config.save(&out_dir.join("config.json"))?;

    let mut reports = Vec::new();
    let mut out_of_set = 0usize;
    for (variant, locale) in jobs(&config.variants, &data.registry) {
        let outcome = run_job(variant, locale, &data, &config.train, out_dir)?;
        out_of_set += outcome.out_of_set_predictions;
        reports.push(outcome.report);
    }

    let mut report = EvalReport::merge(reports);
    let model_order: Vec<String> = config.variants.iter().map(|v| v.name().to_string()).collect();
    report.sort_rows(&config.corpus.locales, &model_order);

    std::fs::write(out_dir.join("report.txt"), report.render_table())?;
    std::fs::write(out_dir.join("report.csv"), report.render_csv())?;

    if out_of_set > 0 {
        return Err(Error::Routing(format!(
            "{out_of_set} test predictions fell outside their request locale's domain set"
        )));
    }

    Ok(ExperimentResult {
        report,
        data,
        out_of_set_predictions: out_of_set,
        out_dir: out_dir.to_path_buf(),
    })
}
