//! Training loop: minibatch gradient accumulation, Adam, best-epoch
//! selection on validation accuracy.
//!
//! Data routing per variant: `single` consumes one locale's training data;
//! `union` adds the anchor locale's data (the locale with the most training
//! utterances) filtered to domains in the target locale's set; the rest
//! consume everything. The whole run is a function of (config, corpus):
//! shuffles are seeded per epoch, dropout draws from one derived stream, and
//! parameter initialization order is fixed.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, GeneratedCorpus};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::model::{
    build_variant, AnyModel, EncodedExample, LossBreakdown, ModelDims, ModelHyper, Variant,
};
use crate::optim::{Adam, AdamConfig};
use crate::registry::{DomainRegistry, LocaleId};
use crate::rng::SeededRng;
use crate::tape::Tape;
use crate::tensor::Tensor;
use crate::vocab::Vocabulary;

fn default_batch_size() -> usize {
    64
}
fn default_epochs() -> usize {
    20
}
fn default_dropout() -> f64 {
    0.5
}
fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dims: ModelDims,
    #[serde(default = "default_lambda")]
    pub adversarial_lambda: f64,
    #[serde(default)]
    pub embeddings_trainable: bool,
    #[serde(default)]
    pub literal_neg_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            adam: AdamConfig::default(),
            dropout: default_dropout(),
            seed: 0,
            dims: ModelDims::default(),
            adversarial_lambda: default_lambda(),
            embeddings_trainable: false,
            literal_neg_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn hyper(&self) -> ModelHyper {
        ModelHyper {
            dropout: self.dropout,
            adversarial_enabled: false,
            adversarial_lambda: self.adversarial_lambda,
            literal_neg_loss: self.literal_neg_loss,
            embeddings_trainable: self.embeddings_trainable,
        }
    }
}

/// One line of the newline-delimited training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogRecord {
    Header {
        variant: String,
        locale: Option<String>,
        seed: u64,
        epochs: usize,
        batch_size: usize,
        adversarial_lambda: f64,
        train_examples: usize,
    },
    Train {
        epoch: usize,
        split: String,
        total: f64,
        l_adv: f64,
        l_loc: f64,
        l_pred: f64,
    },
    Val {
        epoch: usize,
        split: String,
        accuracy: f64,
        best_so_far: bool,
    },
    Warning {
        warning: String,
    },
}

pub struct TrainOutcome {
    pub model: AnyModel,
    pub variant: Variant,
    pub locale: Option<LocaleId>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub log: Vec<LogRecord>,
    /// Training utterances consumed, by locale name (instrumentation).
    pub consumed_by_locale: std::collections::BTreeMap<String, usize>,
}

/// The locale whose data `union` borrows: the one with the most training
/// utterances (ties resolved by registry order).
pub fn anchor_locale(train: &Corpus, registry: &DomainRegistry) -> LocaleId {
    let mut counts = vec![0usize; registry.locale_count()];
    for u in &train.utterances {
        if let Ok(l) = registry.locale_id(&u.locale) {
            counts[l.0] += 1;
        }
    }
    let mut best = LocaleId(0);
    for l in registry.locale_ids() {
        if counts[l.0] > counts[best.0] {
            best = l;
        }
    }
    best
}

/// Training utterances a variant consumes, in corpus order.
fn select_training<'c>(
    variant: Variant,
    locale: Option<LocaleId>,
    data: &'c GeneratedCorpus,
    registry: &DomainRegistry,
) -> Result<Vec<&'c crate::corpus::Utterance>> {
    match variant {
        Variant::Single | Variant::Union => {
            let target = locale
                .ok_or_else(|| Error::Config(format!("variant {variant} requires a locale")))?;
            let target_name = registry.locale_name(target);
            let mut selected: Vec<_> = data
                .train
                .utterances
                .iter()
                .filter(|u| u.locale == target_name)
                .collect();
            if variant == Variant::Union {
                let anchor = anchor_locale(&data.train, registry);
                if anchor != target {
                    let anchor_name = registry.locale_name(anchor);
                    selected.extend(data.train.utterances.iter().filter(|u| {
                        u.locale == anchor_name && registry.available(&u.domain, target)
                    }));
                }
            }
            Ok(selected)
        }
        _ => Ok(data.train.utterances.iter().collect()),
    }
}

/// Validation subset a variant is selected on: its own locale for the
/// per-locale baselines, everything otherwise.
fn select_validation(
    variant: Variant,
    locale: Option<LocaleId>,
    data: &GeneratedCorpus,
    registry: &DomainRegistry,
) -> Corpus {
    match (variant.per_locale(), locale) {
        (true, Some(l)) => {
            let name = registry.locale_name(l);
            Corpus {
                utterances: data
                    .val
                    .utterances
                    .iter()
                    .filter(|u| u.locale == name)
                    .cloned()
                    .collect(),
            }
        }
        _ => data.val.clone(),
    }
}

fn encode_examples(
    utterances: &[&crate::corpus::Utterance],
    vocab: &Vocabulary,
    registry: &DomainRegistry,
) -> Result<Vec<EncodedExample>> {
    utterances
        .iter()
        .map(|u| {
            EncodedExample::new(
                &u.text,
                &u.domain,
                registry.locale_id(&u.locale)?,
                vocab,
                registry,
            )
        })
        .collect()
}

/// Overall top-1 accuracy of a model over a corpus (its served locales).
pub fn overall_accuracy(
    model: &AnyModel,
    name: &str,
    corpus: &Corpus,
    registry: &DomainRegistry,
) -> Result<f64> {
    let outcome = evaluate(model, name, corpus, registry)?;
    let (correct, support) = outcome
        .report
        .rows
        .iter()
        .fold((0usize, 0usize), |(c, s), row| {
            (c + row.cells[0].correct, s + row.cells[0].support)
        });
    if support == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * correct as f64 / support as f64)
}

/// Train one variant on the generated corpus. Returns the model restored to
/// its best-validation epoch, the log, and instrumentation counters.
pub fn train(
    variant: Variant,
    locale: Option<LocaleId>,
    data: &GeneratedCorpus,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let registry = &data.registry;
    let selected = select_training(variant, locale, data, registry)?;
    if selected.is_empty() {
        return Err(Error::Input(format!(
            "no training data selected for {variant}"
        )));
    }
    let mut consumed_by_locale = std::collections::BTreeMap::new();
    for u in &selected {
        *consumed_by_locale.entry(u.locale.clone()).or_insert(0) += 1;
    }

    let vocab = Vocabulary::build(selected.iter().map(|u| u.text.as_str()));
    let mut hyper = config.hyper();
    hyper.adversarial_enabled = matches!(variant, Variant::UniversalAdv);
    let mut init_rng = SeededRng::new(config.seed).derive("init");
    let mut model = build_variant(
        variant,
        locale,
        vocab.clone(),
        registry,
        config.dims,
        hyper,
        &mut init_rng,
    )?;

    let examples = encode_examples(&selected, &vocab, registry)?;
    let val_corpus = select_validation(variant, locale, data, registry);
    let model_name = variant.name().to_string();

    let mut adam = Adam::new(config.adam, model.store());
    let mut dropout_rng = SeededRng::new(config.seed).derive("dropout");

    let mut log = vec![LogRecord::Header {
        variant: model_name.clone(),
        locale: locale.map(|l| registry.locale_name(l).to_string()),
        seed: config.seed,
        epochs: config.epochs,
        batch_size: config.batch_size,
        adversarial_lambda: if hyper.adversarial_enabled {
            hyper.adversarial_lambda
        } else {
            0.0
        },
        train_examples: examples.len(),
    }];

    let mut best_epoch = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_params: Vec<Tensor> = Vec::new();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        SeededRng::new(config.seed.wrapping_add(epoch as u64)).shuffle(&mut order);

        let mut sums = LossBreakdown::default();
        for batch in order.chunks(config.batch_size) {
            model.store_mut().zero_grads();
            for &i in batch {
                let ex = &examples[i];
                let mut tape = Tape::new();
                let (objective, parts) =
                    model.example_loss(&mut tape, ex, &mut dropout_rng, true)?;
                tape.backward(model.store_mut(), objective)?;
                sums.l_adv += parts.l_adv;
                sums.l_loc += parts.l_loc;
                sums.l_pred += parts.l_pred;
            }
            adam.step(model.store_mut())?;
        }

        let n = examples.len() as f64;
        let mean = LossBreakdown {
            l_adv: sums.l_adv / n,
            l_loc: sums.l_loc / n,
            l_pred: sums.l_pred / n,
            total: (sums.l_adv + sums.l_loc + sums.l_pred) / n,
        };
        epoch_losses.push(mean.total);
        log.push(LogRecord::Train {
            epoch,
            split: "train".into(),
            total: mean.total,
            l_adv: mean.l_adv,
            l_loc: mean.l_loc,
            l_pred: mean.l_pred,
        });

        let val_accuracy = overall_accuracy(&model, &model_name, &val_corpus, registry)?;
        let improved = val_accuracy > best_val;
        if improved {
            best_val = val_accuracy;
            best_epoch = epoch;
            best_params = model
                .store()
                .iter()
                .map(|(_, p)| p.value.clone())
                .collect();
        }
        log.push(LogRecord::Val {
            epoch,
            split: "val".into(),
            accuracy: val_accuracy,
            best_so_far: improved,
        });
    }

    if config.epochs >= 2 {
        let decreased = epoch_losses.windows(2).any(|w| w[1] < w[0]);
        if !decreased {
            log.push(LogRecord::Warning {
                warning: format!(
                    "training loss never decreased over {} epochs",
                    config.epochs
                ),
            });
        }
    }

    // Restore the best-validation parameters (ties kept the earliest epoch).
    let ids: Vec<_> = model.store().ids().collect();
    for (pid, value) in ids.into_iter().zip(best_params) {
        model.store_mut().get_mut(pid).value = value;
    }

    Ok(TrainOutcome {
        model,
        variant,
        locale,
        best_epoch,
        best_val_accuracy: best_val,
        log,
        consumed_by_locale,
    })
}

pub fn render_log(log: &[LogRecord]) -> String {
    let mut out = String::new();
    for record in log {
        out.push_str(&serde_json::to_string(record).expect("log serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusConfig, DomainSpec, LocaleSpec, SlotSpec, SplitCounts};
    use crate::presets::tiny_corpus_config;
    use std::collections::BTreeMap;

    fn tiny_dims() -> ModelDims {
        ModelDims {
            embed_dim: 8,
            lstm_dim: 6,
            attn_dim: 4,
            head_hidden: 8,
        }
    }

    fn quick_config(seed: u64, epochs: usize) -> TrainConfig {
        TrainConfig {
            batch_size: 16,
            epochs,
            dropout: 0.2,
            seed,
            dims: tiny_dims(),
            embeddings_trainable: true,
            ..Default::default()
        }
    }

    /// One locale, two cleanly separable domains, 50 training utterances.
    fn separable_corpus() -> GeneratedCorpus {
        let domain = |name: &str, template: &str, values: &[&str]| DomainSpec {
            name: name.into(),
            locale_specific: false,
            templates: vec![template.into()],
            extra_templates: BTreeMap::new(),
            slots: BTreeMap::from([(
                "x".to_string(),
                SlotSpec::Shared {
                    values: values.iter().map(|s| s.to_string()).collect(),
                },
            )]),
            counts: BTreeMap::from([(
                "US".to_string(),
                SplitCounts {
                    train: 25,
                    val: 6,
                    test: 10,
                },
            )]),
        };
        let config = CorpusConfig {
            seed: 21,
            small_threshold: 20,
            locales: vec!["US".into()],
            locale_totals: BTreeMap::from([(
                "US".to_string(),
                LocaleSpec {
                    train: 50,
                    val: 12,
                    test: 20,
                },
            )]),
            domains: vec![
                domain("music", "play {x} right now", &["jazz", "rock", "blues", "pop"]),
                domain(
                    "weather",
                    "weather forecast for {x}",
                    &["seattle", "london", "boston", "denver"],
                ),
            ],
        };
        crate::corpus::generate(&config).unwrap()
    }

    #[test]
    fn separable_two_domain_run_reaches_full_training_accuracy() {
        let data = separable_corpus();
        let outcome = train(
            Variant::Universal,
            None,
            &data,
            &quick_config(3, 20),
        )
        .unwrap();
        let acc = overall_accuracy(&outcome.model, "universal", &data.train, &data.registry)
            .unwrap();
        assert_eq!(acc, 100.0, "separable corpus should be memorized");
    }

    #[test]
    fn single_variant_consumes_only_its_locale() {
        let data = crate::corpus::generate(&tiny_corpus_config(5)).unwrap();
        let gb = data.registry.locale_id("GB").unwrap();
        let outcome = train(Variant::Single, Some(gb), &data, &quick_config(1, 1)).unwrap();
        assert_eq!(outcome.consumed_by_locale.len(), 1);
        assert!(outcome.consumed_by_locale.contains_key("GB"));
    }

    #[test]
    fn union_variant_adds_anchor_locale_data() {
        let data = crate::corpus::generate(&tiny_corpus_config(5)).unwrap();
        let gb = data.registry.locale_id("GB").unwrap();
        let outcome = train(Variant::Union, Some(gb), &data, &quick_config(1, 1)).unwrap();
        // US is the anchor (largest training split); every US domain exists
        // in GB, so all US data is consumed alongside GB's own.
        let us_total = data
            .train
            .utterances
            .iter()
            .filter(|u| u.locale == "US")
            .count();
        let gb_total = data
            .train
            .utterances
            .iter()
            .filter(|u| u.locale == "GB")
            .count();
        assert_eq!(outcome.consumed_by_locale["US"], us_total);
        assert_eq!(outcome.consumed_by_locale["GB"], gb_total);
    }

    #[test]
    fn union_of_the_anchor_locale_is_exactly_single() {
        // For the anchor (US) there is nothing to add, so single and union
        // take bit-identical training trajectories.
        let data = crate::corpus::generate(&tiny_corpus_config(5)).unwrap();
        let us = data.registry.locale_id("US").unwrap();
        let config = quick_config(9, 2);
        let a = train(Variant::Single, Some(us), &data, &config).unwrap();
        let b = train(Variant::Union, Some(us), &data, &config).unwrap();
        assert_eq!(a.consumed_by_locale, b.consumed_by_locale);
        for (pa, pb) in a.model.store().ids().zip(b.model.store().ids()) {
            let (pa, pb) = (a.model.store().get(pa), b.model.store().get(pb));
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&pa.value), bits(&pb.value), "{}", pa.name);
        }
        assert_eq!(a.best_val_accuracy, b.best_val_accuracy);
    }

    #[test]
    fn same_seed_reproduces_identical_checkpoints() {
        let data = crate::corpus::generate(&tiny_corpus_config(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut files = Vec::new();
        for run in 0..2 {
            let outcome = train(Variant::Universal, None, &data, &quick_config(4, 2)).unwrap();
            let path = dir.path().join(format!("u{run}.ckpt"));
            crate::checkpoint::save(
                &outcome.model,
                Variant::Universal,
                None,
                &data.registry,
                outcome.best_epoch,
                outcome.best_val_accuracy,
                &path,
            )
            .unwrap();
            files.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(files[0], files[1]);
    }

    #[test]
    fn locale_specific_batch_leaves_other_heads_bit_identical() {
        let data = crate::corpus::generate(&tiny_corpus_config(5)).unwrap();
        let registry = &data.registry;
        let gb = registry.locale_id("GB").unwrap();

        // Fresh universal model plus one GB restaurant_booking example
        // (locale-specific, so the sharing set is {GB}).
        let vocab = Vocabulary::build(
            data.train.utterances.iter().map(|u| u.text.as_str()),
        );
        let mut rng = SeededRng::new(2);
        let mut model = build_variant(
            Variant::Universal,
            None,
            vocab.clone(),
            registry,
            tiny_dims(),
            TrainConfig::default().hyper(),
            &mut rng,
        )
        .unwrap();
        let utt = data
            .train
            .utterances
            .iter()
            .find(|u| u.domain == "restaurant_booking" && u.locale == "GB")
            .unwrap();
        let ex = EncodedExample::new(&utt.text, &utt.domain, gb, &vocab, registry).unwrap();

        let us_head_ids = match &model {
            AnyModel::Universal(m) => m.heads[registry.locale_id("US").unwrap().0].param_ids(),
            AnyModel::Baseline(_) => unreachable!(),
        };
        let before: Vec<Vec<u64>> = us_head_ids
            .iter()
            .map(|&p| {
                model
                    .store()
                    .get(p)
                    .value
                    .data()
                    .iter()
                    .map(|v| v.to_bits())
                    .collect()
            })
            .collect();

        let mut adam = Adam::new(AdamConfig::default(), model.store());
        model.store_mut().zero_grads();
        let mut tape = Tape::new();
        let mut drop_rng = SeededRng::new(0);
        let (objective, _) = model
            .example_loss(&mut tape, &ex, &mut drop_rng, true)
            .unwrap();
        tape.backward(model.store_mut(), objective).unwrap();
        adam.step(model.store_mut()).unwrap();

        for (pid, old_bits) in us_head_ids.iter().zip(&before) {
            let now: Vec<u64> = model
                .store()
                .get(*pid)
                .value
                .data()
                .iter()
                .map(|v| v.to_bits())
                .collect();
            assert_eq!(&now, old_bits, "US head moved on a GB-only example");
        }
    }

    #[test]
    fn best_epoch_is_earliest_validation_maximum() {
        let data = crate::corpus::generate(&tiny_corpus_config(5)).unwrap();
        let outcome = train(Variant::Universal, None, &data, &quick_config(8, 4)).unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut best_epoch = 0;
        for record in &outcome.log {
            if let LogRecord::Val {
                epoch, accuracy, ..
            } = record
            {
                if *accuracy > best {
                    best = *accuracy;
                    best_epoch = *epoch;
                }
            }
        }
        assert_eq!(outcome.best_epoch, best_epoch);
        assert_eq!(outcome.best_val_accuracy, best);
    }

    #[test]
    fn log_loss_components_sum_to_total() {
        let data = crate::corpus::generate(&tiny_corpus_config(5)).unwrap();
        let outcome = train(Variant::UniversalAdv, None, &data, &quick_config(6, 2)).unwrap();
        let mut saw_train = false;
        for record in &outcome.log {
            if let LogRecord::Train {
                total,
                l_adv,
                l_loc,
                l_pred,
                ..
            } = record
            {
                saw_train = true;
                assert!((total - (l_adv + l_loc + l_pred)).abs() < 1e-9);
            }
        }
        assert!(saw_train);
    }
}
