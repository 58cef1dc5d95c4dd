//! Synthetic multi-locale corpus: generation, statistics, and TSV I/O.
//!
//! Utterances come from per-domain template pools with slot fills. A
//! locale-specific domain draws every slot from per-locale pools that are
//! disjoint across locales, so its surface patterns repeat across locales
//! while its slot vocabulary never does; shared domains draw from common
//! pools. Counts are explicit per (domain, locale, split), which makes the
//! generator's own bookkeeping the oracle for the stats report.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{is_small, Category, DomainEntry, DomainRegistry};
use crate::rng::SeededRng;
use crate::vocab::tokenize;

pub const DEFAULT_SMALL_THRESHOLD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub locale: String,
    pub domain: String,
    pub text: String,
}

impl Utterance {
    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.text)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// One utterance per line: `locale<TAB>domain<TAB>text`, UTF-8.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for u in &self.utterances {
            debug_assert!(!u.text.contains('\t') && !u.text.contains('\n'));
            writeln!(out, "{}\t{}\t{}", u.locale, u.domain, u.text).expect("string write");
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut utterances = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let locale = parts.next().unwrap_or_default();
            let domain = parts.next();
            let utt_text = parts.next();
            match (domain, utt_text) {
                (Some(domain), Some(utt_text)) => utterances.push(Utterance {
                    locale: locale.to_string(),
                    domain: domain.to_string(),
                    text: utt_text.to_string(),
                }),
                _ => {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: "expected locale<TAB>domain<TAB>text".into(),
                    })
                }
            }
        }
        Ok(Self { utterances })
    }

    /// Every (domain, locale) pair must be available per the registry.
    pub fn check_consistency(&self, registry: &DomainRegistry) -> Result<()> {
        for (i, u) in self.utterances.iter().enumerate() {
            let locale = registry
                .locale_id(&u.locale)
                .map_err(|_| Error::Consistency(format!(
                    "utterance {}: unregistered locale {:?}",
                    i + 1,
                    u.locale
                )))?;
            if !registry.available(&u.domain, locale) {
                return Err(Error::Consistency(format!(
                    "utterance {}: domain {:?} not available in locale {:?}",
                    i + 1,
                    u.domain,
                    u.locale
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// Slot-value pool: shared across locales, or exclusive per locale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotSpec {
    Shared { values: Vec<String> },
    PerLocale { per_locale: BTreeMap<String, Vec<String>> },
}

impl SlotSpec {
    fn pool(&self, locale: &str) -> Option<&[String]> {
        match self {
            SlotSpec::Shared { values } => Some(values),
            SlotSpec::PerLocale { per_locale } => per_locale.get(locale).map(|v| v.as_slice()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    #[serde(default)]
    pub locale_specific: bool,
    pub templates: Vec<String>,
    /// Locale-flavored additions to the template pool (shared domains only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_templates: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub slots: BTreeMap<String, SlotSpec>,
    /// Presence of a locale key defines availability.
    pub counts: BTreeMap<String, SplitCounts>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocaleSpec {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    #[serde(default = "default_small_threshold")]
    pub small_threshold: usize,
    /// Locale order here fixes registry, encoder, and head order.
    pub locales: Vec<String>,
    /// Target split sizes per locale; must equal the per-domain sums.
    pub locale_totals: BTreeMap<String, LocaleSpec>,
    pub domains: Vec<DomainSpec>,
}

fn default_small_threshold() -> usize {
    DEFAULT_SMALL_THRESHOLD
}

/// Placeholder names appearing in a template, in order.
fn template_slots(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let Some(end_off) = rest[start..].find('}') else {
            break;
        };
        out.push(&rest[start + 1..start + end_off]);
        rest = &rest[start + end_off + 1..];
    }
    out
}

impl CorpusConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// All the ways a config can be inconsistent, each naming the fields
    /// involved. Empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let locale_set: HashSet<&str> = self.locales.iter().map(|s| s.as_str()).collect();
        if locale_set.len() != self.locales.len() {
            problems.push("locales: duplicate names".into());
        }
        let mut domain_names = HashSet::new();
        for d in &self.domains {
            if !domain_names.insert(&d.name) {
                problems.push(format!("domains.{}: duplicate name", d.name));
            }
            if d.counts.is_empty() {
                problems.push(format!("domains.{}.counts: empty (no locales)", d.name));
            }
            for locale in d.counts.keys() {
                if !locale_set.contains(locale.as_str()) {
                    problems.push(format!(
                        "domains.{}.counts: unknown locale {locale:?}",
                        d.name
                    ));
                }
            }
            if d.templates.is_empty() {
                problems.push(format!("domains.{}.templates: empty", d.name));
            }
            let all_templates = d.templates.iter().chain(
                d.extra_templates
                    .values()
                    .flat_map(|ts| ts.iter()),
            );
            for t in all_templates {
                for slot in template_slots(t) {
                    if !d.slots.contains_key(slot) {
                        problems.push(format!(
                            "domains.{}.templates: placeholder {{{slot}}} has no slot pool",
                            d.name
                        ));
                    }
                }
            }
            for (slot, spec) in &d.slots {
                for locale in d.counts.keys() {
                    match spec.pool(locale) {
                        Some(pool) if pool.is_empty() => problems.push(format!(
                            "domains.{}.slots.{slot}: empty pool for locale {locale}",
                            d.name
                        )),
                        None => problems.push(format!(
                            "domains.{}.slots.{slot}: no pool for locale {locale}",
                            d.name
                        )),
                        _ => {}
                    }
                }
            }
            if d.locale_specific {
                if !d.extra_templates.is_empty() {
                    problems.push(format!(
                        "domains.{}.extra_templates: locale-specific domains keep one template \
                         pool so their surface patterns match across locales",
                        d.name
                    ));
                }
                if d.slots.is_empty() {
                    problems.push(format!(
                        "domains.{}.slots: locale-specific domain needs per-locale slots",
                        d.name
                    ));
                }
                for (slot, spec) in &d.slots {
                    match spec {
                        SlotSpec::Shared { .. } => problems.push(format!(
                            "domains.{}.slots.{slot}: locale-specific domain with a shared pool",
                            d.name
                        )),
                        SlotSpec::PerLocale { per_locale } => {
                            let locales: Vec<&String> = per_locale.keys().collect();
                            for i in 0..locales.len() {
                                for j in i + 1..locales.len() {
                                    let a: HashSet<&String> =
                                        per_locale[locales[i]].iter().collect();
                                    if per_locale[locales[j]].iter().any(|v| a.contains(v)) {
                                        problems.push(format!(
                                            "domains.{}.slots.{slot}: pools for {} and {} overlap",
                                            d.name, locales[i], locales[j]
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        // Locale totals must equal per-domain sums.
        for locale in &self.locales {
            let Some(spec) = self.locale_totals.get(locale) else {
                problems.push(format!("locale_totals.{locale}: missing"));
                continue;
            };
            let mut sums = SplitCounts::default();
            for d in &self.domains {
                if let Some(c) = d.counts.get(locale) {
                    sums.train += c.train;
                    sums.val += c.val;
                    sums.test += c.test;
                }
            }
            if sums.train != spec.train || sums.val != spec.val || sums.test != spec.test {
                problems.push(format!(
                    "locale_totals.{locale}: declared {}/{}/{} but domain counts sum to {}/{}/{}",
                    spec.train, spec.val, spec.test, sums.train, sums.val, sums.test
                ));
            }
        }
        problems
    }

    /// Build the registry implied by this config, with category tags filled
    /// in (locale-specific/independent from the flag, single-locale from
    /// availability, small from the training-count rule).
    pub fn build_registry(&self) -> Result<DomainRegistry> {
        let entries = self
            .domains
            .iter()
            .map(|d| {
                let locales: Vec<String> = self
                    .locales
                    .iter()
                    .filter(|l| d.counts.contains_key(*l))
                    .cloned()
                    .collect();
                let total_train: usize = d.counts.values().map(|c| c.train).sum();
                let mut tags = BTreeMap::new();
                for l in &locales {
                    let mut t = vec![if d.locale_specific {
                        Category::LocaleSpecific
                    } else {
                        Category::LocaleIndependent
                    }];
                    if locales.len() == 1 {
                        t.push(Category::SingleLocale);
                    }
                    if is_small(d.counts[l].train, total_train, self.small_threshold) {
                        t.push(Category::Small);
                    }
                    tags.insert(l.clone(), t);
                }
                DomainEntry {
                    name: d.name.clone(),
                    locales,
                    locale_specific: d.locale_specific,
                    tags,
                }
            })
            .collect();
        DomainRegistry::new(self.locales.clone(), entries)
    }
}

/// Generator output: the registry plus the three splits.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub registry: DomainRegistry,
    pub train: Corpus,
    pub val: Corpus,
    pub test: Corpus,
}

impl GeneratedCorpus {
    pub fn split(&self, name: &str) -> &Corpus {
        match name {
            "train" => &self.train,
            "val" => &self.val,
            "test" => &self.test,
            other => panic!("unknown split {other}"),
        }
    }
}

/// Deterministically generate the corpus described by `config`.
pub fn generate(config: &CorpusConfig) -> Result<GeneratedCorpus> {
    let problems = config.validate();
    if !problems.is_empty() {
        return Err(Error::Config(format!(
            "invalid corpus config:\n  {}",
            problems.join("\n  ")
        )));
    }
    let registry = config.build_registry()?;
    let root = SeededRng::new(config.seed);

    let mut splits: BTreeMap<&str, Corpus> = BTreeMap::new();
    for split in ["train", "val", "test"] {
        let mut corpus = Corpus::default();
        for d in &config.domains {
            for locale in &config.locales {
                let Some(counts) = d.counts.get(locale) else {
                    continue;
                };
                let n = match split {
                    "train" => counts.train,
                    "val" => counts.val,
                    _ => counts.test,
                };
                let mut rng = root.derive(&format!("corpus/{}/{}/{}", d.name, locale, split));
                let mut templates: Vec<&String> = d.templates.iter().collect();
                if let Some(extra) = d.extra_templates.get(locale) {
                    templates.extend(extra.iter());
                }
                for _ in 0..n {
                    let template = *rng.pick(&templates);
                    let text = fill_template(template, d, locale, &mut rng);
                    corpus.utterances.push(Utterance {
                        locale: locale.clone(),
                        domain: d.name.clone(),
                        text,
                    });
                }
            }
        }
        splits.insert(split, corpus);
    }

    Ok(GeneratedCorpus {
        registry,
        train: splits.remove("train").unwrap(),
        val: splits.remove("val").unwrap(),
        test: splits.remove("test").unwrap(),
    })
}

fn fill_template(template: &str, d: &DomainSpec, locale: &str, rng: &mut SeededRng) -> String {
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let end_off = rest[start..].find('}').expect("validated template");
        out.push_str(&rest[..start]);
        let slot = &rest[start + 1..start + end_off];
        let pool = d.slots[slot].pool(locale).expect("validated slots");
        out.push_str(&pool[rng.below(pool.len())]);
        rest = &rest[start + end_off + 1..];
    }
    out.push_str(rest);
    out
}

/// Per-locale row of the data-statistics table.
#[derive(Debug, Clone, Serialize)]
pub struct LocaleStats {
    pub locale: String,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub domains: usize,
}

/// Per-locale row of the category-breakdown table (domain counts).
#[derive(Debug, Clone, Serialize)]
pub struct CategoryStats {
    pub locale: String,
    pub overall: usize,
    pub locale_specific: usize,
    pub locale_independent: usize,
    pub single_locale: usize,
    pub small: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusStats {
    pub per_locale: Vec<LocaleStats>,
    pub categories: Vec<CategoryStats>,
    pub overlap: Vec<Vec<usize>>,
    /// Fraction of val/test utterance texts that also occur verbatim (same
    /// locale and domain) in the training split. Reported, not forbidden.
    pub cross_split_duplicate_rate: f64,
}

/// Compute the three report tables plus the duplicate rate.
pub fn stats(generated: &GeneratedCorpus) -> Result<CorpusStats> {
    let registry = &generated.registry;
    for split in ["train", "val", "test"] {
        generated.split(split).check_consistency(registry)?;
    }

    let count_by_locale = |corpus: &Corpus| -> HashMap<String, usize> {
        let mut m = HashMap::new();
        for u in &corpus.utterances {
            *m.entry(u.locale.clone()).or_insert(0) += 1;
        }
        m
    };
    let train_counts = count_by_locale(&generated.train);
    let val_counts = count_by_locale(&generated.val);
    let test_counts = count_by_locale(&generated.test);

    let per_locale = registry
        .locale_ids()
        .map(|l| {
            let name = registry.locale_name(l);
            LocaleStats {
                locale: name.to_string(),
                train: train_counts.get(name).copied().unwrap_or(0),
                val: val_counts.get(name).copied().unwrap_or(0),
                test: test_counts.get(name).copied().unwrap_or(0),
                domains: registry.domains_in(l).len(),
            }
        })
        .collect();

    let categories = registry
        .locale_ids()
        .map(|l| {
            let name = registry.locale_name(l);
            let mut row = CategoryStats {
                locale: name.to_string(),
                overall: 0,
                locale_specific: 0,
                locale_independent: 0,
                single_locale: 0,
                small: 0,
            };
            for d in registry.domains_in(l) {
                row.overall += 1;
                for c in registry.categories(d, l) {
                    match c {
                        Category::LocaleSpecific => row.locale_specific += 1,
                        Category::LocaleIndependent => row.locale_independent += 1,
                        Category::SingleLocale => row.single_locale += 1,
                        Category::Small => row.small += 1,
                    }
                }
            }
            row
        })
        .collect();

    let train_texts: HashSet<(&str, &str, &str)> = generated
        .train
        .utterances
        .iter()
        .map(|u| (u.locale.as_str(), u.domain.as_str(), u.text.as_str()))
        .collect();
    let eval_utterances = generated.val.utterances.iter().chain(&generated.test.utterances);
    let mut dups = 0usize;
    let mut total = 0usize;
    for u in eval_utterances {
        total += 1;
        if train_texts.contains(&(u.locale.as_str(), u.domain.as_str(), u.text.as_str())) {
            dups += 1;
        }
    }
    let cross_split_duplicate_rate = if total == 0 {
        0.0
    } else {
        dups as f64 / total as f64
    };

    Ok(CorpusStats {
        per_locale,
        categories,
        overlap: registry.overlap_matrix(),
        cross_split_duplicate_rate,
    })
}

impl CorpusStats {
    /// Plain-text rendering of the three tables.
    pub fn render(&self, locale_names: &[String]) -> String {
        let mut out = String::new();
        writeln!(out, "Data statistics").unwrap();
        writeln!(out, "{:<8}{:>8}{:>8}{:>8}{:>12}", "Locale", "Train", "Val", "Test", "Domains")
            .unwrap();
        for row in &self.per_locale {
            writeln!(
                out,
                "{:<8}{:>8}{:>8}{:>8}{:>12}",
                row.locale, row.train, row.val, row.test, row.domains
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "Domain category breakdown").unwrap();
        writeln!(
            out,
            "{:<8}{:>8}{:>16}{:>20}{:>15}{:>8}",
            "Locale", "Overall", "Locale-specific", "Locale-independent", "Single-locale", "Small"
        )
        .unwrap();
        for row in &self.categories {
            writeln!(
                out,
                "{:<8}{:>8}{:>16}{:>20}{:>15}{:>8}",
                row.locale,
                row.overall,
                row.locale_specific,
                row.locale_independent,
                row.single_locale,
                row.small
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "Domain overlaps between locales").unwrap();
        write!(out, "{:<8}", "").unwrap();
        for l in locale_names {
            write!(out, "{l:>8}").unwrap();
        }
        writeln!(out).unwrap();
        for (i, l) in locale_names.iter().enumerate() {
            write!(out, "{l:<8}").unwrap();
            for j in 0..locale_names.len() {
                write!(out, "{:>8}", self.overlap[i][j]).unwrap();
            }
            writeln!(out).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "Cross-split duplicate rate: {:.4}",
            self.cross_split_duplicate_rate
        )
        .unwrap();
        out
    }
}
