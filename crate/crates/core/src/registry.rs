//! Domain registry and sharing-set routing.
//!
//! The registry is explicit input data (JSON), not inferred from the corpus,
//! so tests can construct pathological registries and the trainer can check
//! corpus labels against it. The sharing set of an utterance decides which
//! locale encoders and prediction heads train on it: a locale-specific
//! domain's utterances stay in their origin locale; everything else is shared
//! with every locale where the domain is available.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Index of a locale in the registry's fixed order (which also fixes encoder
/// and prediction-head order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocaleId(pub usize);

impl fmt::Display for LocaleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Domain category tags, assigned per (domain, locale).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "locale-specific")]
    LocaleSpecific,
    #[serde(rename = "locale-independent")]
    LocaleIndependent,
    #[serde(rename = "single-locale")]
    SingleLocale,
    #[serde(rename = "small")]
    Small,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::LocaleSpecific,
        Category::LocaleIndependent,
        Category::SingleLocale,
        Category::Small,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Category::LocaleSpecific => "Locale-specific",
            Category::LocaleIndependent => "Locale-independent",
            Category::SingleLocale => "Single-locale",
            Category::Small => "Small",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainEntry {
    pub name: String,
    /// Locale names the domain is available in.
    pub locales: Vec<String>,
    pub locale_specific: bool,
    /// Category tags per locale name.
    #[serde(default)]
    pub tags: BTreeMap<String, Vec<Category>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryFile {
    locales: Vec<String>,
    domains: Vec<DomainEntry>,
}

/// "Small" membership rule: under `threshold` training utterances in the
/// locale while at least `10 * threshold` exist across all locales.
pub fn is_small(train_in_locale: usize, total_train: usize, threshold: usize) -> bool {
    train_in_locale < threshold && total_train >= 10 * threshold
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RegistryFile", into = "RegistryFile")]
pub struct DomainRegistry {
    locales: Vec<String>,
    domains: Vec<DomainEntry>,
    #[serde(skip)]
    locale_index: HashMap<String, usize>,
    #[serde(skip)]
    domain_index: HashMap<String, usize>,
}

impl TryFrom<RegistryFile> for DomainRegistry {
    type Error = Error;
    fn try_from(f: RegistryFile) -> Result<Self> {
        DomainRegistry::new(f.locales, f.domains)
    }
}

impl From<DomainRegistry> for RegistryFile {
    fn from(r: DomainRegistry) -> Self {
        RegistryFile {
            locales: r.locales,
            domains: r.domains,
        }
    }
}

impl DomainRegistry {
    pub fn new(locales: Vec<String>, domains: Vec<DomainEntry>) -> Result<Self> {
        let mut locale_index = HashMap::new();
        for (i, l) in locales.iter().enumerate() {
            if locale_index.insert(l.clone(), i).is_some() {
                return Err(Error::Registry(format!("duplicate locale {l:?}")));
            }
        }
        let mut domain_index = HashMap::new();
        for (i, d) in domains.iter().enumerate() {
            if domain_index.insert(d.name.clone(), i).is_some() {
                return Err(Error::Registry(format!("duplicate domain {:?}", d.name)));
            }
        }
        Ok(Self {
            locales,
            domains,
            locale_index,
            domain_index,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, used to pin checkpoints to the
    /// registry they were trained against.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("registry serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn locale_count(&self) -> usize {
        self.locales.len()
    }

    pub fn locale_names(&self) -> &[String] {
        &self.locales
    }

    pub fn locale_name(&self, id: LocaleId) -> &str {
        &self.locales[id.0]
    }

    pub fn locale_id(&self, name: &str) -> Result<LocaleId> {
        self.locale_index
            .get(name)
            .map(|&i| LocaleId(i))
            .ok_or_else(|| Error::Registry(format!("unknown locale {name:?}")))
    }

    pub fn locale_ids(&self) -> impl Iterator<Item = LocaleId> {
        (0..self.locales.len()).map(LocaleId)
    }

    pub fn domains(&self) -> &[DomainEntry] {
        &self.domains
    }

    pub fn domain(&self, name: &str) -> Result<&DomainEntry> {
        self.domain_index
            .get(name)
            .map(|&i| &self.domains[i])
            .ok_or_else(|| Error::Registry(format!("unknown domain {name:?}")))
    }

    pub fn available(&self, domain: &str, locale: LocaleId) -> bool {
        self.domain(domain)
            .map(|d| d.locales.iter().any(|l| l == &self.locales[locale.0]))
            .unwrap_or(false)
    }

    /// Domain names available in `locale`, in registry order. This order
    /// fixes each prediction head's output indexing.
    pub fn domains_in(&self, locale: LocaleId) -> Vec<&str> {
        let name = &self.locales[locale.0];
        self.domains
            .iter()
            .filter(|d| d.locales.iter().any(|l| l == name))
            .map(|d| d.name.as_str())
            .collect()
    }

    /// Category tags of a domain within a locale (empty if untagged).
    pub fn categories(&self, domain: &str, locale: LocaleId) -> &[Category] {
        self.domain(domain)
            .ok()
            .and_then(|d| d.tags.get(&self.locales[locale.0]))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Locales whose encoders and heads see an utterance of `domain`
    /// originating from `origin`: `{origin}` when the domain is
    /// locale-specific, otherwise all locales where the domain is available.
    /// Sorted by locale index.
    pub fn sharing_set(&self, domain: &str, origin: LocaleId) -> Result<Vec<LocaleId>> {
        let entry = self.domain(domain)?;
        if !self.available(domain, origin) {
            return Err(Error::Registry(format!(
                "domain {:?} is not available in locale {:?} (corrupt data?)",
                domain, self.locales[origin.0]
            )));
        }
        if entry.locale_specific {
            return Ok(vec![origin]);
        }
        let mut set: Vec<LocaleId> = entry
            .locales
            .iter()
            .map(|l| self.locale_id(l))
            .collect::<Result<_>>()?;
        set.sort_unstable();
        Ok(set)
    }

    /// Pairwise domain-overlap counts; entry (i, j) is `|D_i ∩ D_j|` and the
    /// diagonal is `|D_i|`.
    pub fn overlap_matrix(&self) -> Vec<Vec<usize>> {
        let k = self.locale_count();
        let mut m = vec![vec![0usize; k]; k];
        for d in &self.domains {
            let ids: Vec<usize> = d
                .locales
                .iter()
                .filter_map(|l| self.locale_index.get(l).copied())
                .collect();
            for &i in &ids {
                for &j in &ids {
                    m[i][j] += 1;
                }
            }
        }
        m
    }

    /// Empty iff all registry invariants hold; each violation names the
    /// domain and the broken rule.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        for d in &self.domains {
            if d.locales.is_empty() {
                violations.push(format!("domain {:?}: empty locale set", d.name));
            }
            let mut seen = std::collections::HashSet::new();
            for l in &d.locales {
                if !self.locale_index.contains_key(l) {
                    violations.push(format!("domain {:?}: unknown locale {l:?}", d.name));
                }
                if !seen.insert(l) {
                    violations.push(format!("domain {:?}: duplicate locale {l:?}", d.name));
                }
            }
            let has_single_tag = d
                .tags
                .values()
                .any(|tags| tags.contains(&Category::SingleLocale));
            if has_single_tag && d.locales.len() != 1 {
                violations.push(format!(
                    "domain {:?}: single-locale tag on a {}-locale domain",
                    d.name,
                    d.locales.len()
                ));
            }
            if !has_single_tag && d.locales.len() == 1 && !d.tags.is_empty() {
                violations.push(format!(
                    "domain {:?}: available in one locale but missing the single-locale tag",
                    d.name
                ));
            }
            for (locale, tags) in &d.tags {
                if !d.locales.contains(locale) {
                    violations.push(format!(
                        "domain {:?}: tags for locale {locale:?} where it is not available",
                        d.name
                    ));
                    continue;
                }
                let ls = tags.contains(&Category::LocaleSpecific);
                let li = tags.contains(&Category::LocaleIndependent);
                if ls && li {
                    violations.push(format!(
                        "domain {:?}/{locale}: tagged both locale-specific and locale-independent",
                        d.name
                    ));
                }
                if !tags.is_empty() && ls != d.locale_specific {
                    violations.push(format!(
                        "domain {:?}/{locale}: tag disagrees with locale_specific flag",
                        d.name
                    ));
                }
            }
        }
        violations
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(name: &str, locales: &[&str], ls: bool) -> DomainEntry {
        DomainEntry {
            name: name.into(),
            locales: locales.iter().map(|s| s.to_string()).collect(),
            locale_specific: ls,
            tags: BTreeMap::new(),
        }
    }

    fn four_locale_registry() -> DomainRegistry {
        DomainRegistry::new(
            ["US", "GB", "CA", "IN"].iter().map(|s| s.to_string()).collect(),
            vec![
                entry("restaurant_booking", &["US", "GB"], true),
                entry("weather", &["US", "GB", "CA", "IN"], false),
                entry("cricket_scores", &["IN"], false),
            ],
        )
        .unwrap()
    }

    #[test]
    fn locale_specific_domain_routes_to_origin_only() {
        let reg = four_locale_registry();
        let gb = reg.locale_id("GB").unwrap();
        assert_eq!(reg.sharing_set("restaurant_booking", gb).unwrap(), vec![gb]);
    }

    #[test]
    fn shared_domain_routes_to_all_available_locales() {
        let reg = four_locale_registry();
        let ca = reg.locale_id("CA").unwrap();
        let set = reg.sharing_set("weather", ca).unwrap();
        assert_eq!(set, vec![LocaleId(0), LocaleId(1), LocaleId(2), LocaleId(3)]);
    }

    #[test]
    fn singleton_domain_routes_to_itself_regardless_of_flag() {
        let reg = four_locale_registry();
        let indl = reg.locale_id("IN").unwrap();
        assert_eq!(reg.sharing_set("cricket_scores", indl).unwrap(), vec![indl]);
    }

    #[test]
    fn sharing_set_requires_availability() {
        let reg = four_locale_registry();
        let ca = reg.locale_id("CA").unwrap();
        assert!(matches!(
            reg.sharing_set("restaurant_booking", ca),
            Err(Error::Registry(_))
        ));
    }

    #[test]
    fn well_formed_registry_validates_clean() {
        assert!(four_locale_registry().validate().is_empty());
    }

    #[test]
    fn empty_locale_set_is_flagged() {
        let reg = DomainRegistry::new(
            vec!["US".into()],
            vec![entry("ghost", &[], false)],
        )
        .unwrap();
        let violations = reg.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("ghost"));
    }

    #[test]
    fn misplaced_single_locale_tag_is_flagged() {
        let mut d = entry("pair", &["US", "GB"], false);
        d.tags.insert(
            "US".into(),
            vec![Category::LocaleIndependent, Category::SingleLocale],
        );
        d.tags.insert("GB".into(), vec![Category::LocaleIndependent]);
        let reg = DomainRegistry::new(vec!["US".into(), "GB".into()], vec![d]).unwrap();
        let violations = reg.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("single-locale"));
    }

    #[test]
    fn disjoint_domain_sets_give_diagonal_overlap() {
        let reg = DomainRegistry::new(
            vec!["A".into(), "B".into()],
            vec![entry("d1", &["A"], false), entry("d2", &["B"], false)],
        )
        .unwrap();
        assert_eq!(reg.overlap_matrix(), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn overlap_matrix_is_symmetric_with_domain_counts_on_diagonal() {
        let reg = four_locale_registry();
        let m = reg.overlap_matrix();
        for i in 0..4 {
            assert_eq!(m[i][i], reg.domains_in(LocaleId(i)).len());
            for j in 0..4 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        // US∩GB = restaurant_booking + weather.
        assert_eq!(m[0][1], 2);
    }

    #[test]
    fn sharing_set_matches_bruteforce_on_random_registries() {
        // Naive reimplementation straight from the definition.
        fn brute(reg: &DomainRegistry, domain: &str, origin: LocaleId) -> Vec<LocaleId> {
            let d = reg.domain(domain).unwrap();
            if d.locale_specific {
                vec![origin]
            } else {
                reg.locale_ids()
                    .filter(|&l| {
                        d.locales
                            .iter()
                            .any(|name| name == reg.locale_name(l))
                    })
                    .collect()
            }
        }

        for seed in 0..50u64 {
            let mut rng = crate::rng::SeededRng::new(seed);
            let k = 2 + rng.below(4);
            let locales: Vec<String> = (0..k).map(|i| format!("L{i}")).collect();
            let domains: Vec<DomainEntry> = (0..20)
                .map(|i| {
                    let mut ls: Vec<String> = locales
                        .iter()
                        .filter(|_| rng.bernoulli(0.5))
                        .cloned()
                        .collect();
                    if ls.is_empty() {
                        ls.push(locales[rng.below(k)].clone());
                    }
                    DomainEntry {
                        name: format!("d{i}"),
                        locales: ls,
                        locale_specific: rng.bernoulli(0.3),
                        tags: BTreeMap::new(),
                    }
                })
                .collect();
            let reg = DomainRegistry::new(locales, domains).unwrap();
            for d in reg.domains().iter().map(|d| d.name.clone()).collect::<Vec<_>>() {
                for l in reg.locale_ids() {
                    if !reg.available(&d, l) {
                        continue;
                    }
                    let fast = reg.sharing_set(&d, l).unwrap();
                    assert_eq!(fast, brute(&reg, &d, l), "seed {seed} domain {d}");
                    assert!(fast.contains(&l), "origin always in the set");
                }
            }
        }
    }

    #[test]
    fn shared_domain_sharing_set_is_origin_independent() {
        let reg = four_locale_registry();
        let sets: Vec<_> = reg
            .locale_ids()
            .map(|l| reg.sharing_set("weather", l).unwrap())
            .collect();
        assert!(sets.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn json_roundtrip_preserves_hash() {
        let reg = four_locale_registry();
        let json = serde_json::to_string(&reg).unwrap();
        let back: DomainRegistry = serde_json::from_str(&json).unwrap();
        assert_eq!(reg.content_hash(), back.content_hash());
        assert_eq!(back.locale_count(), 4);
    }

    #[test]
    fn small_rule_thresholds() {
        assert!(is_small(5, 400, 20));
        assert!(!is_small(25, 400, 20), "enough local data");
        assert!(!is_small(5, 150, 20), "not enough global data");
    }
}
