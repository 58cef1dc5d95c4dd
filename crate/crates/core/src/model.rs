//! Model variants: the universal architecture and its baselines.
//!
//! `universal` wires the full pipeline: embeddings → dropout → shared +
//! per-locale BiLSTM encoders → supervised locale attention → `y = [x_s; x_l]`
//! → per-locale two-layer heads scored one-vs-rest, with the attention
//! supervision loss and (for `universal_adv`) the adversarial locale loss.
//! The baselines (`single`, `union`, `constrained`) share the embedding and
//! encoder machinery but use a single BiLSTM and a single linear output layer
//! trained with softmax cross-entropy.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::adversarial::AdversarialHead;
use crate::attention::{attention_loss, AttentionParams, DEFAULT_ATTN_DIM};
use crate::embed::{EmbeddingTable, DEFAULT_EMBED_DIM};
use crate::error::{Error, Result};
use crate::heads::{prediction_loss, rank_domains, PredictionHead, DEFAULT_HEAD_HIDDEN};
use crate::lstm::{BiLstmEncoder, EncoderBank, DEFAULT_LSTM_DIM};
use crate::registry::{DomainRegistry, LocaleId};
use crate::rng::SeededRng;
use crate::tape::{NodeId, ParamStore, Tape};
use crate::vocab::Vocabulary;

/// The five competing configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Single,
    Union,
    Constrained,
    Universal,
    UniversalAdv,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Single,
        Variant::Union,
        Variant::Constrained,
        Variant::Universal,
        Variant::UniversalAdv,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Single => "single",
            Variant::Union => "union",
            Variant::Constrained => "constrained",
            Variant::Universal => "universal",
            Variant::UniversalAdv => "universal_adv",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant {s:?}; valid: single, union, constrained, universal, universal_adv"
                ))
            })
    }

    /// `single` and `union` are trained per locale; the rest once.
    pub fn per_locale(&self) -> bool {
        matches!(self, Variant::Single | Variant::Union)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Model dimensionalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub embed_dim: usize,
    pub lstm_dim: usize,
    pub attn_dim: usize,
    pub head_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            embed_dim: DEFAULT_EMBED_DIM,
            lstm_dim: DEFAULT_LSTM_DIM,
            attn_dim: DEFAULT_ATTN_DIM,
            head_hidden: DEFAULT_HEAD_HIDDEN,
        }
    }
}

impl ModelDims {
    /// BiLSTM output size d_h.
    pub fn enc_dim(&self) -> usize {
        2 * self.lstm_dim
    }
}

/// Training-time behavior knobs carried by the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelHyper {
    pub dropout: f64,
    pub adversarial_enabled: bool,
    pub adversarial_lambda: f64,
    /// Use the literal printed form of the negative prediction term
    /// (comparison only; the corrected form is the default).
    pub literal_neg_loss: bool,
    pub embeddings_trainable: bool,
}

impl Default for ModelHyper {
    fn default() -> Self {
        Self {
            dropout: 0.5,
            adversarial_enabled: false,
            adversarial_lambda: 1.0,
            literal_neg_loss: false,
            embeddings_trainable: false,
        }
    }
}

/// An utterance prepared for the model: token ids plus routing info.
#[derive(Debug, Clone)]
pub struct EncodedExample {
    pub tokens: Vec<usize>,
    pub locale: LocaleId,
    pub domain: String,
    /// Sharing-set locales, sorted by index.
    pub sharing: Vec<LocaleId>,
    /// Per-locale sharing-set membership, length k.
    pub in_set: Vec<bool>,
}

impl EncodedExample {
    pub fn new(
        text: &str,
        domain: &str,
        locale: LocaleId,
        vocab: &Vocabulary,
        registry: &DomainRegistry,
    ) -> Result<Self> {
        let sharing = registry.sharing_set(domain, locale)?;
        let mut in_set = vec![false; registry.locale_count()];
        for l in &sharing {
            in_set[l.0] = true;
        }
        Ok(Self {
            tokens: vocab.encode_text(text),
            locale,
            domain: domain.to_string(),
            sharing,
            in_set,
        })
    }
}

/// Per-example loss values for logging. The reported adversarial term is the
/// positive log-likelihood of the true locale; `total` is the sum of the
/// three logged terms.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub l_adv: f64,
    pub l_loc: f64,
    pub l_pred: f64,
}

pub struct UniversalModel {
    pub store: ParamStore,
    pub vocab: Vocabulary,
    pub embedding: EmbeddingTable,
    pub bank: EncoderBank,
    pub attention: AttentionParams,
    pub adversarial: AdversarialHead,
    pub heads: Vec<PredictionHead>,
    pub dims: ModelDims,
    pub hyper: ModelHyper,
    pub locale_names: Vec<String>,
}

impl UniversalModel {
    /// Construct with seeded initialization. Parameter creation order is
    /// fixed (embedding, shared encoder, locale encoders, attention,
    /// adversarial head, prediction heads) so a seed fully determines every
    /// initial value. The adversarial head is always constructed, enabled or
    /// not, keeping the `universal` and `universal_adv` initializations
    /// identical for identical seeds.
    pub fn init(
        vocab: Vocabulary,
        registry: &DomainRegistry,
        dims: ModelDims,
        hyper: ModelHyper,
        rng: &mut SeededRng,
    ) -> Self {
        let mut store = ParamStore::new();
        let embedding = EmbeddingTable::random(
            &mut store,
            &vocab,
            dims.embed_dim,
            hyper.embeddings_trainable,
            rng,
        );
        let locale_names = registry.locale_names().to_vec();
        let bank = EncoderBank::init(
            &mut store,
            dims.embed_dim,
            dims.lstm_dim,
            &locale_names,
            rng,
        );
        let attention = AttentionParams::init(&mut store, dims.attn_dim, dims.enc_dim(), rng);
        let adversarial =
            AdversarialHead::init(&mut store, locale_names.len(), dims.enc_dim(), rng);
        let heads = registry
            .locale_ids()
            .map(|l| {
                let domains: Vec<String> = registry
                    .domains_in(l)
                    .into_iter()
                    .map(|s| s.to_string())
                    .collect();
                PredictionHead::init(
                    &mut store,
                    &format!("head.{}", registry.locale_name(l)),
                    2 * dims.enc_dim(),
                    dims.head_hidden,
                    domains,
                    rng,
                )
            })
            .collect();
        Self {
            store,
            vocab,
            embedding,
            bank,
            attention,
            adversarial,
            heads,
            dims,
            hyper,
            locale_names,
        }
    }

    pub fn locale_count(&self) -> usize {
        self.heads.len()
    }

    fn embed_sequence(
        &self,
        tape: &mut Tape,
        tokens: &[usize],
        rng: &mut SeededRng,
        training: bool,
    ) -> Result<Vec<NodeId>> {
        tokens
            .iter()
            .map(|&t| {
                let e = self.embedding.lookup(tape, &self.store, t)?;
                tape.dropout(&self.store, e, self.hyper.dropout, rng, training)
            })
            .collect()
    }

    /// Forward pass up to the final utterance vector. Returns
    /// (x_s, attention weights node, y).
    fn encode_utterance(
        &self,
        tape: &mut Tape,
        tokens: &[usize],
        rng: &mut SeededRng,
        training: bool,
    ) -> Result<(NodeId, NodeId, NodeId)> {
        let seq = self.embed_sequence(tape, tokens, rng, training)?;
        let (x_s, columns) = self.bank.encode_all(tape, &self.store, &seq)?;
        let x_s = tape.dropout(&self.store, x_s, self.hyper.dropout, rng, training)?;
        let columns: Vec<NodeId> = columns
            .into_iter()
            .map(|c| tape.dropout(&self.store, c, self.hyper.dropout, rng, training))
            .collect::<Result<_>>()?;
        let attn = self.attention.attend(tape, &self.store, &columns)?;
        let y = tape.concat(&self.store, x_s, attn.combined)?;
        Ok((x_s, attn.weights, y))
    }

    /// Joint loss for one example: the node to optimize plus the logged
    /// breakdown. The optimized objective is `head_ce + L_loc + L_pred`
    /// (adversarial cross-entropy entering through gradient reversal);
    /// the logged adversarial term follows the positive log-likelihood
    /// convention and is zero when the module is disabled.
    pub fn joint_loss(
        &self,
        tape: &mut Tape,
        ex: &EncodedExample,
        rng: &mut SeededRng,
        training: bool,
    ) -> Result<(NodeId, LossBreakdown)> {
        let (x_s, weights, y) = self.encode_utterance(tape, &ex.tokens, rng, training)?;

        let l_loc = attention_loss(tape, &self.store, weights, &ex.in_set)?;

        let mut scored: Vec<(&PredictionHead, NodeId)> = Vec::with_capacity(ex.sharing.len());
        for &l in &ex.sharing {
            let head = &self.heads[l.0];
            let z = head.forward(tape, &self.store, y)?;
            scored.push((head, z));
        }
        let l_pred = prediction_loss(
            tape,
            &self.store,
            &scored,
            &ex.domain,
            self.hyper.literal_neg_loss,
        )?;

        let mut parts = vec![l_loc, l_pred];
        let mut l_adv_logged = 0.0;
        if self.hyper.adversarial_enabled {
            let adv = self.adversarial.adversarial_loss(
                tape,
                &self.store,
                x_s,
                ex.locale.0,
                self.hyper.adversarial_lambda,
            )?;
            l_adv_logged = AdversarialHead::reported_loss(tape.value(&self.store, adv.head_ce).item());
            parts.push(adv.head_ce);
        }
        let objective = tape.sum_scalars(&self.store, &parts)?;

        let l_loc_v = tape.value(&self.store, l_loc).item();
        let l_pred_v = tape.value(&self.store, l_pred).item();
        let breakdown = LossBreakdown {
            total: l_adv_logged + l_loc_v + l_pred_v,
            l_adv: l_adv_logged,
            l_loc: l_loc_v,
            l_pred: l_pred_v,
        };
        Ok((objective, breakdown))
    }

    /// Rank the request locale's domains for an utterance (eval mode, no
    /// dropout). Only domains of `locale` can appear.
    pub fn classify(&self, tokens: &[usize], locale: LocaleId) -> Result<Vec<(String, f64)>> {
        let mut tape = Tape::new();
        let mut rng = SeededRng::new(0); // unused in eval mode
        let (_x_s, _w, y) = self.encode_utterance(&mut tape, tokens, &mut rng, false)?;
        let head = &self.heads[locale.0];
        let z = head.forward(&mut tape, &self.store, y)?;
        Ok(rank_domains(head, tape.value(&self.store, z)))
    }

    /// Attention weights for an utterance (eval mode), for probing how well
    /// the supervision matched the sharing sets.
    pub fn attention_probe(&self, tokens: &[usize]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let mut rng = SeededRng::new(0);
        let (_x_s, weights, _y) = self.encode_utterance(&mut tape, tokens, &mut rng, false)?;
        Ok(tape.value(&self.store, weights).data().to_vec())
    }
}

/// Scope of a baseline model's training data and output space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineScope {
    /// `single`/`union`: one locale's domain set.
    Locale(LocaleId),
    /// `constrained`: the union of all locales' domains, masked per request.
    AllLocales,
}

pub struct BaselineModel {
    pub store: ParamStore,
    pub vocab: Vocabulary,
    pub embedding: EmbeddingTable,
    pub encoder: BiLstmEncoder,
    pub out_w: crate::tape::ParamId,
    pub out_b: crate::tape::ParamId,
    pub output_domains: Vec<String>,
    domain_index: HashMap<String, usize>,
    pub scope: BaselineScope,
    pub dims: ModelDims,
    pub hyper: ModelHyper,
}

impl BaselineModel {
    pub fn init(
        vocab: Vocabulary,
        registry: &DomainRegistry,
        scope: BaselineScope,
        dims: ModelDims,
        hyper: ModelHyper,
        rng: &mut SeededRng,
    ) -> Self {
        let output_domains: Vec<String> = match &scope {
            BaselineScope::Locale(l) => registry
                .domains_in(*l)
                .into_iter()
                .map(|s| s.to_string())
                .collect(),
            BaselineScope::AllLocales => registry
                .domains()
                .iter()
                .map(|d| d.name.clone())
                .collect(),
        };
        let mut store = ParamStore::new();
        let embedding = EmbeddingTable::random(
            &mut store,
            &vocab,
            dims.embed_dim,
            hyper.embeddings_trainable,
            rng,
        );
        let encoder = BiLstmEncoder::init(&mut store, "enc", dims.embed_dim, dims.lstm_dim, rng);
        let out_dim = output_domains.len();
        let bound = 1.0 / (dims.enc_dim() as f64).sqrt();
        let wdata = (0..out_dim * dims.enc_dim())
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        let out_w = store.add(
            "out.w",
            crate::tensor::Tensor::matrix(out_dim, dims.enc_dim(), wdata).unwrap(),
        );
        let out_b = store.add("out.b", crate::tensor::Tensor::zeros(vec![out_dim]));
        let domain_index = output_domains
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i))
            .collect();
        Self {
            store,
            vocab,
            embedding,
            encoder,
            out_w,
            out_b,
            output_domains,
            domain_index,
            scope,
            dims,
            hyper,
        }
    }

    fn logits(
        &self,
        tape: &mut Tape,
        tokens: &[usize],
        rng: &mut SeededRng,
        training: bool,
    ) -> Result<NodeId> {
        let seq: Vec<NodeId> = tokens
            .iter()
            .map(|&t| {
                let e = self.embedding.lookup(tape, &self.store, t)?;
                tape.dropout(&self.store, e, self.hyper.dropout, rng, training)
            })
            .collect::<Result<_>>()?;
        let enc = self.encoder.encode(tape, &self.store, &seq)?;
        let enc = tape.dropout(&self.store, enc, self.hyper.dropout, rng, training)?;
        let w = tape.param(&self.store, self.out_w);
        let b = tape.param(&self.store, self.out_b);
        tape.affine(&self.store, w, enc, Some(b))
    }

    /// Softmax cross-entropy over the model's full output space.
    pub fn ce_loss(
        &self,
        tape: &mut Tape,
        ex: &EncodedExample,
        rng: &mut SeededRng,
        training: bool,
    ) -> Result<(NodeId, LossBreakdown)> {
        let gold = self.domain_index.get(&ex.domain).ok_or_else(|| {
            Error::Routing(format!(
                "gold domain {:?} outside the baseline output space",
                ex.domain
            ))
        })?;
        let z = self.logits(tape, &ex.tokens, rng, training)?;
        let probs = tape.softmax(&self.store, z)?;
        let ce = tape.nll_from_probs(&self.store, probs, *gold)?;
        let v = tape.value(&self.store, ce).item();
        let breakdown = LossBreakdown {
            total: v,
            l_adv: 0.0,
            l_loc: 0.0,
            l_pred: v,
        };
        Ok((ce, breakdown))
    }

    /// Rank the request locale's domains. For `constrained` the output space
    /// is masked down to the locale's domain set; `single`/`union` models
    /// only serve their own locale.
    pub fn classify(
        &self,
        tokens: &[usize],
        locale: LocaleId,
        registry: &DomainRegistry,
    ) -> Result<Vec<(String, f64)>> {
        if let BaselineScope::Locale(own) = self.scope {
            if own != locale {
                return Err(Error::Input(format!(
                    "model trained for locale {} asked to classify locale {}",
                    own, locale
                )));
            }
        }
        let mut tape = Tape::new();
        let mut rng = SeededRng::new(0);
        let z = self.logits(&mut tape, tokens, &mut rng, false)?;
        let zt = tape.value(&self.store, z);
        let mut ranked: Vec<(String, f64)> = registry
            .domains_in(locale)
            .into_iter()
            .filter_map(|d| {
                self.domain_index
                    .get(d)
                    .map(|&i| (d.to_string(), zt.data()[i]))
            })
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(ranked)
    }
}

/// A trained (or in-training) model of any variant.
pub enum AnyModel {
    Universal(UniversalModel),
    Baseline(BaselineModel),
}

impl AnyModel {
    pub fn store(&self) -> &ParamStore {
        match self {
            AnyModel::Universal(m) => &m.store,
            AnyModel::Baseline(m) => &m.store,
        }
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        match self {
            AnyModel::Universal(m) => &mut m.store,
            AnyModel::Baseline(m) => &mut m.store,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        match self {
            AnyModel::Universal(m) => &m.vocab,
            AnyModel::Baseline(m) => &m.vocab,
        }
    }

    /// Loss nodes + logged breakdown for one example.
    pub fn example_loss(
        &self,
        tape: &mut Tape,
        ex: &EncodedExample,
        rng: &mut SeededRng,
        training: bool,
    ) -> Result<(NodeId, LossBreakdown)> {
        match self {
            AnyModel::Universal(m) => m.joint_loss(tape, ex, rng, training),
            AnyModel::Baseline(m) => m.ce_loss(tape, ex, rng, training),
        }
    }

    pub fn classify(
        &self,
        tokens: &[usize],
        locale: LocaleId,
        registry: &DomainRegistry,
    ) -> Result<Vec<(String, f64)>> {
        match self {
            AnyModel::Universal(m) => m.classify(tokens, locale),
            AnyModel::Baseline(m) => m.classify(tokens, locale, registry),
        }
    }
}

/// Build a freshly initialized model for a variant.
///
/// * `single`/`union` need `locale` (their data/output scope).
/// * `universal` keeps the adversarial module constructed but disabled;
///   `universal_adv` enables it with the hyper's lambda.
pub fn build_variant(
    variant: Variant,
    locale: Option<LocaleId>,
    vocab: Vocabulary,
    registry: &DomainRegistry,
    dims: ModelDims,
    mut hyper: ModelHyper,
    rng: &mut SeededRng,
) -> Result<AnyModel> {
    match variant {
        Variant::Single | Variant::Union => {
            let l = locale.ok_or_else(|| {
                Error::Config(format!("variant {variant} requires a locale"))
            })?;
            Ok(AnyModel::Baseline(BaselineModel::init(
                vocab,
                registry,
                BaselineScope::Locale(l),
                dims,
                hyper,
                rng,
            )))
        }
        Variant::Constrained => Ok(AnyModel::Baseline(BaselineModel::init(
            vocab,
            registry,
            BaselineScope::AllLocales,
            dims,
            hyper,
            rng,
        ))),
        Variant::Universal => {
            hyper.adversarial_enabled = false;
            Ok(AnyModel::Universal(UniversalModel::init(
                vocab, registry, dims, hyper, rng,
            )))
        }
        Variant::UniversalAdv => {
            hyper.adversarial_enabled = true;
            Ok(AnyModel::Universal(UniversalModel::init(
                vocab, registry, dims, hyper, rng,
            )))
        }
    }
}
