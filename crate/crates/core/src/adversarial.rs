//! Adversarial locale prediction with gradient reversal.
//!
//! A single-layer head predicts the utterance's locale from the shared
//! encoder output x_s. The head itself is trained discriminatively with
//! standard cross-entropy, but the gradient flowing from this loss into x_s
//! (and on into the shared encoder) is negated and scaled by `lambda`, so
//! optimizing the head pushes the shared representation toward locale
//! invariance. The scalar reported for logging is the positive log-likelihood
//! `log z[true_locale]`, i.e. the negation of the head's cross-entropy.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tape::{NodeId, ParamId, ParamStore, Tape};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct AdversarialHead {
    /// `k × d_h` locale-prediction weights.
    pub weight: ParamId,
    pub bias: ParamId,
    pub locale_count: usize,
}

/// Tape nodes from one adversarial forward pass.
#[derive(Debug, Clone, Copy)]
pub struct AdversarialOutput {
    /// Softmax distribution over locales.
    pub probs: NodeId,
    /// Head cross-entropy `-log z[true_locale]`: the scalar that enters the
    /// optimized objective (encoder-side gradient already reversed).
    pub head_ce: NodeId,
}

impl AdversarialHead {
    pub fn init(
        store: &mut ParamStore,
        locale_count: usize,
        enc_dim: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let bound = 1.0 / (enc_dim as f64).sqrt();
        let wdata = (0..locale_count * enc_dim)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Self {
            weight: store.add(
                "adv.w",
                Tensor::matrix(locale_count, enc_dim, wdata).unwrap(),
            ),
            bias: store.add("adv.b", Tensor::zeros(vec![locale_count])),
            locale_count,
        }
    }

    pub fn param_ids(&self) -> [ParamId; 2] {
        [self.weight, self.bias]
    }

    /// Locale distribution `softmax(W·x_s + b)` without any gradient
    /// manipulation (inference/probing path).
    pub fn locale_predict(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x_s: NodeId,
    ) -> Result<NodeId> {
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let logits = tape.affine(store, w, x_s, Some(b))?;
        tape.softmax(store, logits)
    }

    /// Adversarial loss for one utterance. The head parameters receive the
    /// plain cross-entropy gradient; x_s receives that gradient times
    /// `-lambda` (exactly zero when `lambda == 0`).
    pub fn adversarial_loss(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x_s: NodeId,
        true_locale: usize,
        lambda: f64,
    ) -> Result<AdversarialOutput> {
        if true_locale >= self.locale_count {
            return Err(Error::Input(format!(
                "adversarial_loss: locale index {} out of range {}",
                true_locale, self.locale_count
            )));
        }
        let reversed = tape.grad_reverse(store, x_s, lambda);
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let logits = tape.affine(store, w, reversed, Some(b))?;
        let probs = tape.softmax(store, logits)?;
        let head_ce = tape.nll_from_probs(store, probs, true_locale)?;
        Ok(AdversarialOutput { probs, head_ce })
    }

    /// The logged scalar (positive log-likelihood of the true locale) for a
    /// computed head cross-entropy.
    pub fn reported_loss(head_ce_value: f64) -> f64 {
        -head_ce_value
    }
}
