//! Per-locale prediction heads and the multi-head prediction loss.
//!
//! Each locale has a two-layer feed-forward head over the final utterance
//! vector; its outputs are unnormalized logits for the locale's own domain
//! set, scored one-vs-rest with independent per-domain logistics. During
//! training an utterance contributes through every head in its sharing set,
//! normalized by the set size; at inference only the request locale's head is
//! consulted and only its domain set can be predicted.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tape::{NodeId, ParamId, ParamStore, Tape};
use crate::tensor::Tensor;

pub const DEFAULT_HEAD_HIDDEN: usize = 200;

#[derive(Debug, Clone)]
pub struct PredictionHead {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Output index → domain name, fixed in registry order.
    domains: Vec<String>,
    domain_index: HashMap<String, usize>,
}

impl PredictionHead {
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        domains: Vec<String>,
        rng: &mut SeededRng,
    ) -> Self {
        let out_dim = domains.len();
        let b1 = 1.0 / (input_dim as f64).sqrt();
        let b2 = 1.0 / (hidden_dim as f64).sqrt();
        let w1_data = (0..hidden_dim * input_dim)
            .map(|_| rng.uniform(-b1, b1))
            .collect();
        let w2_data = (0..out_dim * hidden_dim)
            .map(|_| rng.uniform(-b2, b2))
            .collect();
        let domain_index = domains
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i))
            .collect();
        Self {
            w1: store.add(
                format!("{prefix}.w1"),
                Tensor::matrix(hidden_dim, input_dim, w1_data).unwrap(),
            ),
            b1: store.add(format!("{prefix}.b1"), Tensor::zeros(vec![hidden_dim])),
            w2: store.add(
                format!("{prefix}.w2"),
                Tensor::matrix(out_dim, hidden_dim, w2_data).unwrap(),
            ),
            b2: store.add(format!("{prefix}.b2"), Tensor::zeros(vec![out_dim])),
            input_dim,
            hidden_dim,
            domains,
            domain_index,
        }
    }

    pub fn param_ids(&self) -> [ParamId; 4] {
        [self.w1, self.b1, self.w2, self.b2]
    }

    pub fn domains(&self) -> &[String] {
        &self.domains
    }

    pub fn out_dim(&self) -> usize {
        self.domains.len()
    }

    pub fn domain_logit_index(&self, domain: &str) -> Option<usize> {
        self.domain_index.get(domain).copied()
    }

    /// Two-layer network with a tanh between the layers; logits out.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, y: NodeId) -> Result<NodeId> {
        let w1 = tape.param(store, self.w1);
        let b1 = tape.param(store, self.b1);
        let hidden = tape.affine(store, w1, y, Some(b1))?;
        let hidden = tape.tanh(store, hidden);
        let w2 = tape.param(store, self.w2);
        let b2 = tape.param(store, self.b2);
        tape.affine(store, w2, hidden, Some(b2))
    }
}

/// Multi-head prediction loss over the sharing set:
/// `(1/|S|) Σ_{i∈S} ( -log σ(z_i[gold]) - Σ_{d≠gold} log(1-σ(z_i[d])) )`.
///
/// `scored` pairs each head in the sharing set with its logits node. Every
/// head must contain the gold domain; anything else is a routing bug. If
/// `literal_neg` is set the negative term uses `-Σ log σ(z_i[d])` as printed
/// in the source formulation (kept only for comparison).
pub fn prediction_loss(
    tape: &mut Tape,
    store: &ParamStore,
    scored: &[(&PredictionHead, NodeId)],
    gold: &str,
    literal_neg: bool,
) -> Result<NodeId> {
    if scored.is_empty() {
        return Err(Error::Input("prediction_loss: empty sharing set".into()));
    }
    let mut parts = Vec::with_capacity(scored.len() * 2);
    for (head, logits) in scored {
        let gold_idx = head.domain_logit_index(gold).ok_or_else(|| {
            Error::Routing(format!(
                "gold domain {gold:?} missing from a sharing-set head"
            ))
        })?;
        parts.push(tape.pos_nll(store, *logits, gold_idx)?);
        parts.push(tape.neg_nll(store, *logits, gold_idx, literal_neg)?);
    }
    let sum = tape.sum_scalars(store, &parts)?;
    Ok(tape.scale(store, sum, 1.0 / scored.len() as f64))
}

/// Rank a head's domains by logit, descending, breaking exact ties by
/// lexicographic domain name.
pub fn rank_domains(head: &PredictionHead, logits: &Tensor) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = head
        .domains
        .iter()
        .cloned()
        .zip(logits.data().iter().copied())
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::grad_check;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("domain_{i}")).collect()
    }

    #[test]
    fn zero_parameters_give_zero_logits() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(7);
        let head = PredictionHead::init(&mut store, "h", 4, 3, names(5), &mut rng);
        for id in head.param_ids() {
            store.get_mut(id).value.fill(0.0);
        }
        let mut tape = Tape::new();
        let y = tape.constant(Tensor::vector(vec![1.0, -1.0, 2.0, 0.5]));
        let z = head.forward(&mut tape, &store, y).unwrap();
        assert!(tape.value(&store, z).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_domain_head_yields_scalar_logit() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(11);
        let head = PredictionHead::init(&mut store, "h", 4, 3, names(1), &mut rng);
        let mut tape = Tape::new();
        let y = tape.constant(Tensor::vector(vec![0.1, 0.2, 0.3, 0.4]));
        let z = head.forward(&mut tape, &store, y).unwrap();
        assert_eq!(tape.value(&store, z).len(), 1);
    }

    #[test]
    fn head_gradients_match_finite_differences() {
        // Input 12 (= 2·d_h with d_h=6), hidden 5, four domains.
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(13);
        let head = PredictionHead::init(&mut store, "h", 12, 5, names(4), &mut rng);
        let y = store.add(
            "y",
            Tensor::vector((0..12).map(|_| rng.uniform(-1.0, 1.0)).collect()),
        );
        let mut params = head.param_ids().to_vec();
        params.push(y);

        let report = grad_check(&mut store, &params, 1e-5, |s| {
            let mut tape = Tape::new();
            let yn = tape.param(s, y);
            let z = head.forward(&mut tape, s, yn)?;
            let loss = prediction_loss(&mut tape, s, &[(&head, z)], "domain_2", false)?;
            let v = tape.value(s, loss).item();
            tape.backward(s, loss)?;
            Ok(v)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }

    #[test]
    fn saturated_logits_drive_loss_to_zero() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(17);
        let head = PredictionHead::init(&mut store, "h", 2, 2, names(2), &mut rng);
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::vector(vec![20.0, -20.0]));
        let loss = prediction_loss(&mut tape, &store, &[(&head, z)], "domain_0", false).unwrap();
        assert!(tape.value(&store, loss).item() < 1e-8);
    }

    #[test]
    fn zero_logits_two_domains_give_two_ln_two() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(19);
        let head = PredictionHead::init(&mut store, "h", 2, 2, names(2), &mut rng);
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::vector(vec![0.0, 0.0]));

        let pos = tape.pos_nll(&store, z, 0).unwrap();
        let neg = tape.neg_nll(&store, z, 0, false).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((tape.value(&store, pos).item() - ln2).abs() < 1e-12);
        assert!((tape.value(&store, neg).item() - ln2).abs() < 1e-12);

        let loss = prediction_loss(&mut tape, &store, &[(&head, z)], "domain_0", false).unwrap();
        assert!((tape.value(&store, loss).item() - 2.0 * ln2).abs() < 1e-12);
    }

    #[test]
    fn sharing_set_normalization_keeps_identical_heads_at_single_value() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(23);
        let head_a = PredictionHead::init(&mut store, "a", 3, 2, names(3), &mut rng);
        let head_b = PredictionHead::init(&mut store, "b", 3, 2, names(3), &mut rng);

        let mut tape = Tape::new();
        let z = tape.constant(Tensor::vector(vec![0.4, -0.7, 0.1]));
        let single =
            prediction_loss(&mut tape, &store, &[(&head_a, z)], "domain_1", false).unwrap();
        let double = prediction_loss(
            &mut tape,
            &store,
            &[(&head_a, z), (&head_b, z)],
            "domain_1",
            false,
        )
        .unwrap();
        let s = tape.value(&store, single).item();
        let d = tape.value(&store, double).item();
        assert!((s - d).abs() < 1e-12, "single {s} vs normalized double {d}");
    }

    #[test]
    fn missing_gold_domain_is_a_routing_bug() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(29);
        let head = PredictionHead::init(&mut store, "h", 2, 2, names(2), &mut rng);
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::vector(vec![0.0, 0.0]));
        assert!(matches!(
            prediction_loss(&mut tape, &store, &[(&head, z)], "elsewhere", false),
            Err(Error::Routing(_))
        ));
    }

    #[test]
    fn loss_is_invariant_under_domain_relabeling() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(31);
        let logits = [0.9, -0.3, 0.2, -1.5];
        let perm = [2usize, 0, 3, 1];

        let head = PredictionHead::init(&mut store, "h", 2, 2, names(4), &mut rng);
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::vector(logits.to_vec()));
        let base = prediction_loss(&mut tape, &store, &[(&head, z)], "domain_1", false).unwrap();
        let base_v = tape.value(&store, base).item();

        // Permute both the logits and the gold index consistently.
        let permuted_logits: Vec<f64> = perm.iter().map(|&i| logits[i]).collect();
        let new_gold = perm.iter().position(|&i| i == 1).unwrap();
        let zp = tape.constant(Tensor::vector(permuted_logits));
        let relabeled = prediction_loss(
            &mut tape,
            &store,
            &[(&head, zp)],
            &format!("domain_{new_gold}"),
            false,
        )
        .unwrap();
        assert!((tape.value(&store, relabeled).item() - base_v).abs() < 1e-12);
    }

    #[test]
    fn ranking_descends_and_breaks_ties_lexicographically() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(37);
        let head = PredictionHead::init(
            &mut store,
            "h",
            2,
            2,
            vec!["zeta".into(), "alpha".into(), "mid".into()],
            &mut rng,
        );
        let ranked = rank_domains(&head, &Tensor::vector(vec![0.5, 0.5, 2.0]));
        assert_eq!(ranked[0].0, "mid");
        // Tie at 0.5 resolved by name.
        assert_eq!(ranked[1].0, "alpha");
        assert_eq!(ranked[2].0, "zeta");
    }

    #[test]
    fn ranking_is_invariant_to_logit_shifts() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(41);
        let head = PredictionHead::init(&mut store, "h", 2, 2, names(4), &mut rng);
        let logits = vec![0.4, -0.2, 1.7, 0.0];
        let shifted: Vec<f64> = logits.iter().map(|v| v + 123.25).collect();
        let a: Vec<String> = rank_domains(&head, &Tensor::vector(logits))
            .into_iter()
            .map(|(d, _)| d)
            .collect();
        let b: Vec<String> = rank_domains(&head, &Tensor::vector(shifted))
            .into_iter()
            .map(|(d, _)| d)
            .collect();
        assert_eq!(a, b);
    }
}
