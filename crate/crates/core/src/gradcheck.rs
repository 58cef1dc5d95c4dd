//! Finite-difference gradient checking.
//!
//! The checker perturbs every entry of the listed parameters by ±ε, evaluates
//! the loss closure both ways, and compares the central difference against
//! the analytic gradient the closure left behind. The closure must be
//! deterministic given the store (dropout off or its mask frozen) and must
//! populate `grad` as a side effect of computing the loss.

use crate::error::{Error, Result};
use crate::tape::{ParamId, ParamStore};

/// Relative error between an analytic and a numeric derivative:
/// `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Worst-case entry the check found, for reporting.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_entry: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Check analytic gradients of `loss_fn` against central differences for
/// every entry of `params`. Returns the maximum relative error over all
/// entries.
pub fn grad_check<F>(
    store: &mut ParamStore,
    params: &[ParamId],
    eps: f64,
    mut loss_fn: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut ParamStore) -> Result<f64>,
{
    store.zero_grads();
    let base = loss_fn(store)?;
    if !base.is_finite() {
        return Err(Error::NonFinite {
            context: "grad_check base loss".into(),
        });
    }
    let analytic: Vec<Vec<f64>> = params
        .iter()
        .map(|&p| store.get(p).grad.data().to_vec())
        .collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_entry: 0,
        analytic: 0.0,
        numeric: 0.0,
    };

    for (pi, &pid) in params.iter().enumerate() {
        for i in 0..store.get(pid).value.len() {
            let orig = store.get(pid).value.data()[i];

            store.get_mut(pid).value.data_mut()[i] = orig + eps;
            store.zero_grads();
            let plus = loss_fn(store)?;

            store.get_mut(pid).value.data_mut()[i] = orig - eps;
            store.zero_grads();
            let minus = loss_fn(store)?;

            store.get_mut(pid).value.data_mut()[i] = orig;

            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite {
                    context: format!(
                        "grad_check perturbation of {}[{}]",
                        store.get(pid).name,
                        i
                    ),
                });
            }

            let numeric = (plus - minus) / (2.0 * eps);
            let rel = relative_error(analytic[pi][i], numeric);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = store.get(pid).name.clone();
                report.worst_entry = i;
                report.analytic = analytic[pi][i];
                report.numeric = numeric;
            }
        }
    }

    store.zero_grads();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;
    use crate::tensor::Tensor;

    #[test]
    fn quadratic_loss_checks_to_1e9() {
        // L = 1/2 ||p||^2 with p = [1, 2]: analytic gradient is p itself.
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![1.0, 2.0]));

        let check = grad_check(&mut store, &[p], 1e-5, |s| {
            let mut tape = Tape::new();
            let pn = tape.param(s, p);
            let sq = tape.dot(s, pn, pn)?;
            let loss = tape.scale(s, sq, 0.5);
            let v = tape.value(s, loss).item();
            tape.backward(s, loss)?;
            Ok(v)
        })
        .unwrap();

        assert!(
            check.max_rel_error < 1e-9,
            "rel error {} at {}[{}]",
            check.max_rel_error,
            check.worst_param,
            check.worst_entry
        );

        // The analytic gradient itself is p.
        store.zero_grads();
        let mut tape = Tape::new();
        let pn = tape.param(&store, p);
        let sq = tape.dot(&store, pn, pn).unwrap();
        let loss = tape.scale(&store, sq, 0.5);
        tape.backward(&mut store, loss).unwrap();
        assert_eq!(store.get(p).grad.data(), &[1.0, 2.0]);
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![0.3, -0.7, 1.1]));
        let report = grad_check(&mut store, &[p], 1e-5, |_s| Ok(42.0)).unwrap();
        assert_eq!(report.max_rel_error, 0.0);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![1.0]));
        let err = grad_check(&mut store, &[p], 1e-5, |_s| Ok(f64::NAN));
        assert!(matches!(err, Err(Error::NonFinite { .. })));
    }
}

/// Outcome of one named check in the suite.
#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub threshold: f64,
    pub worst_param: String,
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.threshold
    }
}

/// Finite-difference checks for every registered primitive, plus (with
/// `full`) the composed universal model. `corrupted` injects a deliberately
/// wrong analytic gradient as a negative control; the suite must then fail.
pub fn suite(full: bool, corrupted: bool) -> Result<Vec<SuiteEntry>> {
    use crate::rng::SeededRng;
    use crate::tape::Tape;
    use crate::tensor::Tensor;

    const PRIMITIVE_TOL: f64 = 1e-6;
    const COMPOSED_TOL: f64 = 1e-4;
    let eps = 1e-5;
    let mut entries = Vec::new();

    let push = |name: &'static str,
                    report: GradCheckReport,
                    threshold: f64,
                    entries: &mut Vec<SuiteEntry>| {
        entries.push(SuiteEntry {
            name,
            max_rel_error: report.max_rel_error,
            threshold,
            worst_param: report.worst_param,
        });
    };

    // affine + activations + dot, composed through a scalar loss.
    {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(101);
        let w = store.add(
            "w",
            Tensor::matrix(5, 3, (0..15).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap(),
        );
        let x = store.add(
            "x",
            Tensor::vector((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect()),
        );
        let b = store.add(
            "b",
            Tensor::vector((0..5).map(|_| rng.uniform(-1.0, 1.0)).collect()),
        );
        let report = grad_check(&mut store, &[w, x, b], eps, |s| {
            let mut tape = Tape::new();
            let (wn, xn, bn) = (tape.param(s, w), tape.param(s, x), tape.param(s, b));
            let y = tape.affine(s, wn, xn, Some(bn))?;
            let sig = tape.sigmoid(s, y);
            let th = tape.tanh(s, sig);
            let sq = tape.dot(s, th, th)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            Ok(v)
        })?;
        push("affine_sigmoid_tanh_dot", report, PRIMITIVE_TOL, &mut entries);
    }

    // softmax through a cross-entropy target.
    {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(102);
        let z = store.add(
            "logits",
            Tensor::vector((0..6).map(|_| rng.uniform(-2.0, 2.0)).collect()),
        );
        let report = grad_check(&mut store, &[z], eps, |s| {
            let mut tape = Tape::new();
            let zn = tape.param(s, z);
            let probs = tape.softmax(s, zn)?;
            let nll = tape.nll_from_probs(s, probs, 2)?;
            let v = tape.value(s, nll).item();
            tape.backward(s, nll)?;
            Ok(v)
        })?;
        push("softmax_nll", report, PRIMITIVE_TOL, &mut entries);
    }

    // concat gradient split.
    {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(103);
        let a = store.add(
            "a",
            Tensor::vector((0..4).map(|_| rng.uniform(-1.0, 1.0)).collect()),
        );
        let b = store.add(
            "b",
            Tensor::vector((0..6).map(|_| rng.uniform(-1.0, 1.0)).collect()),
        );
        let report = grad_check(&mut store, &[a, b], eps, |s| {
            let mut tape = Tape::new();
            let (an, bn) = (tape.param(s, a), tape.param(s, b));
            let ab = tape.concat(s, an, bn)?;
            let sq = tape.dot(s, ab, ab)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            Ok(v)
        })?;
        push("concat", report, PRIMITIVE_TOL, &mut entries);
    }

    // embedding lookup rows.
    {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(104);
        let table = store.add(
            "table",
            Tensor::matrix(4, 3, (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap(),
        );
        let report = grad_check(&mut store, &[table], eps, |s| {
            let mut tape = Tape::new();
            let r0 = tape.lookup(s, table, 0)?;
            let r2 = tape.lookup(s, table, 2)?;
            let cat = tape.concat(s, r0, r2)?;
            let sq = tape.dot(s, cat, cat)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            Ok(v)
        })?;
        push("embedding_lookup", report, PRIMITIVE_TOL, &mut entries);
    }

    // one-vs-rest prediction losses.
    {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(105);
        let z = store.add(
            "logits",
            Tensor::vector((0..5).map(|_| rng.uniform(-2.0, 2.0)).collect()),
        );
        let report = grad_check(&mut store, &[z], eps, |s| {
            let mut tape = Tape::new();
            let zn = tape.param(s, z);
            let pos = tape.pos_nll(s, zn, 1)?;
            let neg = tape.neg_nll(s, zn, 1, false)?;
            let total = tape.sum_scalars(s, &[pos, neg])?;
            let v = tape.value(s, total).item();
            tape.backward(s, total)?;
            Ok(v)
        })?;
        push("one_vs_rest_nll", report, PRIMITIVE_TOL, &mut entries);
    }

    // attention scoring + supervision loss.
    {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(106);
        let attn = crate::attention::AttentionParams::init(&mut store, 4, 6, &mut rng);
        let cols: Vec<_> = (0..3)
            .map(|i| {
                store.add(
                    format!("h{i}"),
                    Tensor::vector((0..6).map(|_| rng.uniform(-1.0, 1.0)).collect()),
                )
            })
            .collect();
        let mut params = attn.param_ids().to_vec();
        params.extend(&cols);
        let report = grad_check(&mut store, &params, eps, |s| {
            let mut tape = Tape::new();
            let col_nodes: Vec<_> = cols.iter().map(|&c| tape.param(s, c)).collect();
            let out = attn.attend(&mut tape, s, &col_nodes)?;
            let loc = tape.attention_nll(s, out.weights, &[true, false, true])?;
            let sq = tape.dot(s, out.combined, out.combined)?;
            let total = tape.sum_scalars(s, &[loc, sq])?;
            let v = tape.value(s, total).item();
            tape.backward(s, total)?;
            Ok(v)
        })?;
        push("locale_attention", report, PRIMITIVE_TOL, &mut entries);
    }

    // single LSTM step.
    {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(107);
        let p = crate::lstm::LstmParams::init(&mut store, "lstm", 3, 4, &mut rng);
        let x = store.add(
            "x",
            Tensor::vector((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect()),
        );
        let mut params = p.param_ids().to_vec();
        params.push(x);
        let report = grad_check(&mut store, &params, eps, |s| {
            let mut tape = Tape::new();
            let xn = tape.param(s, x);
            let h0 = tape.constant(Tensor::zeros(vec![4]));
            let c0 = tape.constant(Tensor::zeros(vec![4]));
            let (h, _c) = p.step(&mut tape, s, xn, h0, c0)?;
            let sq = tape.dot(s, h, h)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            Ok(v)
        })?;
        push("lstm_step", report, PRIMITIVE_TOL, &mut entries);
    }

    // bidirectional encoder over three tokens.
    {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(108);
        let enc = crate::lstm::BiLstmEncoder::init(&mut store, "enc", 2, 3, &mut rng);
        let xs: Vec<_> = (0..3)
            .map(|i| {
                store.add(
                    format!("x{i}"),
                    Tensor::vector((0..2).map(|_| rng.uniform(-1.0, 1.0)).collect()),
                )
            })
            .collect();
        let mut params = enc.param_ids();
        params.extend(&xs);
        let report = grad_check(&mut store, &params, eps, |s| {
            let mut tape = Tape::new();
            let seq: Vec<_> = xs.iter().map(|&x| tape.param(s, x)).collect();
            let out = enc.encode(&mut tape, s, &seq)?;
            let sq = tape.dot(s, out, out)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            Ok(v)
        })?;
        push("bilstm_encode", report, PRIMITIVE_TOL, &mut entries);
    }

    if corrupted {
        // Negative control: report a gradient with the wrong sign and make
        // sure the finite-difference comparison flags it.
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![0.8, -0.4]));
        let report = grad_check(&mut store, &[p], eps, |s| {
            let mut tape = Tape::new();
            let pn = tape.param(s, p);
            let sq = tape.dot(s, pn, pn)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            // Flip the analytic gradient.
            let g = s.get_mut(p);
            for gv in g.grad.data_mut() {
                *gv = -*gv;
            }
            Ok(v)
        })?;
        push("corrupted_backward_control", report, PRIMITIVE_TOL, &mut entries);
    }

    if full {
        // Composed universal model: 2 locales, 3 domains, 2-token utterance,
        // dropout off.
        use crate::model::{EncodedExample, ModelDims, ModelHyper, UniversalModel};
        use crate::registry::{DomainEntry, DomainRegistry};
        use crate::vocab::Vocabulary;

        let entry = |name: &str, locales: &[&str], ls: bool| DomainEntry {
            name: name.into(),
            locales: locales.iter().map(|s| s.to_string()).collect(),
            locale_specific: ls,
            tags: Default::default(),
        };
        let registry = DomainRegistry::new(
            vec!["US".into(), "GB".into()],
            vec![
                entry("music", &["US", "GB"], false),
                entry("booking", &["US", "GB"], true),
                entry("rail", &["GB"], false),
            ],
        )?;
        let vocab = Vocabulary::build(["play jazz", "book a table"]);
        let mut rng = SeededRng::new(109);
        let dims = ModelDims {
            embed_dim: 5,
            lstm_dim: 4,
            attn_dim: 3,
            head_hidden: 6,
        };
        let hyper = ModelHyper {
            dropout: 0.0,
            embeddings_trainable: true,
            ..Default::default()
        };
        let mut model = UniversalModel::init(vocab, &registry, dims, hyper, &mut rng);
        let ex = EncodedExample::new(
            "play jazz",
            "music",
            registry.locale_id("GB")?,
            &model.vocab,
            &registry,
        )?;

        let mut outside = std::mem::take(&mut model.store);
        let params: Vec<_> = outside.ids().collect();
        let report = grad_check(&mut outside, &params, eps, |s| {
            std::mem::swap(&mut model.store, s);
            let mut tape = Tape::new();
            let mut drop_rng = SeededRng::new(0);
            let result = model
                .joint_loss(&mut tape, &ex, &mut drop_rng, false)
                .and_then(|(objective, _)| {
                    let v = tape.value(&model.store, objective).item();
                    tape.backward(&mut model.store, objective)?;
                    Ok(v)
                });
            std::mem::swap(&mut model.store, s);
            result
        })?;
        push("composed_universal_model", report, COMPOSED_TOL, &mut entries);
    }

    Ok(entries)
}
