//! Supervised locale attention.
//!
//! Each locale-encoder output h_i is scored independently as
//! `a_i = logistic(w · tanh(V · h_i))` and the locale-aware vector is the
//! weighted combination `x_l = Σ_i a_i h_i`. The per-locale logistic (rather
//! than a softmax over locales) lets several locales carry weight near 1 at
//! once, which multi-locale sharing sets require. The supervision loss
//! rewards weight on locales in the sharing set and penalizes the rest.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tape::{NodeId, ParamId, ParamStore, Tape};
use crate::tensor::Tensor;

pub const DEFAULT_ATTN_DIM: usize = 64;

#[derive(Debug, Clone)]
pub struct AttentionParams {
    /// `d_a × d_h` projection.
    pub v: ParamId,
    /// `d_a` scoring vector applied to each projected column.
    pub w: ParamId,
    pub attn_dim: usize,
    pub enc_dim: usize,
}

/// Tape nodes produced by [`attend`].
#[derive(Debug, Clone, Copy)]
pub struct AttentionOutput {
    /// Rank-1 tensor of k weights, each strictly inside (0,1).
    pub weights: NodeId,
    /// Locale-aware combination of the encoder outputs, length d_h.
    pub combined: NodeId,
}

impl AttentionParams {
    pub fn init(
        store: &mut ParamStore,
        attn_dim: usize,
        enc_dim: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let bound = 1.0 / (attn_dim as f64).sqrt();
        let vdata = (0..attn_dim * enc_dim)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        let wdata = (0..attn_dim).map(|_| rng.uniform(-bound, bound)).collect();
        Self {
            v: store.add("attn.v", Tensor::matrix(attn_dim, enc_dim, vdata).unwrap()),
            w: store.add("attn.w", Tensor::vector(wdata)),
            attn_dim,
            enc_dim,
        }
    }

    pub fn param_ids(&self) -> [ParamId; 2] {
        [self.v, self.w]
    }

    /// Score every column of H and combine. `columns` must be non-empty.
    pub fn attend(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        columns: &[NodeId],
    ) -> Result<AttentionOutput> {
        if columns.is_empty() {
            return Err(Error::Input("attend: no encoder columns".into()));
        }
        let vn = tape.param(store, self.v);
        let wn = tape.param(store, self.w);
        let mut scores = Vec::with_capacity(columns.len());
        for &h in columns {
            let proj = tape.affine(store, vn, h, None)?;
            let proj = tape.tanh(store, proj);
            scores.push(tape.dot(store, wn, proj)?);
        }
        let stacked = tape.stack_scalars(store, &scores)?;
        let weights = tape.sigmoid(store, stacked);
        let combined = tape.weighted_sum(store, weights, columns)?;
        Ok(AttentionOutput { weights, combined })
    }
}

/// Supervision loss over attention weights:
/// `-( Σ_{l∈S} log a_l + Σ_{l∉S} log(1 - a_l) )`.
///
/// `in_set[l]` marks membership of locale l in the sharing set; the set must
/// be non-empty. Weights at exactly 0 or 1 are clamped to `[1e-12, 1-1e-12]`
/// before the log.
pub fn attention_loss(
    tape: &mut Tape,
    store: &ParamStore,
    weights: NodeId,
    in_set: &[bool],
) -> Result<NodeId> {
    tape.attention_nll(store, weights, in_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::grad_check;

    fn columns_from(
        tape: &mut Tape,
        data: &[Vec<f64>],
    ) -> Vec<NodeId> {
        data.iter()
            .map(|d| tape.constant(Tensor::vector(d.clone())))
            .collect()
    }

    #[test]
    fn zero_scoring_vector_gives_half_weights() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(61);
        let attn = AttentionParams::init(&mut store, 4, 3, &mut rng);
        store.get_mut(attn.w).value.fill(0.0);

        let mut tape = Tape::new();
        let cols = columns_from(&mut tape, &[vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 1.0]]);
        let out = attn.attend(&mut tape, &store, &cols).unwrap();
        assert_eq!(tape.value(&store, out.weights).data(), &[0.5, 0.5]);
        // x_l = 0.5 * Σ h_i.
        assert_eq!(tape.value(&store, out.combined).data(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn saturated_single_weight_recovers_the_column() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(67);
        let attn = AttentionParams::init(&mut store, 2, 2, &mut rng);
        // Large positive score regardless of column content: V = 0 so
        // tanh(V·h) = 0... that kills the dot; instead drive w huge against a
        // nonzero projection.
        store.get_mut(attn.v).value.fill(1.0);
        store.get_mut(attn.w).value.fill(500.0);

        let mut tape = Tape::new();
        let cols = columns_from(&mut tape, &[vec![0.9, 0.7]]);
        let out = attn.attend(&mut tape, &store, &cols).unwrap();
        let a = tape.value(&store, out.weights).data()[0];
        assert!(a > 1.0 - 1e-9);
        for (got, want) in tape
            .value(&store, out.combined)
            .data()
            .iter()
            .zip([0.9, 0.7])
        {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn weights_stay_in_open_unit_interval() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(71);
        let attn = AttentionParams::init(&mut store, 4, 3, &mut rng);
        let mut tape = Tape::new();
        let cols = columns_from(
            &mut tape,
            &[vec![10.0, -10.0, 5.0], vec![0.0, 0.0, 0.0], vec![-3.0, 4.0, -5.0]],
        );
        let out = attn.attend(&mut tape, &store, &cols).unwrap();
        for &a in tape.value(&store, out.weights).data() {
            assert!(a > 0.0 && a < 1.0);
        }
    }

    #[test]
    fn attend_gradients_match_finite_differences() {
        // d_h=6, k=3, d_a=4 through a scalar loss on x_l.
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(73);
        let attn = AttentionParams::init(&mut store, 4, 6, &mut rng);
        let hcols: Vec<ParamId> = (0..3)
            .map(|i| {
                store.add(
                    format!("h{i}"),
                    Tensor::vector((0..6).map(|_| rng.uniform(-1.0, 1.0)).collect()),
                )
            })
            .collect();
        let mut params = attn.param_ids().to_vec();
        params.extend(&hcols);

        let report = grad_check(&mut store, &params, 1e-5, |s| {
            let mut tape = Tape::new();
            let cols: Vec<NodeId> = hcols.iter().map(|&p| tape.param(s, p)).collect();
            let out = attn.attend(&mut tape, s, &cols)?;
            let sq = tape.dot(s, out.combined, out.combined)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            Ok(v)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }

    #[test]
    fn loss_at_uniform_weights_is_two_ln_two() {
        let store = ParamStore::new();
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::vector(vec![0.5, 0.5]));
        let loss = attention_loss(&mut tape, &store, a, &[true, false]).unwrap();
        let got = tape.value(&store, loss).item();
        assert!((got - 2.0 * std::f64::consts::LN_2).abs() < 1e-12, "{got}");
    }

    #[test]
    fn loss_vanishes_when_all_locales_shared_and_confident() {
        let store = ParamStore::new();
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::vector(vec![1.0 - 1e-13, 1.0 - 1e-13]));
        let loss = attention_loss(&mut tape, &store, a, &[true, true]).unwrap();
        assert!(tape.value(&store, loss).item() < 1e-11);
    }

    #[test]
    fn loss_matches_independent_evaluation() {
        // k=4, S={0,2}, a=[0.9, 0.2, 0.8, 0.1]:
        // -(ln 0.9 + ln 0.8 + ln 0.8 + ln 0.9) = 0.657008133944072...
        // (frozen from an independent high-precision evaluation).
        let store = ParamStore::new();
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::vector(vec![0.9, 0.2, 0.8, 0.1]));
        let loss = attention_loss(&mut tape, &store, a, &[true, false, true, false]).unwrap();
        let got = tape.value(&store, loss).item();
        assert!((got - 0.657008133944072).abs() < 1e-12, "{got}");
    }

    #[test]
    fn loss_rejects_empty_sharing_set() {
        let store = ParamStore::new();
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::vector(vec![0.5, 0.5]));
        assert!(attention_loss(&mut tape, &store, a, &[false, false]).is_err());
    }

    #[test]
    fn loss_is_positive_at_interior_points_and_gradient_signs_split() {
        let mut store = ParamStore::new();
        let a_param = store.add("a", Tensor::vector(vec![0.3, 0.6, 0.2]));
        let in_set = [true, false, true];

        let mut tape = Tape::new();
        let a = tape.param(&store, a_param);
        let loss = attention_loss(&mut tape, &store, a, &in_set).unwrap();
        assert!(tape.value(&store, loss).item() > 0.0);

        tape.backward(&mut store, loss).unwrap();
        let g = store.get(a_param).grad.data();
        // Pulling up in-set weights decreases the loss; out-of-set the reverse.
        assert!(g[0] < 0.0 && g[2] < 0.0);
        assert!(g[1] > 0.0);
    }

    #[test]
    fn attend_is_permutation_equivariant() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(79);
        let attn = AttentionParams::init(&mut store, 3, 4, &mut rng);

        let cols_data = vec![
            vec![0.5, -0.1, 0.7, 0.2],
            vec![-0.3, 0.9, 0.0, -0.6],
            vec![0.1, 0.1, -0.4, 0.8],
        ];
        let perm = [2usize, 0, 1];

        let mut tape = Tape::new();
        let cols = columns_from(&mut tape, &cols_data);
        let out = attn.attend(&mut tape, &store, &cols).unwrap();
        let a = tape.value(&store, out.weights).data().to_vec();
        let xl = tape.value(&store, out.combined).data().to_vec();

        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| cols_data[i].clone()).collect();
        let pcols = columns_from(&mut tape, &permuted);
        let pout = attn.attend(&mut tape, &store, &pcols).unwrap();
        let pa = tape.value(&store, pout.weights).data().to_vec();
        let pxl = tape.value(&store, pout.combined).data().to_vec();

        for (j, &i) in perm.iter().enumerate() {
            assert_eq!(pa[j], a[i]);
        }
        // x_l is a reordered sum, so allow summation-order ulps.
        for (p, x) in pxl.iter().zip(&xl) {
            assert!((p - x).abs() < 1e-12);
        }
    }
}
