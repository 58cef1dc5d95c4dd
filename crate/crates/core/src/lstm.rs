//! LSTM cell and bidirectional encoder.
//!
//! An encoder maps a token-embedding sequence to a fixed vector by running a
//! forward LSTM and a backward LSTM and concatenating their final hidden
//! states; output dimension is `2 * hidden_dim`. The model instantiates one
//! shared encoder plus one encoder per locale in an [`EncoderBank`].

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tape::{NodeId, ParamId, ParamStore, Tape};
use crate::tensor::Tensor;

pub const DEFAULT_LSTM_DIM: usize = 100;

/// One direction's gate parameters. Each gate weight is
/// `hidden_dim × (input_dim + hidden_dim)`, applied to `[x_t; h_{t-1}]`.
#[derive(Debug, Clone)]
pub struct LstmParams {
    pub w_input: ParamId,
    pub w_forget: ParamId,
    pub w_cell: ParamId,
    pub w_output: ParamId,
    pub b_input: ParamId,
    pub b_forget: ParamId,
    pub b_cell: ParamId,
    pub b_output: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl LstmParams {
    /// Weights uniform in ±1/√hidden_dim; forget bias 1.0, other biases 0.
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let bound = 1.0 / (hidden_dim as f64).sqrt();
        let cols = input_dim + hidden_dim;
        let mut weight = |name: &str, rng: &mut SeededRng| {
            let data = (0..hidden_dim * cols)
                .map(|_| rng.uniform(-bound, bound))
                .collect();
            store.add(
                format!("{prefix}.{name}"),
                Tensor::matrix(hidden_dim, cols, data).unwrap(),
            )
        };
        let w_input = weight("w_i", rng);
        let w_forget = weight("w_f", rng);
        let w_cell = weight("w_g", rng);
        let w_output = weight("w_o", rng);
        let b_input = store.add(format!("{prefix}.b_i"), Tensor::zeros(vec![hidden_dim]));
        let b_forget = store.add(
            format!("{prefix}.b_f"),
            Tensor::vector(vec![1.0; hidden_dim]),
        );
        let b_cell = store.add(format!("{prefix}.b_g"), Tensor::zeros(vec![hidden_dim]));
        let b_output = store.add(format!("{prefix}.b_o"), Tensor::zeros(vec![hidden_dim]));
        Self {
            w_input,
            w_forget,
            w_cell,
            w_output,
            b_input,
            b_forget,
            b_cell,
            b_output,
            input_dim,
            hidden_dim,
        }
    }

    pub fn param_ids(&self) -> [ParamId; 8] {
        [
            self.w_input,
            self.w_forget,
            self.w_cell,
            self.w_output,
            self.b_input,
            self.b_forget,
            self.b_cell,
            self.b_output,
        ]
    }

    /// Standard LSTM step: sigmoid input/forget/output gates, tanh candidate.
    pub fn step(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x_t: NodeId,
        h_prev: NodeId,
        c_prev: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        let xh = tape.concat(store, x_t, h_prev)?;

        let wi = tape.param(store, self.w_input);
        let bi = tape.param(store, self.b_input);
        let i_gate = tape.affine(store, wi, xh, Some(bi))?;
        let i_gate = tape.sigmoid(store, i_gate);

        let wf = tape.param(store, self.w_forget);
        let bf = tape.param(store, self.b_forget);
        let f_gate = tape.affine(store, wf, xh, Some(bf))?;
        let f_gate = tape.sigmoid(store, f_gate);

        let wg = tape.param(store, self.w_cell);
        let bg = tape.param(store, self.b_cell);
        let candidate = tape.affine(store, wg, xh, Some(bg))?;
        let candidate = tape.tanh(store, candidate);

        let wo = tape.param(store, self.w_output);
        let bo = tape.param(store, self.b_output);
        let o_gate = tape.affine(store, wo, xh, Some(bo))?;
        let o_gate = tape.sigmoid(store, o_gate);

        let keep = tape.mul(store, f_gate, c_prev)?;
        let write = tape.mul(store, i_gate, candidate)?;
        let c_t = tape.add(store, keep, write)?;
        let c_tanh = tape.tanh(store, c_t);
        let h_t = tape.mul(store, o_gate, c_tanh)?;
        Ok((h_t, c_t))
    }
}

/// Forward + backward LSTM pair over the same input space.
#[derive(Debug, Clone)]
pub struct BiLstmEncoder {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstmEncoder {
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut SeededRng,
    ) -> Self {
        Self {
            fwd: LstmParams::init(store, &format!("{prefix}.fwd"), input_dim, hidden_dim, rng),
            bwd: LstmParams::init(store, &format!("{prefix}.bwd"), input_dim, hidden_dim, rng),
        }
    }

    pub fn output_dim(&self) -> usize {
        2 * self.fwd.hidden_dim
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.fwd.param_ids().to_vec();
        ids.extend(self.bwd.param_ids());
        ids
    }

    fn run_direction(
        params: &LstmParams,
        tape: &mut Tape,
        store: &ParamStore,
        seq: impl Iterator<Item = NodeId>,
    ) -> Result<NodeId> {
        let mut h = tape.constant(Tensor::zeros(vec![params.hidden_dim]));
        let mut c = tape.constant(Tensor::zeros(vec![params.hidden_dim]));
        for x in seq {
            let (nh, nc) = params.step(tape, store, x, h, c)?;
            h = nh;
            c = nc;
        }
        Ok(h)
    }

    /// Encode a non-empty embedding sequence to `concat(h_fwd_last, h_bwd_last)`.
    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, seq: &[NodeId]) -> Result<NodeId> {
        if seq.is_empty() {
            return Err(Error::Input(
                "encode: empty sequence (map empty utterances to UNK first)".into(),
            ));
        }
        let h_fwd = Self::run_direction(&self.fwd, tape, store, seq.iter().copied())?;
        let h_bwd = Self::run_direction(&self.bwd, tape, store, seq.iter().rev().copied())?;
        tape.concat(store, h_fwd, h_bwd)
    }
}

/// The shared encoder plus one encoder per locale, in a fixed locale order.
#[derive(Debug, Clone)]
pub struct EncoderBank {
    pub shared: BiLstmEncoder,
    pub per_locale: Vec<BiLstmEncoder>,
}

impl EncoderBank {
    pub fn init(
        store: &mut ParamStore,
        input_dim: usize,
        hidden_dim: usize,
        locale_names: &[String],
        rng: &mut SeededRng,
    ) -> Self {
        let shared = BiLstmEncoder::init(store, "enc.shared", input_dim, hidden_dim, rng);
        let per_locale = locale_names
            .iter()
            .map(|name| {
                BiLstmEncoder::init(store, &format!("enc.{name}"), input_dim, hidden_dim, rng)
            })
            .collect();
        Self { shared, per_locale }
    }

    pub fn locale_count(&self) -> usize {
        self.per_locale.len()
    }

    /// Shared output `x_s` plus the per-locale outputs, column `i` from the
    /// bank's `i`-th encoder.
    pub fn encode_all(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        seq: &[NodeId],
    ) -> Result<(NodeId, Vec<NodeId>)> {
        let x_s = self.shared.encode(tape, store, seq)?;
        let columns = self
            .per_locale
            .iter()
            .map(|enc| enc.encode(tape, store, seq))
            .collect::<Result<Vec<_>>>()?;
        Ok((x_s, columns))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::grad_check;

    fn zeroed(store: &mut ParamStore, prefix: &str, d_in: usize, d_h: usize) -> LstmParams {
        let mut rng = SeededRng::new(0);
        let p = LstmParams::init(store, prefix, d_in, d_h, &mut rng);
        for id in p.param_ids() {
            store.get_mut(id).value.fill(0.0);
        }
        p
    }

    #[test]
    fn zero_parameters_give_zero_state() {
        let mut store = ParamStore::new();
        let p = zeroed(&mut store, "z", 3, 4);
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![1.0, -2.0, 0.5]));
        let h0 = tape.constant(Tensor::zeros(vec![4]));
        let c0 = tape.constant(Tensor::zeros(vec![4]));
        let (h, c) = p.step(&mut tape, &store, x, h0, c0).unwrap();
        assert!(tape.value(&store, h).data().iter().all(|&v| v == 0.0));
        assert!(tape.value(&store, c).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_gradients_match_finite_differences() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(17);
        let p = LstmParams::init(&mut store, "g", 3, 4, &mut rng);
        let x = store.add(
            "x",
            Tensor::vector((0..3).map(|_| rng.uniform(-1.0, 1.0)).collect()),
        );
        let mut params = p.param_ids().to_vec();
        params.push(x);

        let report = grad_check(&mut store, &params, 1e-5, |s| {
            let mut tape = Tape::new();
            let xn = tape.param(s, x);
            let h0 = tape.constant(Tensor::zeros(vec![4]));
            let c0 = tape.constant(Tensor::zeros(vec![4]));
            let (h, _c) = p.step(&mut tape, s, xn, h0, c0)?;
            let sq = tape.dot(s, h, h)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            Ok(v)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }

    #[test]
    fn saturated_gates_make_cell_additive() {
        // Forget and input gates driven to ~1 by large biases, weights zero:
        // c_t = c_{t-1} + tanh(b_g).
        let mut store = ParamStore::new();
        let p = zeroed(&mut store, "sat", 2, 3);
        store.get_mut(p.b_forget).value.fill(30.0);
        store.get_mut(p.b_input).value.fill(30.0);
        store.get_mut(p.b_cell).value.fill(0.7);

        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![0.3, -0.3]));
        let h0 = tape.constant(Tensor::zeros(vec![3]));
        let c0 = tape.constant(Tensor::vector(vec![0.5, -0.25, 1.0]));
        let (_h, c1) = p.step(&mut tape, &store, x, h0, c0).unwrap();

        let g = 0.7f64.tanh();
        for (got, c_prev) in tape
            .value(&store, c1)
            .data()
            .iter()
            .zip([0.5, -0.25, 1.0])
        {
            assert!((got - (c_prev + g)).abs() < 1e-9, "got {got}");
        }
    }

    #[test]
    fn encode_single_token_concatenates_both_directions() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(23);
        let enc = BiLstmEncoder::init(&mut store, "e", 3, 4, &mut rng);

        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![0.1, 0.2, -0.4]));
        let out = enc.encode(&mut tape, &store, &[x]).unwrap();
        let out_v = tape.value(&store, out).data().to_vec();
        assert_eq!(out_v.len(), enc.output_dim());

        // Against a by-hand single step for each direction.
        let h0 = tape.constant(Tensor::zeros(vec![4]));
        let c0 = tape.constant(Tensor::zeros(vec![4]));
        let (hf, _) = enc.fwd.step(&mut tape, &store, x, h0, c0).unwrap();
        let (hb, _) = enc.bwd.step(&mut tape, &store, x, h0, c0).unwrap();
        let mut expect = tape.value(&store, hf).data().to_vec();
        expect.extend_from_slice(tape.value(&store, hb).data());
        assert_eq!(out_v, expect);
    }

    #[test]
    fn encode_rejects_empty_sequence() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(29);
        let enc = BiLstmEncoder::init(&mut store, "e", 3, 4, &mut rng);
        let mut tape = Tape::new();
        assert!(matches!(
            enc.encode(&mut tape, &store, &[]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn swapping_directions_and_reversing_input_swaps_halves() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(31);
        let enc = BiLstmEncoder::init(&mut store, "e", 2, 3, &mut rng);
        let swapped = BiLstmEncoder {
            fwd: enc.bwd.clone(),
            bwd: enc.fwd.clone(),
        };

        let mut tape = Tape::new();
        let seq: Vec<NodeId> = (0..3)
            .map(|i| {
                tape.constant(Tensor::vector(vec![0.2 * i as f64, -0.1 * i as f64 + 0.3]))
            })
            .collect();
        let rev: Vec<NodeId> = seq.iter().rev().copied().collect();

        let a_node = enc.encode(&mut tape, &store, &seq).unwrap();
        let a = tape.value(&store, a_node).data().to_vec();
        let b_node = swapped.encode(&mut tape, &store, &rev).unwrap();
        let b = tape.value(&store, b_node).data().to_vec();

        let d = enc.fwd.hidden_dim;
        assert_eq!(&a[..d], &b[d..]);
        assert_eq!(&a[d..], &b[..d]);
    }

    #[test]
    fn encode_gradients_through_three_tokens() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(37);
        let enc = BiLstmEncoder::init(&mut store, "e", 2, 3, &mut rng);
        let xs: Vec<ParamId> = (0..3)
            .map(|i| {
                store.add(
                    format!("x{i}"),
                    Tensor::vector((0..2).map(|_| rng.uniform(-1.0, 1.0)).collect()),
                )
            })
            .collect();
        let mut params = enc.param_ids();
        params.extend(&xs);

        let report = grad_check(&mut store, &params, 1e-5, |s| {
            let mut tape = Tape::new();
            let seq: Vec<NodeId> = xs.iter().map(|&p| tape.param(s, p)).collect();
            let out = enc.encode(&mut tape, s, &seq)?;
            let sq = tape.dot(s, out, out)?;
            let v = tape.value(s, sq).item();
            tape.backward(s, sq)?;
            Ok(v)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }

    #[test]
    fn encode_output_dim_is_fixed_for_any_length() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(41);
        let enc = BiLstmEncoder::init(&mut store, "e", 2, 5, &mut rng);
        for len in 1..=4 {
            let mut tape = Tape::new();
            let seq: Vec<NodeId> = (0..len)
                .map(|i| tape.constant(Tensor::vector(vec![i as f64, 1.0])))
                .collect();
            let out = enc.encode(&mut tape, &store, &seq).unwrap();
            assert_eq!(tape.value(&store, out).len(), 10);
        }
    }

    #[test]
    fn bank_single_locale_column_matches_direct_encode() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(43);
        let bank = EncoderBank::init(&mut store, 2, 3, &["US".to_string()], &mut rng);

        let mut tape = Tape::new();
        let seq = vec![tape.constant(Tensor::vector(vec![0.4, -0.2]))];
        let (_xs, cols) = bank.encode_all(&mut tape, &store, &seq).unwrap();
        assert_eq!(cols.len(), 1);
        let direct = bank.per_locale[0].encode(&mut tape, &store, &seq).unwrap();
        assert_eq!(
            tape.value(&store, cols[0]).data(),
            tape.value(&store, direct).data()
        );
    }

    #[test]
    fn identical_locale_encoders_produce_identical_columns() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(47);
        let names: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
        let mut bank = EncoderBank::init(&mut store, 2, 3, &names, &mut rng);
        // Make locale B share A's parameters exactly.
        bank.per_locale[1] = bank.per_locale[0].clone();

        let mut tape = Tape::new();
        let seq = vec![
            tape.constant(Tensor::vector(vec![0.4, -0.2])),
            tape.constant(Tensor::vector(vec![-1.0, 0.8])),
        ];
        let (_xs, cols) = bank.encode_all(&mut tape, &store, &seq).unwrap();
        assert_eq!(
            tape.value(&store, cols[0]).data(),
            tape.value(&store, cols[1]).data()
        );
    }

    #[test]
    fn four_locale_bank_yields_four_columns() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(53);
        let names: Vec<String> = ["US", "GB", "CA", "IN"].iter().map(|s| s.to_string()).collect();
        let bank = EncoderBank::init(&mut store, 2, 3, &names, &mut rng);
        let mut tape = Tape::new();
        let seq = vec![tape.constant(Tensor::vector(vec![1.0, 2.0]))];
        let (xs, cols) = bank.encode_all(&mut tape, &store, &seq).unwrap();
        assert_eq!(cols.len(), 4);
        assert_eq!(tape.value(&store, xs).len(), 6);
        for c in &cols {
            assert_eq!(tape.value(&store, *c).len(), 6);
        }
    }

    #[test]
    fn permuting_bank_order_permutes_columns() {
        let mut store = ParamStore::new();
        let mut rng = SeededRng::new(59);
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let bank = EncoderBank::init(&mut store, 2, 3, &names, &mut rng);
        let permuted = EncoderBank {
            shared: bank.shared.clone(),
            per_locale: vec![
                bank.per_locale[2].clone(),
                bank.per_locale[0].clone(),
                bank.per_locale[1].clone(),
            ],
        };

        let mut tape = Tape::new();
        let seq = vec![
            tape.constant(Tensor::vector(vec![0.3, 0.9])),
            tape.constant(Tensor::vector(vec![-0.5, 0.1])),
        ];
        let (_, cols) = bank.encode_all(&mut tape, &store, &seq).unwrap();
        let (_, pcols) = permuted.encode_all(&mut tape, &store, &seq).unwrap();
        for (i, j) in [(2usize, 0usize), (0, 1), (1, 2)] {
            assert_eq!(
                tape.value(&store, cols[i]).data(),
                tape.value(&store, pcols[j]).data()
            );
        }
    }
}
