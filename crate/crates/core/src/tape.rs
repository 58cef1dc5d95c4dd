//! Reverse-mode autodiff over a recorded operation tape.
//!
//! Every primitive the model uses is a tape op with a hand-written backward.
//! A [`Tape`] records one forward pass (one utterance); [`Tape::backward`]
//! walks the recording in reverse and accumulates parameter gradients into a
//! [`ParamStore`]. Gradients add up across backward calls so a minibatch is a
//! plain sum of per-example passes; [`ParamStore::zero_grads`] resets them.
//!
//! Parameter values are never copied onto the tape: `Param` nodes hold an id
//! into the store and resolve on read. The one exception is `Lookup`, which
//! copies the addressed embedding row (a few doubles) and routes its gradient
//! back to that row only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{matvec_into, matvec_transpose_into, outer_into, Tensor};

/// Probabilities are clamped to `[CLAMP, 1 - CLAMP]` before any log.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// A trainable (or frozen) tensor with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub trainable: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.add_with(name, value, true)
    }

    pub fn add_frozen(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.add_with(name, value, false)
    }

    fn add_with(&mut self, name: impl Into<String>, value: Tensor, trainable: bool) -> ParamId {
        let grad = Tensor::zeros(value.shape().to_vec());
        self.params.push(Parameter {
            name: name.into(),
            value,
            grad,
            trainable,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Total number of scalar entries across all parameters.
    pub fn entry_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

enum Slot {
    Owned(Tensor),
    Param(ParamId),
}

enum Op {
    Constant,
    Param(ParamId),
    /// Row `row` of the rank-2 parameter `param`; value is a copied vector.
    Lookup {
        param: ParamId,
        row: usize,
    },
    /// `W·x (+ b)`.
    Affine {
        w: NodeId,
        x: NodeId,
        b: Option<NodeId>,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Mul {
        a: NodeId,
        b: NodeId,
    },
    Sigmoid {
        x: NodeId,
    },
    Tanh {
        x: NodeId,
    },
    Softmax {
        x: NodeId,
    },
    Concat {
        a: NodeId,
        b: NodeId,
        split: usize,
    },
    /// Mask entries are pre-scaled: 0.0 or 1/(1-rate).
    Dropout {
        x: NodeId,
        mask: Vec<f64>,
    },
    Dot {
        a: NodeId,
        b: NodeId,
    },
    StackScalars {
        parts: Vec<NodeId>,
    },
    /// `out = Σ_i weights[i] · vecs[i]`.
    WeightedSum {
        weights: NodeId,
        vecs: Vec<NodeId>,
    },
    /// Identity forward; backward multiplies the incoming gradient by `-lambda`.
    GradReverse {
        x: NodeId,
        lambda: f64,
    },
    /// `-( Σ_{l∈S} log a_l + Σ_{l∉S} log(1-a_l) )` over attention weights.
    AttentionNll {
        a: NodeId,
        in_set: Vec<bool>,
    },
    /// `-log σ(z[gold])`, computed as softplus(-z[gold]).
    PosNll {
        logits: NodeId,
        gold: usize,
    },
    /// Standard form: `-Σ_{j≠gold} log(1-σ(z_j))`; literal form: `-Σ_{j≠gold} log σ(z_j)`.
    NegNll {
        logits: NodeId,
        gold: usize,
        literal: bool,
    },
    /// `-log p[target]` over an existing probability vector.
    NllFromProbs {
        probs: NodeId,
        target: usize,
    },
    SumScalars {
        parts: Vec<NodeId>,
    },
    ScaleConst {
        x: NodeId,
        c: f64,
    },
}

struct Node {
    op: Op,
    value: Slot,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
}

fn sigmoid_scalar(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `log(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            op,
            value: Slot::Owned(value),
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Forward value of a node.
    pub fn value<'a>(&'a self, store: &'a ParamStore, id: NodeId) -> &'a Tensor {
        match &self.nodes[id.0].value {
            Slot::Owned(t) => t,
            Slot::Param(pid) => store.value(*pid),
        }
    }

    /// Leaf holding a constant; no gradient is tracked beneath it.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Constant, value)
    }

    /// Leaf referencing a store parameter. Repeated calls for the same
    /// parameter return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        if self.param_nodes.len() < store.len() {
            self.param_nodes.resize(store.len(), None);
        }
        if let Some(n) = self.param_nodes[id.0] {
            return n;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: Slot::Param(id),
        });
        let n = NodeId(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(n);
        n
    }

    /// Copy of row `row` of a rank-2 parameter; its gradient flows back into
    /// that row only (and only when the parameter is trainable).
    pub fn lookup(&mut self, store: &ParamStore, param: ParamId, row: usize) -> Result<NodeId> {
        let table = store.value(param);
        if table.rank() != 2 {
            return Err(Error::Rank {
                op: "lookup",
                expected: 2,
                shape: table.shape().to_vec(),
            });
        }
        if row >= table.rows() {
            return Err(Error::Input(format!(
                "lookup row {} out of range for table with {} rows",
                row,
                table.rows()
            )));
        }
        let value = Tensor::vector(table.row(row).to_vec());
        Ok(self.push(Op::Lookup { param, row }, value))
    }

    /// `W·x + b` for rank-2 `w`, rank-1 `x`, optional rank-1 `b`.
    pub fn affine(
        &mut self,
        store: &ParamStore,
        w: NodeId,
        x: NodeId,
        b: Option<NodeId>,
    ) -> Result<NodeId> {
        let wt = self.value(store, w);
        let xt = self.value(store, x);
        if wt.rank() != 2 {
            return Err(Error::Rank {
                op: "affine",
                expected: 2,
                shape: wt.shape().to_vec(),
            });
        }
        if xt.rank() != 1 || wt.cols() != xt.len() {
            return Err(Error::ShapeMismatch {
                op: "affine",
                lhs: wt.shape().to_vec(),
                rhs: xt.shape().to_vec(),
            });
        }
        let m = wt.rows();
        let mut out = vec![0.0; m];
        matvec_into(wt, xt.data(), &mut out);
        if let Some(b) = b {
            let bt = self.value(store, b);
            if bt.shape() != [m] {
                return Err(Error::ShapeMismatch {
                    op: "affine",
                    lhs: wt.shape().to_vec(),
                    rhs: bt.shape().to_vec(),
                });
            }
            for (o, bv) in out.iter_mut().zip(bt.data()) {
                *o += bv;
            }
        }
        Ok(self.push(Op::Affine { w, x, b }, Tensor::vector(out)))
    }

    pub fn add(&mut self, store: &ParamStore, a: NodeId, b: NodeId) -> Result<NodeId> {
        let at = self.value(store, a);
        let bt = self.value(store, b);
        if !at.same_shape(bt) {
            return Err(Error::ShapeMismatch {
                op: "add",
                lhs: at.shape().to_vec(),
                rhs: bt.shape().to_vec(),
            });
        }
        let data = at.data().iter().zip(bt.data()).map(|(x, y)| x + y).collect();
        let shape = at.shape().to_vec();
        Ok(self.push(Op::Add { a, b }, Tensor::new(shape, data)?))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, store: &ParamStore, a: NodeId, b: NodeId) -> Result<NodeId> {
        let at = self.value(store, a);
        let bt = self.value(store, b);
        if !at.same_shape(bt) {
            return Err(Error::ShapeMismatch {
                op: "mul",
                lhs: at.shape().to_vec(),
                rhs: bt.shape().to_vec(),
            });
        }
        let data = at.data().iter().zip(bt.data()).map(|(x, y)| x * y).collect();
        let shape = at.shape().to_vec();
        Ok(self.push(Op::Mul { a, b }, Tensor::new(shape, data)?))
    }

    pub fn sigmoid(&mut self, store: &ParamStore, x: NodeId) -> NodeId {
        let data = self
            .value_data(store, x)
            .iter()
            .map(|&v| sigmoid_scalar(v))
            .collect();
        let shape = self.value(store, x).shape().to_vec();
        self.push(Op::Sigmoid { x }, Tensor::new(shape, data).unwrap())
    }

    pub fn tanh(&mut self, store: &ParamStore, x: NodeId) -> NodeId {
        let data = self.value_data(store, x).iter().map(|v| v.tanh()).collect();
        let shape = self.value(store, x).shape().to_vec();
        self.push(Op::Tanh { x }, Tensor::new(shape, data).unwrap())
    }

    /// Softmax over a rank-1 input, stabilized by max subtraction.
    pub fn softmax(&mut self, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let xt = self.value(store, x);
        if xt.rank() != 1 {
            return Err(Error::Rank {
                op: "softmax",
                expected: 1,
                shape: xt.shape().to_vec(),
            });
        }
        let max = xt.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut data: Vec<f64> = xt.data().iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = data.iter().sum();
        data.iter_mut().for_each(|v| *v /= sum);
        Ok(self.push(Op::Softmax { x }, Tensor::vector(data)))
    }

    /// `[a; b]` for rank-1 inputs.
    pub fn concat(&mut self, store: &ParamStore, a: NodeId, b: NodeId) -> Result<NodeId> {
        let at = self.value(store, a);
        let bt = self.value(store, b);
        if at.rank() != 1 {
            return Err(Error::Rank {
                op: "concat",
                expected: 1,
                shape: at.shape().to_vec(),
            });
        }
        if bt.rank() != 1 {
            return Err(Error::Rank {
                op: "concat",
                expected: 1,
                shape: bt.shape().to_vec(),
            });
        }
        let split = at.len();
        let mut data = Vec::with_capacity(at.len() + bt.len());
        data.extend_from_slice(at.data());
        data.extend_from_slice(bt.data());
        Ok(self.push(Op::Concat { a, b, split }, Tensor::vector(data)))
    }

    /// Inverted dropout: in training mode each entry survives with probability
    /// `1-rate` and is scaled by `1/(1-rate)`; in eval mode this is the
    /// identity (the input node is returned unchanged).
    pub fn dropout(
        &mut self,
        store: &ParamStore,
        x: NodeId,
        rate: f64,
        rng: &mut SeededRng,
        training: bool,
    ) -> Result<NodeId> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - rate;
        let scale = 1.0 / keep;
        let xt = self.value(store, x);
        let mask: Vec<f64> = (0..xt.len())
            .map(|_| if rng.bernoulli(keep) { scale } else { 0.0 })
            .collect();
        let data = xt.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let shape = xt.shape().to_vec();
        Ok(self.push(Op::Dropout { x, mask }, Tensor::new(shape, data)?))
    }

    /// Inner product of two rank-1 tensors; output is a scalar node.
    pub fn dot(&mut self, store: &ParamStore, a: NodeId, b: NodeId) -> Result<NodeId> {
        let at = self.value(store, a);
        let bt = self.value(store, b);
        if at.rank() != 1 || !at.same_shape(bt) {
            return Err(Error::ShapeMismatch {
                op: "dot",
                lhs: at.shape().to_vec(),
                rhs: bt.shape().to_vec(),
            });
        }
        let v = at.data().iter().zip(bt.data()).map(|(x, y)| x * y).sum();
        Ok(self.push(Op::Dot { a, b }, Tensor::scalar(v)))
    }

    /// Stack scalar nodes into a rank-1 vector.
    pub fn stack_scalars(&mut self, store: &ParamStore, parts: &[NodeId]) -> Result<NodeId> {
        let mut data = Vec::with_capacity(parts.len());
        for &p in parts {
            let t = self.value(store, p);
            if t.len() != 1 {
                return Err(Error::Rank {
                    op: "stack_scalars",
                    expected: 1,
                    shape: t.shape().to_vec(),
                });
            }
            data.push(t.item());
        }
        Ok(self.push(
            Op::StackScalars {
                parts: parts.to_vec(),
            },
            Tensor::vector(data),
        ))
    }

    /// `Σ_i weights[i] · vecs[i]` for a rank-1 weight vector and equally
    /// shaped rank-1 vectors.
    pub fn weighted_sum(
        &mut self,
        store: &ParamStore,
        weights: NodeId,
        vecs: &[NodeId],
    ) -> Result<NodeId> {
        let wt = self.value(store, weights);
        if wt.rank() != 1 || wt.len() != vecs.len() {
            return Err(Error::ShapeMismatch {
                op: "weighted_sum",
                lhs: wt.shape().to_vec(),
                rhs: vec![vecs.len()],
            });
        }
        if vecs.is_empty() {
            return Err(Error::Input("weighted_sum over no vectors".into()));
        }
        let dim = self.value(store, vecs[0]).len();
        let mut out = vec![0.0; dim];
        for (i, &v) in vecs.iter().enumerate() {
            let vt = self.value(store, v);
            if vt.rank() != 1 || vt.len() != dim {
                return Err(Error::ShapeMismatch {
                    op: "weighted_sum",
                    lhs: vec![dim],
                    rhs: vt.shape().to_vec(),
                });
            }
            let w = wt.data()[i];
            for (o, x) in out.iter_mut().zip(vt.data()) {
                *o += w * x;
            }
        }
        Ok(self.push(
            Op::WeightedSum {
                weights,
                vecs: vecs.to_vec(),
            },
            Tensor::vector(out),
        ))
    }

    /// Identity in the forward pass; scales the gradient by `-lambda` on the
    /// way back. `lambda = 0` blocks the gradient exactly.
    pub fn grad_reverse(&mut self, store: &ParamStore, x: NodeId, lambda: f64) -> NodeId {
        let value = self.value(store, x).clone();
        self.push(Op::GradReverse { x, lambda }, value)
    }

    /// Supervised attention loss over weights `a` in (0,1):
    /// `-( Σ_{l∈S} log a_l + Σ_{l∉S} log(1-a_l) )`, with probabilities clamped
    /// to `[1e-12, 1-1e-12]` before the log.
    pub fn attention_nll(
        &mut self,
        store: &ParamStore,
        a: NodeId,
        in_set: &[bool],
    ) -> Result<NodeId> {
        let at = self.value(store, a);
        if at.rank() != 1 || at.len() != in_set.len() {
            return Err(Error::ShapeMismatch {
                op: "attention_nll",
                lhs: at.shape().to_vec(),
                rhs: vec![in_set.len()],
            });
        }
        if !in_set.iter().any(|&s| s) {
            return Err(Error::Input("attention_nll: empty sharing set".into()));
        }
        let mut loss = 0.0;
        for (&v, &inside) in at.data().iter().zip(in_set) {
            let p = if inside { v } else { 1.0 - v };
            loss -= p.max(PROB_CLAMP).ln();
        }
        Ok(self.push(
            Op::AttentionNll {
                a,
                in_set: in_set.to_vec(),
            },
            Tensor::scalar(loss),
        ))
    }

    /// `-log σ(z[gold])`.
    pub fn pos_nll(&mut self, store: &ParamStore, logits: NodeId, gold: usize) -> Result<NodeId> {
        let zt = self.value(store, logits);
        if gold >= zt.len() {
            return Err(Error::Input(format!(
                "pos_nll: gold index {} out of range {}",
                gold,
                zt.len()
            )));
        }
        let loss = softplus(-zt.data()[gold]);
        Ok(self.push(Op::PosNll { logits, gold }, Tensor::scalar(loss)))
    }

    /// Penalty over the non-gold logits. The standard form is
    /// `-Σ_{j≠gold} log(1-σ(z_j))`; the literal form `-Σ_{j≠gold} log σ(z_j)`
    /// is kept for comparison.
    pub fn neg_nll(
        &mut self,
        store: &ParamStore,
        logits: NodeId,
        gold: usize,
        literal: bool,
    ) -> Result<NodeId> {
        let zt = self.value(store, logits);
        if gold >= zt.len() {
            return Err(Error::Input(format!(
                "neg_nll: gold index {} out of range {}",
                gold,
                zt.len()
            )));
        }
        let mut loss = 0.0;
        for (j, &z) in zt.data().iter().enumerate() {
            if j == gold {
                continue;
            }
            loss += if literal { softplus(-z) } else { softplus(z) };
        }
        Ok(self.push(
            Op::NegNll {
                logits,
                gold,
                literal,
            },
            Tensor::scalar(loss),
        ))
    }

    /// `-log p[target]` over a probability vector (e.g. a softmax output).
    pub fn nll_from_probs(
        &mut self,
        store: &ParamStore,
        probs: NodeId,
        target: usize,
    ) -> Result<NodeId> {
        let pt = self.value(store, probs);
        if target >= pt.len() {
            return Err(Error::Input(format!(
                "nll_from_probs: target index {} out of range {}",
                target,
                pt.len()
            )));
        }
        let loss = -pt.data()[target].max(PROB_CLAMP).ln();
        Ok(self.push(Op::NllFromProbs { probs, target }, Tensor::scalar(loss)))
    }

    pub fn sum_scalars(&mut self, store: &ParamStore, parts: &[NodeId]) -> Result<NodeId> {
        let mut total = 0.0;
        for &p in parts {
            let t = self.value(store, p);
            if t.len() != 1 {
                return Err(Error::Rank {
                    op: "sum_scalars",
                    expected: 1,
                    shape: t.shape().to_vec(),
                });
            }
            total += t.item();
        }
        Ok(self.push(
            Op::SumScalars {
                parts: parts.to_vec(),
            },
            Tensor::scalar(total),
        ))
    }

    pub fn scale(&mut self, store: &ParamStore, x: NodeId, c: f64) -> NodeId {
        let data = self.value_data(store, x).iter().map(|v| v * c).collect();
        let shape = self.value(store, x).shape().to_vec();
        self.push(Op::ScaleConst { x, c }, Tensor::new(shape, data).unwrap())
    }

    fn value_data<'a>(&'a self, store: &'a ParamStore, id: NodeId) -> &'a [f64] {
        self.value(store, id).data()
    }

    /// Reverse pass from a scalar `loss` node. Parameter gradients are
    /// accumulated (added) into the store; call [`ParamStore::zero_grads`]
    /// between minibatches.
    pub fn backward(&self, store: &mut ParamStore, loss: NodeId) -> Result<()> {
        let grads = self.node_grads(store, loss)?;

        // Fold leaf gradients into the store.
        for (id, node) in self.nodes.iter().enumerate() {
            let Some(g) = &grads[id] else { continue };
            match &node.op {
                Op::Param(pid) => {
                    let p = store.get_mut(*pid);
                    if p.trainable {
                        p.grad.add_assign(g);
                    }
                }
                Op::Lookup { param, row } => {
                    let p = store.get_mut(*param);
                    if p.trainable {
                        for (o, gv) in p.grad.row_mut(*row).iter_mut().zip(g.data()) {
                            *o += gv;
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Gradient of `loss` with respect to an arbitrary tape node, without
    /// touching parameter gradients. Returns zeros if the loss does not
    /// reach `target`.
    pub fn grad_wrt(&self, store: &ParamStore, loss: NodeId, target: NodeId) -> Result<Tensor> {
        let grads = self.node_grads(store, loss)?;
        let shape = self.value(store, target).shape().to_vec();
        Ok(grads[target.0]
            .clone()
            .unwrap_or_else(|| Tensor::zeros(shape)))
    }

    /// Per-node gradients of `loss`, indexed by node id.
    fn node_grads(&self, store: &ParamStore, loss: NodeId) -> Result<Vec<Option<Tensor>>> {
        let loss_t = self.value(store, loss);
        if loss_t.len() != 1 {
            return Err(Error::Input(format!(
                "backward from non-scalar node of shape {:?}",
                loss_t.shape()
            )));
        }
        if !loss_t.item().is_finite() {
            return Err(Error::NonFinite {
                context: "loss".into(),
            });
        }

        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.0).rev() {
            if grads[id].is_none() {
                continue;
            }
            let (before, after) = grads.split_at_mut(id);
            let g = after[0].as_ref().unwrap();
            let node = &self.nodes[id];

            fn acc<'t>(slot: &'t mut Option<Tensor>, shape: &[usize]) -> &'t mut Tensor {
                slot.get_or_insert_with(|| Tensor::zeros(shape.to_vec()))
            }

            match &node.op {
                Op::Constant | Op::Param(_) | Op::Lookup { .. } => {}
                Op::Affine { w, x, b } => {
                    let wt = self.value(store, *w);
                    let xt = self.value(store, *x);
                    let gw = acc(&mut before[w.0], wt.shape());
                    outer_into(g.data(), xt.data(), gw.data_mut());
                    let gx = acc(&mut before[x.0], xt.shape());
                    matvec_transpose_into(wt, g.data(), gx.data_mut());
                    if let Some(b) = b {
                        let gb = acc(&mut before[b.0], g.shape());
                        gb.add_assign(g);
                    }
                }
                Op::Add { a, b } => {
                    acc(&mut before[a.0], g.shape()).add_assign(g);
                    acc(&mut before[b.0], g.shape()).add_assign(g);
                }
                Op::Mul { a, b } => {
                    let at = self.value(store, *a);
                    let bt = self.value(store, *b);
                    {
                        let ga = acc(&mut before[a.0], g.shape());
                        for ((o, gv), bv) in ga.data_mut().iter_mut().zip(g.data()).zip(bt.data())
                        {
                            *o += gv * bv;
                        }
                    }
                    let gb = acc(&mut before[b.0], g.shape());
                    for ((o, gv), av) in gb.data_mut().iter_mut().zip(g.data()).zip(at.data()) {
                        *o += gv * av;
                    }
                }
                Op::Sigmoid { x } => {
                    let y = match &node.value {
                        Slot::Owned(t) => t,
                        Slot::Param(_) => unreachable!(),
                    };
                    let gx = acc(&mut before[x.0], g.shape());
                    for ((o, gv), yv) in gx.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                        *o += gv * yv * (1.0 - yv);
                    }
                }
                Op::Tanh { x } => {
                    let y = match &node.value {
                        Slot::Owned(t) => t,
                        Slot::Param(_) => unreachable!(),
                    };
                    let gx = acc(&mut before[x.0], g.shape());
                    for ((o, gv), yv) in gx.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                        *o += gv * (1.0 - yv * yv);
                    }
                }
                Op::Softmax { x } => {
                    let p = match &node.value {
                        Slot::Owned(t) => t,
                        Slot::Param(_) => unreachable!(),
                    };
                    let s: f64 = g.data().iter().zip(p.data()).map(|(gv, pv)| gv * pv).sum();
                    let gx = acc(&mut before[x.0], g.shape());
                    for ((o, gv), pv) in gx.data_mut().iter_mut().zip(g.data()).zip(p.data()) {
                        *o += pv * (gv - s);
                    }
                }
                Op::Concat { a, b, split } => {
                    let (ga_part, gb_part) = g.data().split_at(*split);
                    if *split > 0 {
                        let ga = acc(&mut before[a.0], &[*split]);
                        for (o, gv) in ga.data_mut().iter_mut().zip(ga_part) {
                            *o += gv;
                        }
                    }
                    if !gb_part.is_empty() {
                        let gb = acc(&mut before[b.0], &[gb_part.len()]);
                        for (o, gv) in gb.data_mut().iter_mut().zip(gb_part) {
                            *o += gv;
                        }
                    }
                }
                Op::Dropout { x, mask } => {
                    let gx = acc(&mut before[x.0], g.shape());
                    for ((o, gv), m) in gx.data_mut().iter_mut().zip(g.data()).zip(mask) {
                        *o += gv * m;
                    }
                }
                Op::Dot { a, b } => {
                    let gs = g.item();
                    let at = self.value(store, *a);
                    let bt = self.value(store, *b);
                    {
                        let ga = acc(&mut before[a.0], at.shape());
                        for (o, bv) in ga.data_mut().iter_mut().zip(bt.data()) {
                            *o += gs * bv;
                        }
                    }
                    let gb = acc(&mut before[b.0], at.shape());
                    for (o, av) in gb.data_mut().iter_mut().zip(at.data()) {
                        *o += gs * av;
                    }
                }
                Op::StackScalars { parts } => {
                    for (i, p) in parts.iter().enumerate() {
                        let gp = acc(&mut before[p.0], &[1]);
                        gp.data_mut()[0] += g.data()[i];
                    }
                }
                Op::WeightedSum { weights, vecs } => {
                    let wt = self.value(store, *weights);
                    for (i, v) in vecs.iter().enumerate() {
                        let vt = self.value(store, *v);
                        let dw: f64 = g.data().iter().zip(vt.data()).map(|(gv, x)| gv * x).sum();
                        let w_i = wt.data()[i];
                        {
                            let gv_slot = acc(&mut before[v.0], g.shape());
                            for (o, gv) in gv_slot.data_mut().iter_mut().zip(g.data()) {
                                *o += w_i * gv;
                            }
                        }
                        let gw = acc(&mut before[weights.0], wt.shape());
                        gw.data_mut()[i] += dw;
                    }
                }
                Op::GradReverse { x, lambda } => {
                    let gx = acc(&mut before[x.0], g.shape());
                    for (o, gv) in gx.data_mut().iter_mut().zip(g.data()) {
                        *o += -lambda * gv;
                    }
                }
                Op::AttentionNll { a, in_set } => {
                    let gs = g.item();
                    let at = self.value(store, *a);
                    let ga = acc(&mut before[a.0], at.shape());
                    for ((o, &v), &inside) in
                        ga.data_mut().iter_mut().zip(at.data()).zip(in_set)
                    {
                        if inside {
                            *o += gs * (-1.0 / v.max(PROB_CLAMP));
                        } else {
                            *o += gs * (1.0 / (1.0 - v).max(PROB_CLAMP));
                        }
                    }
                }
                Op::PosNll { logits, gold } => {
                    let gs = g.item();
                    let zt = self.value(store, *logits);
                    let z = zt.data()[*gold];
                    let gz = acc(&mut before[logits.0], zt.shape());
                    gz.data_mut()[*gold] += gs * (sigmoid_scalar(z) - 1.0);
                }
                Op::NegNll {
                    logits,
                    gold,
                    literal,
                } => {
                    let gs = g.item();
                    let zt = self.value(store, *logits);
                    let n = zt.len();
                    let vals: Vec<f64> = zt.data().to_vec();
                    let gz = acc(&mut before[logits.0], &[n]);
                    for (j, &z) in vals.iter().enumerate() {
                        if j == *gold {
                            continue;
                        }
                        let s = sigmoid_scalar(z);
                        gz.data_mut()[j] += if *literal { gs * (s - 1.0) } else { gs * s };
                    }
                }
                Op::NllFromProbs { probs, target } => {
                    let gs = g.item();
                    let pt = self.value(store, *probs);
                    let p = pt.data()[*target].max(PROB_CLAMP);
                    let n = pt.len();
                    let gp = acc(&mut before[probs.0], &[n]);
                    gp.data_mut()[*target] += -gs / p;
                }
                Op::SumScalars { parts } => {
                    let gs = g.item();
                    for p in parts {
                        let gp = acc(&mut before[p.0], &[1]);
                        gp.data_mut()[0] += gs;
                    }
                }
                Op::ScaleConst { x, c } => {
                    let gx = acc(&mut before[x.0], g.shape());
                    for (o, gv) in gx.data_mut().iter_mut().zip(g.data()) {
                        *o += c * gv;
                    }
                }
            }
        }

        Ok(grads)
    }
}
