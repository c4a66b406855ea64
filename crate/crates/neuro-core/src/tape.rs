use crate::conv::{conv2d, conv2d_backward, ConvSpec};
use crate::error::{shape_mismatch, NeuroError};
use crate::surrogate::Surrogate;
use crate::tensor::Tensor;

pub type NodeId = usize;

/// Forward behaviour of the spike nonlinearity.
///
/// `Hard` is the real model: a Heaviside step on `z > 0` whose backward pass
/// substitutes the surrogate derivative. `Smoothed` replaces the step with
/// the surrogate's antiderivative so the whole graph becomes differentiable;
/// finite differences of a `Smoothed` graph must agree with the tape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpikeMode {
    Hard,
    Smoothed,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddConst(NodeId),
    ScaleConst(NodeId, f64),
    MulScalar(NodeId, NodeId),
    DivScalar(NodeId, NodeId),
    Conv2d {
        input: NodeId,
        weight: NodeId,
        bias: Option<NodeId>,
        spec: ConvSpec,
    },
    Linear {
        input: NodeId,
        weight: NodeId,
        bias: Option<NodeId>,
    },
    Relu(NodeId),
    Sigmoid(NodeId),
    Spike(NodeId),
    Max2(NodeId, NodeId),
    Sum(NodeId),
    Mean(NodeId),
    Reshape(NodeId),
    BceWithLogits {
        logits: NodeId,
        target: Tensor,
        pos_weight: f64,
        weights: Option<Tensor>,
    },
    Mse {
        pred: NodeId,
        target: Tensor,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Gradients of one backward pass, indexed by the node ids of the tape that
/// produced them. Nodes that do not require gradient stay `None`.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id).and_then(|g| g.as_ref())
    }

    /// Gradient of a node, materializing zeros of the given shape when the
    /// node never received any flow.
    pub fn get_or_zeros(&self, id: NodeId, shape: &[usize]) -> Tensor {
        match self.get(id) {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape),
        }
    }
}

/// Reverse-mode tape over dense `f64` tensors. Nodes are appended in
/// creation order; `backward` walks them once in reverse.
pub struct Tape {
    nodes: Vec<Node>,
    spike_mode: SpikeMode,
    surrogate: Surrogate,
}

impl Tape {
    pub fn new(spike_mode: SpikeMode, surrogate: Surrogate) -> Self {
        Tape {
            nodes: Vec::new(),
            spike_mode,
            surrogate,
        }
    }

    pub fn spike_mode(&self) -> SpikeMode {
        self.spike_mode
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.nodes.len() - 1
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id].requires_grad
    }

    /// Trainable leaf.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, true)
    }

    /// Non-trainable input; backward never flows into it.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, false)
    }

    fn binary_same_shape(
        &mut self,
        ctx: &'static str,
        a: NodeId,
        b: NodeId,
        f: fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<NodeId, NeuroError> {
        let out = self.nodes[a].value.zip_map(&self.nodes[b].value, ctx, f)?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(out, op, rg))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NeuroError> {
        self.binary_same_shape("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NeuroError> {
        self.binary_same_shape("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NeuroError> {
        self.binary_same_shape("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn max2(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NeuroError> {
        self.binary_same_shape("max2", a, b, f64::max, Op::Max2(a, b))
    }

    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let out = self.nodes[a].value.map(|x| x + c);
        let rg = self.needs(a);
        self.push(out, Op::AddConst(a), rg)
    }

    pub fn scale_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let out = self.nodes[a].value.map(|x| x * c);
        let rg = self.needs(a);
        self.push(out, Op::ScaleConst(a, c), rg)
    }

    fn expect_scalar(&self, ctx: &'static str, s: NodeId) -> Result<f64, NeuroError> {
        if self.nodes[s].value.numel() != 1 {
            return Err(shape_mismatch(ctx, "[1]", self.nodes[s].value.shape()));
        }
        Ok(self.nodes[s].value.data()[0])
    }

    /// Elementwise product with a single trainable scalar node.
    pub fn mul_scalar(&mut self, a: NodeId, s: NodeId) -> Result<NodeId, NeuroError> {
        let sv = self.expect_scalar("mul_scalar", s)?;
        let out = self.nodes[a].value.map(|x| x * sv);
        let rg = self.needs(a) || self.needs(s);
        Ok(self.push(out, Op::MulScalar(a, s), rg))
    }

    /// Elementwise division by a single trainable scalar node.
    pub fn div_scalar(&mut self, a: NodeId, s: NodeId) -> Result<NodeId, NeuroError> {
        let sv = self.expect_scalar("div_scalar", s)?;
        if sv == 0.0 {
            return Err(NeuroError::InvalidParameter("div_scalar by zero".into()));
        }
        let out = self.nodes[a].value.map(|x| x / sv);
        let rg = self.needs(a) || self.needs(s);
        Ok(self.push(out, Op::DivScalar(a, s), rg))
    }

    pub fn conv2d(
        &mut self,
        input: NodeId,
        weight: NodeId,
        bias: Option<NodeId>,
        spec: ConvSpec,
    ) -> Result<NodeId, NeuroError> {
        let out = conv2d(
            &self.nodes[input].value,
            &self.nodes[weight].value,
            bias.map(|b| &self.nodes[b].value),
            spec,
        )?;
        let rg = self.needs(input)
            || self.needs(weight)
            || bias.map(|b| self.needs(b)).unwrap_or(false);
        Ok(self.push(
            out,
            Op::Conv2d {
                input,
                weight,
                bias,
                spec,
            },
            rg,
        ))
    }

    /// `weight [n_out, n_in] * input [n_in] + bias [n_out]`.
    pub fn linear(
        &mut self,
        input: NodeId,
        weight: NodeId,
        bias: Option<NodeId>,
    ) -> Result<NodeId, NeuroError> {
        let x = &self.nodes[input].value;
        let w = &self.nodes[weight].value;
        if w.shape().len() != 2 {
            return Err(shape_mismatch("linear weight", "[n_out, n_in]", w.shape()));
        }
        let (n_out, n_in) = (w.shape()[0], w.shape()[1]);
        if x.numel() != n_in {
            return Err(shape_mismatch(
                "linear input",
                &format!("[{n_in}]"),
                x.shape(),
            ));
        }
        if let Some(b) = bias {
            if self.nodes[b].value.shape() != [n_out] {
                return Err(shape_mismatch(
                    "linear bias",
                    &format!("[{n_out}]"),
                    self.nodes[b].value.shape(),
                ));
            }
        }
        let mut out = vec![0.0; n_out];
        for (o, row) in out.iter_mut().zip(w.data().chunks(n_in)) {
            *o = row.iter().zip(x.data()).map(|(wi, xi)| wi * xi).sum();
        }
        if let Some(b) = bias {
            for (o, bi) in out.iter_mut().zip(self.nodes[b].value.data()) {
                *o += bi;
            }
        }
        let rg = self.needs(input)
            || self.needs(weight)
            || bias.map(|b| self.needs(b)).unwrap_or(false);
        Ok(self.push(
            Tensor::from_vec(&[n_out], out),
            Op::Linear {
                input,
                weight,
                bias,
            },
            rg,
        ))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let out = self.nodes[a].value.map(|x| x.max(0.0));
        let rg = self.needs(a);
        self.push(out, Op::Relu(a), rg)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let out = self.nodes[a].value.map(sigmoid);
        let rg = self.needs(a);
        self.push(out, Op::Sigmoid(a), rg)
    }

    /// Spike nonlinearity over normalized membrane offset `z`; forward per
    /// [`SpikeMode`], backward always the surrogate derivative.
    pub fn spike(&mut self, z: NodeId) -> NodeId {
        let out = match self.spike_mode {
            SpikeMode::Hard => self.nodes[z].value.map(|v| if v > 0.0 { 1.0 } else { 0.0 }),
            SpikeMode::Smoothed => {
                let s = self.surrogate;
                self.nodes[z].value.map(|v| s.smoothed_step(v))
            }
        };
        let rg = self.needs(z);
        self.push(out, Op::Spike(z), rg)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let out = Tensor::scalar(self.nodes[a].value.sum());
        let rg = self.needs(a);
        self.push(out, Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let n = self.nodes[a].value.numel() as f64;
        let out = Tensor::scalar(self.nodes[a].value.sum() / n);
        let rg = self.needs(a);
        self.push(out, Op::Mean(a), rg)
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId, NeuroError> {
        let out = self.nodes[a].value.reshaped(shape)?;
        let rg = self.needs(a);
        Ok(self.push(out, Op::Reshape(a), rg))
    }

    /// Mean binary cross-entropy on logits with positive-class weighting,
    /// computed with softplus for stability.
    pub fn bce_with_logits(
        &mut self,
        logits: NodeId,
        target: &Tensor,
        pos_weight: f64,
    ) -> Result<NodeId, NeuroError> {
        self.bce_weighted(logits, target, pos_weight, None)
    }

    /// BCE-with-logits where each element additionally carries its own
    /// weight; the loss is the weighted mean. Lets a loss concentrate on the
    /// few informative pixels of a mostly-empty frame without losing the
    /// rest entirely.
    pub fn bce_with_logits_weighted(
        &mut self,
        logits: NodeId,
        target: &Tensor,
        pos_weight: f64,
        weights: &Tensor,
    ) -> Result<NodeId, NeuroError> {
        self.bce_weighted(logits, target, pos_weight, Some(weights.clone()))
    }

    fn bce_weighted(
        &mut self,
        logits: NodeId,
        target: &Tensor,
        pos_weight: f64,
        weights: Option<Tensor>,
    ) -> Result<NodeId, NeuroError> {
        let x = &self.nodes[logits].value;
        if x.shape() != target.shape() {
            return Err(shape_mismatch("bce target", x.shape(), target.shape()));
        }
        if let Some(w) = &weights {
            if w.shape() != x.shape() {
                return Err(shape_mismatch("bce weights", x.shape(), w.shape()));
            }
            let total: f64 = w.data().iter().sum();
            if total.is_nan() || total <= 0.0 {
                return Err(NeuroError::InvalidParameter(
                    "bce weights must have positive mass".into(),
                ));
            }
        }
        let norm = match &weights {
            Some(w) => w.data().iter().sum::<f64>(),
            None => x.numel() as f64,
        };
        let mut acc = 0.0;
        for (i, (&xi, &ti)) in x.data().iter().zip(target.data()).enumerate() {
            let wi = weights.as_ref().map_or(1.0, |w| w.data()[i]);
            // -w*t*log(sigmoid(x)) - (1-t)*log(1-sigmoid(x))
            acc += wi * (pos_weight * ti * softplus(-xi) + (1.0 - ti) * softplus(xi));
        }
        let rg = self.needs(logits);
        Ok(self.push(
            Tensor::scalar(acc / norm),
            Op::BceWithLogits {
                logits,
                target: target.clone(),
                pos_weight,
                weights,
            },
            rg,
        ))
    }

    /// Mean squared error against a fixed target.
    pub fn mse(&mut self, pred: NodeId, target: &Tensor) -> Result<NodeId, NeuroError> {
        let x = &self.nodes[pred].value;
        if x.shape() != target.shape() {
            return Err(shape_mismatch("mse target", x.shape(), target.shape()));
        }
        let n = x.numel() as f64;
        let acc: f64 = x
            .data()
            .iter()
            .zip(target.data())
            .map(|(xi, ti)| (xi - ti) * (xi - ti))
            .sum();
        let rg = self.needs(pred);
        Ok(self.push(
            Tensor::scalar(acc / n),
            Op::Mse {
                pred,
                target: target.clone(),
            },
            rg,
        ))
    }

    /// Reverse pass from a scalar root. Returns one gradient slot per node.
    pub fn backward(&self, root: NodeId) -> Result<Gradients, NeuroError> {
        if self.nodes[root].value.numel() != 1 {
            return Err(shape_mismatch(
                "backward root",
                "[1]",
                self.nodes[root].value.shape(),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root] = Some(Tensor::scalar(1.0));

        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else { continue };
            // accumulate() refuses constant inputs, so propagation prunes
            // itself on subgraphs with no trainable leaves
            self.propagate(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        if !self.nodes[id].requires_grad {
            return;
        }
        match &mut grads[id] {
            Some(existing) => {
                for (e, d) in existing.data_mut().iter_mut().zip(delta.data()) {
                    *e += d;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&self, id: NodeId, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                if self.needs(*a) {
                    let d = g.zip_map(bv, "mul-bwd", |gi, bi| gi * bi).unwrap();
                    self.accumulate(grads, *a, d);
                }
                if self.needs(*b) {
                    let d = g.zip_map(av, "mul-bwd", |gi, ai| gi * ai).unwrap();
                    self.accumulate(grads, *b, d);
                }
            }
            Op::AddConst(a) => self.accumulate(grads, *a, g.clone()),
            Op::ScaleConst(a, c) => {
                let c = *c;
                self.accumulate(grads, *a, g.map(|x| x * c));
            }
            Op::MulScalar(a, s) => {
                let sv = self.nodes[*s].value.data()[0];
                if self.needs(*a) {
                    self.accumulate(grads, *a, g.map(|x| x * sv));
                }
                if self.needs(*s) {
                    let dot: f64 = g
                        .data()
                        .iter()
                        .zip(self.nodes[*a].value.data())
                        .map(|(gi, ai)| gi * ai)
                        .sum();
                    self.accumulate(grads, *s, Tensor::scalar(dot));
                }
            }
            Op::DivScalar(a, s) => {
                let sv = self.nodes[*s].value.data()[0];
                if self.needs(*a) {
                    self.accumulate(grads, *a, g.map(|x| x / sv));
                }
                if self.needs(*s) {
                    let dot: f64 = g
                        .data()
                        .iter()
                        .zip(self.nodes[*a].value.data())
                        .map(|(gi, ai)| gi * ai)
                        .sum();
                    self.accumulate(grads, *s, Tensor::scalar(-dot / (sv * sv)));
                }
            }
            Op::Conv2d {
                input,
                weight,
                bias,
                spec,
            } => {
                let iv = &self.nodes[*input].value;
                let wv = &self.nodes[*weight].value;
                let mut gi = if self.needs(*input) {
                    Some(vec![0.0; iv.numel()])
                } else {
                    None
                };
                let mut gw = vec![0.0; wv.numel()];
                let mut gb = bias
                    .filter(|b| self.needs(*b))
                    .map(|b| vec![0.0; self.nodes[b].value.numel()]);
                conv2d_backward(
                    iv,
                    wv,
                    *spec,
                    g,
                    gi.as_deref_mut(),
                    &mut gw,
                    gb.as_deref_mut(),
                );
                if let Some(gi) = gi {
                    self.accumulate(grads, *input, Tensor::from_vec(iv.shape(), gi));
                }
                if self.needs(*weight) {
                    self.accumulate(grads, *weight, Tensor::from_vec(wv.shape(), gw));
                }
                if let (Some(b), Some(gb)) = (bias, gb) {
                    self.accumulate(
                        grads,
                        *b,
                        Tensor::from_vec(self.nodes[*b].value.shape(), gb),
                    );
                }
            }
            Op::Linear {
                input,
                weight,
                bias,
            } => {
                let x = &self.nodes[*input].value;
                let w = &self.nodes[*weight].value;
                let (n_out, n_in) = (w.shape()[0], w.shape()[1]);
                if self.needs(*input) {
                    let mut gx = vec![0.0; n_in];
                    for o in 0..n_out {
                        let go = g.data()[o];
                        for (gxi, wi) in gx.iter_mut().zip(&w.data()[o * n_in..(o + 1) * n_in]) {
                            *gxi += go * wi;
                        }
                    }
                    self.accumulate(grads, *input, Tensor::from_vec(x.shape(), gx));
                }
                if self.needs(*weight) {
                    let mut gw = vec![0.0; n_out * n_in];
                    for o in 0..n_out {
                        let go = g.data()[o];
                        for (gwi, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x.data()) {
                            *gwi += go * xi;
                        }
                    }
                    self.accumulate(grads, *weight, Tensor::from_vec(&[n_out, n_in], gw));
                }
                if let Some(b) = bias {
                    if self.needs(*b) {
                        self.accumulate(grads, *b, g.clone());
                    }
                }
            }
            Op::Relu(a) => {
                let d = g
                    .zip_map(
                        &self.nodes[*a].value,
                        "relu-bwd",
                        |gi, xi| if xi > 0.0 { gi } else { 0.0 },
                    )
                    .unwrap();
                self.accumulate(grads, *a, d);
            }
            Op::Sigmoid(a) => {
                let d = g
                    .zip_map(&self.nodes[id].value, "sigmoid-bwd", |gi, yi| {
                        gi * yi * (1.0 - yi)
                    })
                    .unwrap();
                self.accumulate(grads, *a, d);
            }
            Op::Spike(z) => {
                let s = self.surrogate;
                let d = g
                    .zip_map(&self.nodes[*z].value, "spike-bwd", |gi, zi| {
                        gi * s.grad(zi)
                    })
                    .unwrap();
                self.accumulate(grads, *z, d);
            }
            Op::Max2(a, b) => {
                // ties route to the left argument, matching f64::max forward
                let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                if self.needs(*a) {
                    let d = Tensor::from_vec(
                        av.shape(),
                        g.data()
                            .iter()
                            .zip(av.data().iter().zip(bv.data()))
                            .map(|(gi, (ai, bi))| if ai >= bi { *gi } else { 0.0 })
                            .collect(),
                    );
                    self.accumulate(grads, *a, d);
                }
                if self.needs(*b) {
                    let d = Tensor::from_vec(
                        bv.shape(),
                        g.data()
                            .iter()
                            .zip(av.data().iter().zip(bv.data()))
                            .map(|(gi, (ai, bi))| if bi > ai { *gi } else { 0.0 })
                            .collect(),
                    );
                    self.accumulate(grads, *b, d);
                }
            }
            Op::Sum(a) => {
                let gs = g.data()[0];
                let shape = self.nodes[*a].value.shape().to_vec();
                let n = self.nodes[*a].value.numel();
                self.accumulate(grads, *a, Tensor::from_vec(&shape, vec![gs; n]));
            }
            Op::Mean(a) => {
                let n = self.nodes[*a].value.numel();
                let gs = g.data()[0] / n as f64;
                let shape = self.nodes[*a].value.shape().to_vec();
                self.accumulate(grads, *a, Tensor::from_vec(&shape, vec![gs; n]));
            }
            Op::Reshape(a) => {
                let shape = self.nodes[*a].value.shape().to_vec();
                let d = Tensor::from_vec(&shape, g.data().to_vec());
                self.accumulate(grads, *a, d);
            }
            Op::BceWithLogits {
                logits,
                target,
                pos_weight,
                weights,
            } => {
                let x = &self.nodes[*logits].value;
                let norm = match weights {
                    Some(w) => w.data().iter().sum::<f64>(),
                    None => x.numel() as f64,
                };
                let gs = g.data()[0];
                let d = Tensor::from_vec(
                    x.shape(),
                    x.data()
                        .iter()
                        .zip(target.data())
                        .enumerate()
                        .map(|(i, (&xi, &ti))| {
                            let wi = weights.as_ref().map_or(1.0, |w| w.data()[i]);
                            gs * wi
                                * (-pos_weight * ti * sigmoid(-xi) + (1.0 - ti) * sigmoid(xi))
                                / norm
                        })
                        .collect(),
                );
                self.accumulate(grads, *logits, d);
            }
            Op::Mse { pred, target } => {
                let x = &self.nodes[*pred].value;
                let n = x.numel() as f64;
                let gs = g.data()[0];
                let d = Tensor::from_vec(
                    x.shape(),
                    x.data()
                        .iter()
                        .zip(target.data())
                        .map(|(xi, ti)| gs * 2.0 * (xi - ti) / n)
                        .collect(),
                );
                self.accumulate(grads, *pred, d);
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}
