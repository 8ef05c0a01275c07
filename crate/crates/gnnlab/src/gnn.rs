//! Graph convolutional networks with exact manual backpropagation.
//!
//! The layer map is g_k = phi(b_k + S g_{k-1} W_k) with g_0 = X, where S is
//! a fixed diffusion operator, W_k is d_{k-1} x d_k, and b_k broadcasts
//! across rows. With a residual weight alpha the recursion changes for
//! k >= 2 to
//!
//!     g_k = phi((1 - alpha) (b_k + S g_{k-1} W_k) + alpha g_1),
//!
//! anchored at the *first hidden layer* g_1 rather than the raw features, so
//! hidden widths stay free. The anchor term requires d_k = d_1; every
//! interior layer must satisfy that, while a final layer with a different
//! width (a classification head) falls back to the vanilla rule. When the
//! output width equals d_1 the final layer takes the residual like any other.
//!
//! Training is full-batch gradient descent; gradients are computed in closed
//! form (reverse mode by hand), including the S^T factor from the diffusion
//! product and the alpha-weighted fan-in every residual layer sends back to
//! g_1. ReLU uses subgradient 0 at exactly 0.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::planted::{Dataset, Labels};
use crate::rng::{stream, stream_rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative evaluated at the pre-activation; ReLU takes 0 at the kink.
    #[inline]
    fn grad(self, pre: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Lipschitz constant: 1 for both supported activations.
    pub fn lipschitz(self) -> f64 {
        1.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Squared loss against +/-1 targets; requires output width 1.
    SquaredBinary,
    /// Negative log likelihood of a softmax over C classes; output width C.
    MulticlassNll,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::SquaredBinary => "squared-binary",
            LossKind::MulticlassNll => "multiclass-nll",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnConfig {
    /// [d_0, d_1, ..., d_K]; K = layer_dims.len() - 1 >= 1.
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    /// Residual interpolation weight in [0, 1]; None = vanilla network.
    pub residual_alpha: Option<f64>,
    pub loss: LossKind,
    /// Weights are initialized uniform on +/- init_scale / sqrt(d_{k-1}).
    pub init_scale: f64,
    pub seed: u64,
    /// Replace phi with identity in layer K. None picks the loss default,
    /// which is ON for both losses (the usual readout for a regression-style
    /// score or softmax logits).
    pub linear_last_layer: Option<bool>,
}

impl GnnConfig {
    pub fn k_layers(&self) -> usize {
        self.layer_dims.len().saturating_sub(1)
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap_or(&0)
    }

    pub fn linear_last(&self) -> bool {
        self.linear_last_layer.unwrap_or(true)
    }

    /// Does layer k (1-based) take the residual anchor term?
    pub fn residual_applies(&self, k: usize) -> bool {
        match self.residual_alpha {
            None => false,
            Some(_) => k >= 2 && self.layer_dims[k] == self.layer_dims[1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::InvalidConfig(
                "layer_dims needs at least [d_in, d_out]".into(),
            ));
        }
        if self.layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        if let Some(alpha) = self.residual_alpha {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::InvalidConfig(format!(
                    "residual alpha must lie in [0,1], got {alpha}"
                )));
            }
            let k = self.k_layers();
            for layer in 2..k {
                if self.layer_dims[layer] != self.layer_dims[1] {
                    return Err(Error::InvalidConfig(format!(
                        "residual network needs interior widths equal to d_1 = {}, got d_{layer} = {}",
                        self.layer_dims[1], self.layer_dims[layer]
                    )));
                }
            }
        }
        if self.loss == LossKind::SquaredBinary && self.output_dim() != 1 {
            return Err(Error::InvalidConfig(format!(
                "squared-binary loss needs output width 1, got {}",
                self.output_dim()
            )));
        }
        if self.loss == LossKind::MulticlassNll && self.output_dim() < 2 {
            return Err(Error::InvalidConfig(
                "multiclass loss needs output width >= 2".into(),
            ));
        }
        if !(self.init_scale >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "init_scale must be >= 0, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub config: GnnConfig,
    /// weights[k] is W_{k+1}: d_k x d_{k+1}.
    pub weights: Vec<Array2<f64>>,
    /// biases[k] is b_{k+1}: length d_{k+1}.
    pub biases: Vec<Array1<f64>>,
}

#[derive(Debug, Clone)]
pub struct Grads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Node-level supervision targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// +/-1 labels; pairs with [`LossKind::SquaredBinary`].
    Binary(Vec<f64>),
    /// Class indices; pairs with [`LossKind::MulticlassNll`].
    Classes(Vec<usize>),
}

/// Which latent vector a planted dataset is classified against. The features
/// always follow z; the graph always follows y; alignment controls how much
/// they agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantedTarget {
    /// Predict z (default: features carry the signal, the graph may help).
    FeatureClasses,
    /// Predict y (the graph carries the signal).
    GraphCommunities,
}

impl Targets {
    pub fn from_dataset(dataset: &Dataset, planted: PlantedTarget) -> Targets {
        match &dataset.labels {
            Labels::Planted(lab) => {
                let v = match planted {
                    PlantedTarget::FeatureClasses => &lab.z,
                    PlantedTarget::GraphCommunities => &lab.y,
                };
                Targets::Binary(v.iter().map(|&s| s as f64).collect())
            }
            Labels::Classes(c) => Targets::Classes(c.clone()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Targets::Binary(v) => v.len(),
            Targets::Classes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fresh model: W_k i.i.d. uniform on +/- init_scale/sqrt(d_{k-1}), b_k = 0.
pub fn init_params(config: &GnnConfig) -> Result<GnnModel> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, stream::PARAM_INIT);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for k in 1..config.layer_dims.len() {
        let (din, dout) = (config.layer_dims[k - 1], config.layer_dims[k]);
        let a = config.init_scale / (din as f64).sqrt();
        let mut w = Array2::zeros((din, dout));
        for v in w.iter_mut() {
            let u: f64 = rng.random();
            *v = (2.0 * u - 1.0) * a;
        }
        weights.push(w);
        biases.push(Array1::zeros(dout));
    }
    Ok(GnnModel {
        config: config.clone(),
        weights,
        biases,
    })
}

/// Per-layer tape from one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// sg[k-1] = S g_{k-1} for layer k (g_0 = X).
    pub sg: Vec<Array2<f64>>,
    /// pre[k-1] = the phi input of layer k (residual mixing already applied).
    pub pre: Vec<Array2<f64>>,
    /// act[k-1] = g_k.
    pub act: Vec<Array2<f64>>,
}

impl Forward {
    /// g_K, the network output.
    pub fn output(&self) -> &Array2<f64> {
        self.act.last().expect("forward ran at least one layer")
    }
}

fn check_shapes(model: &GnnModel, s: &Array2<f64>, x: &Array2<f64>) -> Result<()> {
    model.config.validate()?;
    let n = x.nrows();
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "diffusion operator is {}x{}, features have {} rows",
            s.nrows(),
            s.ncols(),
            n
        )));
    }
    if x.ncols() != model.config.layer_dims[0] {
        return Err(Error::InvalidInput(format!(
            "features have width {}, model expects d_0 = {}",
            x.ncols(),
            model.config.layer_dims[0]
        )));
    }
    for (k, w) in model.weights.iter().enumerate() {
        let (din, dout) = (model.config.layer_dims[k], model.config.layer_dims[k + 1]);
        if w.nrows() != din || w.ncols() != dout || model.biases[k].len() != dout {
            return Err(Error::InvalidInput(format!(
                "layer {} parameter shapes disagree with layer_dims",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Full forward pass; returns all intermediate activations.
pub fn forward(model: &GnnModel, s: &Array2<f64>, x: &Array2<f64>) -> Result<Forward> {
    check_shapes(model, s, x)?;
    Ok(forward_inner(model, s, x, None))
}

/// `sx0`, when given, must equal S.dot(x); the training loop precomputes it
/// once since S and X never change across epochs.
fn forward_inner(
    model: &GnnModel,
    s: &Array2<f64>,
    x: &Array2<f64>,
    sx0: Option<&Array2<f64>>,
) -> Forward {
    let cfg = &model.config;
    let kk = cfg.k_layers();
    let alpha = cfg.residual_alpha.unwrap_or(0.0);
    let mut sg = Vec::with_capacity(kk);
    let mut pre = Vec::with_capacity(kk);
    let mut act: Vec<Array2<f64>> = Vec::with_capacity(kk);
    for k in 1..=kk {
        let sgk = if k == 1 {
            match sx0 {
                Some(m) => m.clone(),
                None => s.dot(x),
            }
        } else {
            s.dot(&act[k - 2])
        };
        let mut p = sgk.dot(&model.weights[k - 1]);
        p += &model.biases[k - 1];
        if cfg.residual_applies(k) {
            let g1 = &act[0];
            p.zip_mut_with(g1, |pk, &g| *pk = (1.0 - alpha) * *pk + alpha * g);
        }
        let linear_out = k == kk && cfg.linear_last();
        let a = if linear_out {
            p.clone()
        } else {
            p.mapv(|v| cfg.activation.apply(v))
        };
        sg.push(sgk);
        pre.push(p);
        act.push(a);
    }
    Forward { sg, pre, act }
}

fn check_targets(model: &GnnModel, n: usize, targets: &Targets, train_idx: &[usize]) -> Result<()> {
    if targets.len() != n {
        return Err(Error::InvalidInput(format!(
            "targets have length {}, expected n = {n}",
            targets.len()
        )));
    }
    if train_idx.is_empty() {
        return Err(Error::InvalidInput("train_idx is empty".into()));
    }
    let mut seen = vec![false; n];
    for &i in train_idx {
        if i >= n {
            return Err(Error::InvalidInput(format!("train index {i} out of range")));
        }
        if seen[i] {
            return Err(Error::InvalidInput(format!("train index {i} repeated")));
        }
        seen[i] = true;
    }
    match (model.config.loss, targets) {
        (LossKind::SquaredBinary, Targets::Binary(v)) => {
            if v.iter().any(|&t| t != 1.0 && t != -1.0) {
                return Err(Error::InvalidInput("binary targets must be +/-1".into()));
            }
            Ok(())
        }
        (LossKind::MulticlassNll, Targets::Classes(c)) => {
            let width = model.config.output_dim();
            if c.iter().any(|&cls| cls >= width) {
                return Err(Error::InvalidInput(format!(
                    "class index exceeds output width {width}"
                )));
            }
            Ok(())
        }
        _ => Err(Error::InvalidInput(
            "loss kind and target kind do not match".into(),
        )),
    }
}

/// Mean loss over `idx` plus d(loss)/d(output) rows for those nodes.
fn loss_and_output_grad(
    loss: LossKind,
    out: &Array2<f64>,
    targets: &Targets,
    idx: &[usize],
) -> (f64, Array2<f64>) {
    let m = idx.len() as f64;
    let mut grad = Array2::zeros(out.raw_dim());
    let mut total = 0.0;
    match (loss, targets) {
        (LossKind::SquaredBinary, Targets::Binary(t)) => {
            for &i in idx {
                let diff = out[[i, 0]] - t[i];
                total += diff * diff;
                grad[[i, 0]] = 2.0 * diff / m;
            }
        }
        (LossKind::MulticlassNll, Targets::Classes(c)) => {
            let width = out.ncols();
            for &i in idx {
                let row = out.row(i);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                total += lse - out[[i, c[i]]];
                for j in 0..width {
                    let p = (out[[i, j]] - lse).exp();
                    grad[[i, j]] = (p - if j == c[i] { 1.0 } else { 0.0 }) / m;
                }
            }
        }
        _ => unreachable!("target kind validated against loss kind"),
    }
    (total / m, grad)
}

/// Training loss and exact gradients at the current parameters.
pub fn loss_and_grad(
    model: &GnnModel,
    s: &Array2<f64>,
    x: &Array2<f64>,
    targets: &Targets,
    train_idx: &[usize],
) -> Result<(f64, Grads)> {
    check_shapes(model, s, x)?;
    check_targets(model, x.nrows(), targets, train_idx)?;
    let fwd = forward_inner(model, s, x, None);
    Ok(backward(model, s, targets, train_idx, &fwd))
}

fn backward(
    model: &GnnModel,
    s: &Array2<f64>,
    targets: &Targets,
    train_idx: &[usize],
    fwd: &Forward,
) -> (f64, Grads) {
    let cfg = &model.config;
    let kk = cfg.k_layers();
    let alpha = cfg.residual_alpha.unwrap_or(0.0);
    let (loss, mut d_act) = loss_and_output_grad(cfg.loss, fwd.output(), targets, train_idx);

    let mut grad_w: Vec<Array2<f64>> = model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
    let mut grad_b: Vec<Array1<f64>> = model.biases.iter().map(|b| Array1::zeros(b.len())).collect();
    // Fan-in the residual anchor sends straight back to g_1.
    let mut d_g1_extra: Option<Array2<f64>> = None;

    for k in (1..=kk).rev() {
        // dL/d(phi input) of layer k.
        let linear_out = k == kk && cfg.linear_last();
        let d_pre = if linear_out {
            d_act
        } else {
            let mut d = d_act;
            d.zip_mut_with(&fwd.pre[k - 1], |g, &p| *g *= cfg.activation.grad(p));
            d
        };
        // Split between the affine term and the anchor term.
        let residual_here = cfg.residual_applies(k);
        let d_affine = if residual_here {
            if alpha > 0.0 {
                let extra = d_pre.mapv(|v| v * alpha);
                match &mut d_g1_extra {
                    Some(acc) => *acc += &extra,
                    None => d_g1_extra = Some(extra),
                }
            }
            d_pre.mapv(|v| v * (1.0 - alpha))
        } else {
            d_pre
        };
        grad_w[k - 1] = fwd.sg[k - 1].t().dot(&d_affine);
        grad_b[k - 1] = d_affine.sum_axis(Axis(0));
        if k >= 2 {
            // dL/dg_{k-1} through S g_{k-1} W_k; S^T because S left-multiplies.
            let tmp = d_affine.dot(&model.weights[k - 1].t());
            d_act = s.t().dot(&tmp);
            if k - 1 == 1 {
                if let Some(extra) = d_g1_extra.take() {
                    d_act += &extra;
                }
            }
        } else {
            d_act = Array2::zeros((0, 0)); // g_0 = X is data, no gradient needed
        }
    }
    (
        loss,
        Grads {
            weights: grad_w,
            biases: grad_b,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64 },
}

impl Optimizer {
    pub fn lr(self) -> f64 {
        match self {
            Optimizer::Sgd { lr } | Optimizer::Adam { lr } => lr,
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Optimizer with its running state (Adam moments; SGD keeps none).
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: Optimizer,
    t: u64,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl OptimizerState {
    pub fn new(kind: Optimizer, model: &GnnModel) -> Self {
        let (m_w, v_w, m_b, v_b) = match kind {
            Optimizer::Sgd { .. } => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
            Optimizer::Adam { .. } => (
                model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
                model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
                model.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
                model.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            ),
        };
        OptimizerState {
            kind,
            t: 0,
            m_w,
            v_w,
            m_b,
            v_b,
        }
    }
}

/// One parameter update in place.
pub fn optimizer_step(model: &mut GnnModel, grads: &Grads, state: &mut OptimizerState) {
    match state.kind {
        Optimizer::Sgd { lr } => {
            for (w, g) in model.weights.iter_mut().zip(&grads.weights) {
                w.zip_mut_with(g, |p, &gr| *p -= lr * gr);
            }
            for (b, g) in model.biases.iter_mut().zip(&grads.biases) {
                b.zip_mut_with(g, |p, &gr| *p -= lr * gr);
            }
        }
        Optimizer::Adam { lr } => {
            state.t += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
            let c2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
            for layer in 0..model.weights.len() {
                adam_update(
                    model.weights[layer].iter_mut(),
                    grads.weights[layer].iter(),
                    state.m_w[layer].iter_mut(),
                    state.v_w[layer].iter_mut(),
                    lr,
                    c1,
                    c2,
                );
                adam_update(
                    model.biases[layer].iter_mut(),
                    grads.biases[layer].iter(),
                    state.m_b[layer].iter_mut(),
                    state.v_b[layer].iter_mut(),
                    lr,
                    c1,
                    c2,
                );
            }
        }
    }
}

fn adam_update<'a>(
    params: impl Iterator<Item = &'a mut f64>,
    grads: impl Iterator<Item = &'a f64>,
    ms: impl Iterator<Item = &'a mut f64>,
    vs: impl Iterator<Item = &'a mut f64>,
    lr: f64,
    c1: f64,
    c2: f64,
) {
    for (((p, &g), m), v) in params.zip(grads).zip(ms).zip(vs) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let mhat = *m / c1;
        let vhat = *v / c2;
        *p -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
    }
}

/// Losses, 0-1 errors, and their labeled/unlabeled gaps at one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub unlabeled_loss: f64,
    /// (m * train + (n-m) * unlabeled) / n.
    pub full_loss: f64,
    pub train_err01: f64,
    pub unlabeled_err01: f64,
    pub gap_loss: f64,
    pub gap_err01: f64,
}

/// Metrics of the model as it stands. Requires a nonempty unlabeled set.
pub fn evaluate(
    model: &GnnModel,
    s: &Array2<f64>,
    x: &Array2<f64>,
    targets: &Targets,
    train_idx: &[usize],
    epoch: usize,
) -> Result<Metrics> {
    check_shapes(model, s, x)?;
    check_targets(model, x.nrows(), targets, train_idx)?;
    let fwd = forward_inner(model, s, x, None);
    metrics_from_output(model, fwd.output(), targets, train_idx, x.nrows(), epoch)
}

fn metrics_from_output(
    model: &GnnModel,
    out: &Array2<f64>,
    targets: &Targets,
    train_idx: &[usize],
    n: usize,
    epoch: usize,
) -> Result<Metrics> {
    let m = train_idx.len();
    if m == n {
        return Err(Error::InvalidInput(
            "all nodes are labeled; unlabeled metrics are undefined".into(),
        ));
    }
    let mut is_train = vec![false; n];
    for &i in train_idx {
        is_train[i] = true;
    }
    let unlabeled: Vec<usize> = (0..n).filter(|&i| !is_train[i]).collect();

    let (train_loss, _) = loss_and_output_grad(model.config.loss, out, targets, train_idx);
    let (unlabeled_loss, _) = loss_and_output_grad(model.config.loss, out, targets, &unlabeled);
    let err = |idx: &[usize]| -> f64 {
        let wrong = idx
            .iter()
            .filter(|&&i| match targets {
                // Output 0 predicts -1: the readout is sign with a fixed
                // convention at the boundary.
                Targets::Binary(t) => {
                    let pred = if out[[i, 0]] > 0.0 { 1.0 } else { -1.0 };
                    pred != t[i]
                }
                Targets::Classes(c) => {
                    let row = out.row(i);
                    let mut best = 0;
                    for j in 1..row.len() {
                        if row[j] > row[best] {
                            best = j;
                        }
                    }
                    best != c[i]
                }
            })
            .count();
        wrong as f64 / idx.len() as f64
    };
    let train_err01 = err(train_idx);
    let unlabeled_err01 = err(&unlabeled);
    let full_loss = (m as f64 * train_loss + (n - m) as f64 * unlabeled_loss) / n as f64;
    Ok(Metrics {
        epoch,
        train_loss,
        unlabeled_loss,
        full_loss,
        train_err01,
        unlabeled_err01,
        gap_loss: unlabeled_loss - train_loss,
        gap_err01: unlabeled_err01 - train_err01,
    })
}

/// Full-batch training. Metrics are recorded after the update at every
/// `eval_every`-th epoch (epochs count from 1). A non-finite loss aborts
/// with the epoch where it appeared.
pub fn train(
    mut model: GnnModel,
    s: &Array2<f64>,
    x: &Array2<f64>,
    targets: &Targets,
    train_idx: &[usize],
    state: &mut OptimizerState,
    epochs: usize,
    eval_every: usize,
) -> Result<(GnnModel, Vec<Metrics>)> {
    check_shapes(&model, s, x)?;
    check_targets(&model, x.nrows(), targets, train_idx)?;
    if eval_every == 0 {
        return Err(Error::InvalidConfig("eval_every must be positive".into()));
    }
    if train_idx.len() == x.nrows() {
        return Err(Error::InvalidInput(
            "all nodes are labeled; unlabeled metrics are undefined".into(),
        ));
    }
    let sx0 = s.dot(x);
    let mut trajectory = Vec::new();
    for epoch in 1..=epochs {
        let fwd = forward_inner(&model, s, x, Some(&sx0));
        let (loss, grads) = backward(&model, s, targets, train_idx, &fwd);
        if !loss.is_finite() {
            return Err(Error::TrainDiverged { epoch, loss });
        }
        optimizer_step(&mut model, &grads, state);
        if epoch % eval_every == 0 {
            let fwd = forward_inner(&model, s, x, Some(&sx0));
            let metrics =
                metrics_from_output(&model, fwd.output(), targets, train_idx, x.nrows(), epoch)?;
            if !metrics.train_loss.is_finite() || !metrics.unlabeled_loss.is_finite() {
                return Err(Error::TrainDiverged {
                    epoch,
                    loss: metrics.train_loss,
                });
            }
            trajectory.push(metrics);
        }
    }
    Ok((model, trajectory))
}

/// Parameter norms the bounds are stated in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamNorms {
    /// max_k ||W_k||_inf (max absolute row sum).
    pub omega: f64,
    /// max_k ||b_k||_1.
    pub beta: f64,
}

pub fn measure_param_norms(model: &GnnModel) -> ParamNorms {
    let mut omega = 0.0f64;
    for w in &model.weights {
        for row in w.rows() {
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            omega = omega.max(s);
        }
    }
    let mut beta = 0.0f64;
    for b in &model.biases {
        let s: f64 = b.iter().map(|v| v.abs()).sum();
        beta = beta.max(s);
    }
    ParamNorms { omega, beta }
}
