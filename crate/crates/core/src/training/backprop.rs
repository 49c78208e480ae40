use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pyramid::PyramidLayer;
use crate::scalar::{norm2, Scalar};
use crate::shots::{signed_ip_estimate, split_seed, ShotPlan};

use super::network::{DenseLayer, Exec, Layer, Network};

/// Inner layers `ζ⁰ … ζ^λmax` of one pyramid pass: `ζ⁰` is the input and
/// `ζ^{λ+1}` the state after timestep `λ` (before any final Z flip).
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepTrace<T> {
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> TimestepTrace<T> {
    pub fn inner_layer(&self, lambda: usize) -> &[T] {
        &self.data[lambda * self.width..(lambda + 1) * self.width]
    }

    /// Number of stored inner layers (timesteps + 1).
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

impl<T> Default for TimestepTrace<T> {
    fn default() -> Self {
        TimestepTrace { width: 0, data: Vec::new() }
    }
}

/// Per-layer record of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace<T> {
    pub input: Vec<T>,
    /// Pre-activations `z`.
    pub pre: Vec<T>,
    /// Activations `a = σ(z)`.
    pub post: Vec<T>,
    /// Full-width pyramid state after the last timestep, before the Z flip
    /// (empty for dense layers). Inner layers are rebuilt from it backwards.
    pub state: Vec<T>,
}

impl<T> Default for LayerTrace<T> {
    fn default() -> Self {
        LayerTrace { input: Vec::new(), pre: Vec::new(), post: Vec::new(), state: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTrace<T> {
    pub layers: Vec<LayerTrace<T>>,
}

impl<T> Default for NetworkTrace<T> {
    fn default() -> Self {
        NetworkTrace { layers: Vec::new() }
    }
}

/// Cached `(cos θ, sin θ)` of every pyramid gate, per layer.
#[derive(Debug, Clone)]
pub(crate) struct Prepared<T> {
    cs: Vec<Vec<(T, T)>>,
}

impl<T: Scalar> Prepared<T> {
    pub(crate) fn new(net: &Network<T>) -> Self {
        let mut prep = Prepared { cs: Vec::new() };
        prep.refresh(net);
        prep
    }

    /// Recomputes the cache for the current angles, reusing its buffers.
    pub(crate) fn refresh(&mut self, net: &Network<T>) {
        self.cs.resize_with(net.layers().len(), Vec::new);
        for (cs, spec) in self.cs.iter_mut().zip(net.layers()) {
            cs.clear();
            if let Layer::Pyramid(p) = &spec.layer {
                cs.extend(p.thetas.iter().map(|&th| th.cos_sin()));
            }
        }
    }
}

fn prepare_layer<T: Scalar>(layer: &PyramidLayer<T>) -> Vec<(T, T)> {
    layer.thetas.iter().map(|&th| th.cos_sin()).collect()
}

/// Runs the pyramid on the full-width vector `v`, recording inner layers.
fn pyramid_pass<T: Scalar>(layer: &PyramidLayer<T>, cs: &[(T, T)], v: &mut [T], mut trace: Option<&mut TimestepTrace<T>>) {
    let n = v.len();
    if let Some(tr) = trace.as_deref_mut() {
        tr.width = n;
        tr.data.clear();
        tr.data.extend_from_slice(v);
    }
    let mut k = 0;
    for step in layer.layout().steps() {
        for &i in step {
            let (c, s) = cs[k];
            let (a, b) = (v[i], v[i + 1]);
            v[i] = c * a + s * b;
            v[i + 1] = c * b - s * a;
            k += 1;
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.data.extend_from_slice(v);
        }
    }
    if layer.z_flip {
        v[n - 1] = -v[n - 1];
    }
}

/// Forward pass of one pyramid layer with its inner-layer trace.
pub fn pyramid_forward<T: Scalar>(layer: &PyramidLayer<T>, x: &[T]) -> Result<(Vec<T>, TimestepTrace<T>)> {
    if x.len() != layer.n_in() {
        return Err(Error::DimensionMismatch { expected: layer.n_in(), actual: x.len() });
    }
    let mut v = x.to_vec();
    let mut trace = TimestepTrace::default();
    pyramid_pass(layer, &prepare_layer(layer), &mut v, Some(&mut trace));
    Ok((v.split_off(layer.layout().output_offset()), trace))
}

enum Inner<'a, T> {
    Stored(&'a TimestepTrace<T>),
    /// Final state; earlier layers are recovered by inverting each timestep.
    Rebuilt(Vec<T>),
}

/// Backward loop over timesteps. Adds `∂C/∂θ` into `grad` and returns the
/// inner error `δ⁰` (full input width).
fn pyramid_backward_into<T: Scalar>(
    layer: &PyramidLayer<T>,
    cs: &[(T, T)],
    mut inner: Inner<'_, T>,
    delta_out: &[T],
    grad: &mut [T],
) -> Vec<T> {
    let n = layer.n_in();
    let mut delta = vec![T::zero(); n];
    delta[layer.layout().output_offset()..].copy_from_slice(delta_out);
    if layer.z_flip {
        delta[n - 1] = -delta[n - 1];
    }
    let steps = layer.layout().steps();
    let mut end = cs.len();
    for (lambda, step) in steps.iter().enumerate().rev() {
        let start = end - step.len();
        let zeta = match &mut inner {
            Inner::Stored(trace) => trace.inner_layer(lambda),
            Inner::Rebuilt(v) => {
                for (k, &i) in (start..end).zip(step) {
                    let (c, s) = cs[k];
                    let (a, b) = (v[i], v[i + 1]);
                    v[i] = c * a - s * b;
                    v[i + 1] = s * a + c * b;
                }
                &v[..]
            }
        };
        for (k, &i) in (start..end).zip(step) {
            let (c, s) = cs[k];
            let (zi, zj) = (zeta[i], zeta[i + 1]);
            let (di, dj) = (delta[i], delta[i + 1]);
            grad[k] += di * (c * zj - s * zi) - dj * (c * zi + s * zj);
            delta[i] = c * di - s * dj;
            delta[i + 1] = s * di + c * dj;
        }
        end = start;
    }
    delta
}

/// Angle gradients and input error of a pyramid layer, given `∂C/∂y` for
/// its `n_out` outputs and the trace of the matching forward pass.
pub fn pyramid_backprop<T: Scalar>(layer: &PyramidLayer<T>, trace: &TimestepTrace<T>, delta_out: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let expected = layer.layout().steps().len() + 1;
    if trace.width() != layer.n_in() || trace.len() != expected {
        return Err(Error::TraceMismatch(format!(
            "trace has {} layers of width {}, layer needs {} of width {}",
            trace.len(),
            trace.width(),
            expected,
            layer.n_in()
        )));
    }
    if delta_out.len() != layer.n_out() {
        return Err(Error::DimensionMismatch { expected: layer.n_out(), actual: delta_out.len() });
    }
    let mut grad = vec![T::zero(); layer.thetas.len()];
    let delta = pyramid_backward_into(layer, &prepare_layer(layer), Inner::Stored(trace), delta_out, &mut grad);
    Ok((grad, delta))
}

/// Shot plan for one inner product: derived from the layer plan, the forward
/// call's stream id, the layer index and the output row.
fn node_plan(plan: &ShotPlan, stream: u64, layer: usize, row: usize) -> ShotPlan {
    plan.with_seed(split_seed(split_seed(plan.rng_seed, stream), ((layer as u64) << 32) | row as u64))
}

fn dense_forward<T: Scalar>(d: &DenseLayer<T>, x: &[T], stream: u64, layer_index: usize) -> Result<Vec<T>> {
    match &d.exec {
        Exec::Exact => {
            let z = &d.weights * DVector::from_column_slice(x) + &d.bias;
            Ok(z.iter().copied().collect())
        }
        Exec::Shots(plan) => {
            let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
            let nx = norm2(&xf);
            let mut out = Vec::with_capacity(d.n_out());
            for r in 0..d.n_out() {
                let wf: Vec<f64> = d.weights.row(r).iter().map(|v| v.as_f64()).collect();
                let nw = norm2(&wf);
                let ip = if nx == 0.0 || nw == 0.0 {
                    0.0
                } else {
                    let xu: Vec<f64> = xf.iter().map(|v| v / nx).collect();
                    let wu: Vec<f64> = wf.iter().map(|v| v / nw).collect();
                    signed_ip_estimate(&xu, &wu, &node_plan(plan, stream, layer_index, r))?.value * nx * nw
                };
                out.push(T::lit(ip) + d.bias[r]);
            }
            Ok(out)
        }
    }
}

/// Result of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward<T> {
    /// Outputs of the last layer.
    pub output: Vec<T>,
    /// Output logit `u` (node difference for two outputs).
    pub logit: T,
    /// Binary score `σ(u)`.
    pub score: T,
    pub trace: NetworkTrace<T>,
}

pub(crate) fn forward_prepared<T: Scalar>(
    net: &Network<T>,
    prep: &Prepared<T>,
    x: &[T],
    stream: u64,
    trace: &mut NetworkTrace<T>,
) -> Result<T> {
    if x.len() != net.n_in() {
        return Err(Error::DimensionMismatch { expected: net.n_in(), actual: x.len() });
    }
    trace.layers.resize_with(net.layers().len(), LayerTrace::default);
    for (k, spec) in net.layers().iter().enumerate() {
        let (done, rest) = trace.layers.split_at_mut(k);
        let lt = &mut rest[0];
        lt.input.clear();
        lt.input.extend_from_slice(if k == 0 { x } else { &done[k - 1].post });
        lt.pre.clear();
        match &spec.layer {
            Layer::Pyramid(p) => {
                lt.state.clear();
                lt.state.extend_from_slice(&lt.input);
                pyramid_pass(p, &prep.cs[k], &mut lt.state, None);
                lt.pre.extend_from_slice(&lt.state[p.layout().output_offset()..]);
                if p.z_flip {
                    let last = lt.state.len() - 1;
                    lt.state[last] = -lt.state[last];
                }
            }
            Layer::Dense(d) => {
                lt.state.clear();
                lt.pre.extend(dense_forward(d, &lt.input, stream, k)?);
            }
        }
        lt.post.clear();
        lt.post.extend(lt.pre.iter().map(|&z| spec.activation.apply(z)));
    }
    Ok(net.logit(&trace.layers[net.layers().len() - 1].post))
}

/// Runs the network on `x`, keeping every layer's trace. `stream` identifies
/// the call for shot-based layers (distinct calls should use distinct ids).
pub fn forward_network<T: Scalar>(net: &Network<T>, x: &[T], stream: u64) -> Result<Forward<T>> {
    let mut trace = NetworkTrace::default();
    let logit = forward_prepared(net, &Prepared::new(net), x, stream, &mut trace)?;
    let output = trace.layers.last().map(|l| l.post.clone()).unwrap_or_default();
    Ok(Forward { output, logit, score: super::network::sigmoid(logit), trace })
}

/// Scores `σ(u)` for every row of `rows`; row `i` uses stream `base + i`.
pub fn predict<T: Scalar>(net: &Network<T>, rows: &[&[T]], base: u64) -> Result<Vec<T>> {
    let prep = Prepared::new(net);
    let mut trace = NetworkTrace::default();
    rows.iter()
        .enumerate()
        .map(|(i, x)| Ok(super::network::sigmoid(forward_prepared(net, &prep, x, base + i as u64, &mut trace)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrad<T: Scalar> {
    Pyramid(Vec<T>),
    Dense { weights: DMatrix<T>, bias: DVector<T> },
}

/// Parameter gradients, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Scalar> {
    pub layers: Vec<LayerGrad<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(net: &Network<T>) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|spec| match &spec.layer {
                Layer::Pyramid(p) => LayerGrad::Pyramid(vec![T::zero(); p.thetas.len()]),
                Layer::Dense(d) => LayerGrad::Dense {
                    weights: DMatrix::zeros(d.n_out(), d.n_in()),
                    bias: DVector::zeros(d.n_out()),
                },
            })
            .collect();
        Gradients { layers }
    }

    pub fn fill_zero(&mut self) {
        for g in &mut self.layers {
            match g {
                LayerGrad::Pyramid(v) => v.iter_mut().for_each(|x| *x = T::zero()),
                LayerGrad::Dense { weights, bias } => {
                    weights.fill(T::zero());
                    bias.fill(T::zero());
                }
            }
        }
    }

    pub fn scale(&mut self, f: T) {
        for g in &mut self.layers {
            match g {
                LayerGrad::Pyramid(v) => v.iter_mut().for_each(|x| *x *= f),
                LayerGrad::Dense { weights, bias } => {
                    *weights *= f;
                    *bias *= f;
                }
            }
        }
    }
}

/// Backpropagates `∂loss/∂u` through a traced forward pass, adding every
/// parameter gradient into `grads`.
pub(crate) fn backward_into<T: Scalar>(
    net: &Network<T>,
    prep: &Prepared<T>,
    trace: &NetworkTrace<T>,
    dlogit: T,
    grads: &mut Gradients<T>,
) -> Result<()> {
    let n_layers = net.layers().len();
    if trace.layers.len() != n_layers {
        return Err(Error::TraceMismatch(format!("{} layer traces for {} layers", trace.layers.len(), n_layers)));
    }
    // ∂C/∂a of the last layer
    let mut delta: Vec<T> = if net.n_out() == 2 { vec![-dlogit, dlogit] } else { vec![dlogit] };
    for k in (0..n_layers).rev() {
        let spec = &net.layers()[k];
        let lt = &trace.layers[k];
        // Δ = δ ⊙ σ'(z)
        for ((d, &z), &a) in delta.iter_mut().zip(&lt.pre).zip(&lt.post) {
            *d *= spec.activation.derivative(z, a);
        }
        delta = match (&spec.layer, &mut grads.layers[k]) {
            (Layer::Pyramid(p), LayerGrad::Pyramid(g)) => {
                if lt.state.len() != p.n_in() {
                    return Err(Error::TraceMismatch(format!("layer {k} has no pyramid state")));
                }
                pyramid_backward_into(p, &prep.cs[k], Inner::Rebuilt(lt.state.clone()), &delta, g)
            }
            (Layer::Dense(d), LayerGrad::Dense { weights, bias }) => {
                let dv = DVector::from_column_slice(&delta);
                let xv = DVector::from_column_slice(&lt.input);
                weights.ger(T::one(), &dv, &xv, T::one());
                *bias += &dv;
                (d.weights.tr_mul(&dv)).iter().copied().collect()
            }
            _ => return Err(Error::TraceMismatch(format!("gradient buffer of layer {k} has the wrong kind"))),
        };
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct BatchLayer<T> {
    /// Final full-width state (before the Z flip).
    state: Vec<T>,
    pre: Vec<T>,
    post: Vec<T>,
}

/// Buffers for batched pyramid passes. Every vector is batch-minor:
/// entry `(node i, sample b)` lives at `i * batch + b`.
#[derive(Debug, Clone)]
pub(crate) struct PyramidBatch<T> {
    layers: Vec<BatchLayer<T>>,
    delta: Vec<T>,
    next: Vec<T>,
}

impl<T> Default for PyramidBatch<T> {
    fn default() -> Self {
        PyramidBatch { layers: Vec::new(), delta: Vec::new(), next: Vec::new() }
    }
}

fn pyramid_of<T: Scalar>(net: &Network<T>, k: usize) -> Result<&PyramidLayer<T>> {
    match &net.layers()[k].layer {
        Layer::Pyramid(p) => Ok(p),
        Layer::Dense(_) => Err(Error::Invalid(format!("layer {k} is not a pyramid layer"))),
    }
}

/// Forward and backward pass of a whole mini-batch through a network made of
/// pyramid layers only, gate by gate across the batch. Adds the summed
/// gradients into `grads` and returns the logit of every row. Numerically
/// identical to running [`forward_prepared`] and [`backward_into`] per row.
pub(crate) fn pyramid_batch_step<T: Scalar>(
    net: &Network<T>,
    prep: &Prepared<T>,
    rows: &[&[T]],
    labels: &[u8],
    ws: &mut PyramidBatch<T>,
    grads: &mut Gradients<T>,
) -> Result<Vec<T>> {
    let bsz = rows.len();
    let n_layers = net.layers().len();
    for x in rows {
        if x.len() != net.n_in() {
            return Err(Error::DimensionMismatch { expected: net.n_in(), actual: x.len() });
        }
    }
    ws.layers.resize_with(n_layers, || BatchLayer { state: Vec::new(), pre: Vec::new(), post: Vec::new() });
    for k in 0..n_layers {
        let p = pyramid_of(net, k)?;
        let (done, rest) = ws.layers.split_at_mut(k);
        let bl = &mut rest[0];
        let n = p.n_in();
        bl.state.clear();
        if k == 0 {
            bl.state.extend((0..n * bsz).map(|e| rows[e % bsz][e / bsz]));
        } else {
            bl.state.extend_from_slice(&done[k - 1].post);
        }
        let mut g = 0;
        for step in p.layout().steps() {
            for &i in step {
                let (c, s) = prep.cs[k][g];
                let (lo, hi) = bl.state[i * bsz..(i + 2) * bsz].split_at_mut(bsz);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x + s * y;
                    *b = c * y - s * x;
                }
                g += 1;
            }
        }
        bl.pre.clear();
        bl.pre.extend_from_slice(&bl.state[p.layout().output_offset() * bsz..]);
        if p.z_flip {
            let m = bl.pre.len();
            bl.pre[m - bsz..].iter_mut().for_each(|z| *z = -*z);
        }
        let act = net.layers()[k].activation;
        bl.post.clear();
        bl.post.extend(bl.pre.iter().map(|&z| act.apply(z)));
    }

    let out = &ws.layers[n_layers - 1].post;
    let n_out = net.n_out();
    let mut logits = Vec::with_capacity(bsz);
    ws.delta.clear();
    ws.delta.resize(n_out * bsz, T::zero());
    let mut node = vec![T::zero(); n_out];
    for b in 0..bsz {
        for (j, v) in node.iter_mut().enumerate() {
            *v = out[j * bsz + b];
        }
        let u = net.logit(&node);
        let d = net.loss.grad(u, labels[b]);
        if n_out == 2 {
            ws.delta[b] = -d;
            ws.delta[bsz + b] = d;
        } else {
            ws.delta[b] = d;
        }
        logits.push(u);
    }

    for k in (0..n_layers).rev() {
        let p = pyramid_of(net, k)?;
        let act = net.layers()[k].activation;
        let bl = &mut ws.layers[k];
        for ((d, &z), &a) in ws.delta.iter_mut().zip(&bl.pre).zip(&bl.post) {
            *d *= act.derivative(z, a);
        }
        let n = p.n_in();
        ws.next.clear();
        ws.next.resize(n * bsz, T::zero());
        ws.next[p.layout().output_offset() * bsz..].copy_from_slice(&ws.delta);
        if p.z_flip {
            ws.next[(n - 1) * bsz..].iter_mut().for_each(|d| *d = -*d);
        }
        let grad = match &mut grads.layers[k] {
            LayerGrad::Pyramid(g) => g,
            LayerGrad::Dense { .. } => {
                return Err(Error::TraceMismatch(format!("gradient buffer of layer {k} has the wrong kind")))
            }
        };
        let cs = &prep.cs[k];
        let mut end = cs.len();
        for step in p.layout().steps().iter().rev() {
            let start = end - step.len();
            for (g, &i) in (start..end).zip(step) {
                let (c, s) = cs[g];
                let (zl, zh) = bl.state[i * bsz..(i + 2) * bsz].split_at_mut(bsz);
                let (dl, dh) = ws.next[i * bsz..(i + 2) * bsz].split_at_mut(bsz);
                let mut acc = grad[g];
                for b in 0..bsz {
                    let (x, y) = (zl[b], zh[b]);
                    let (zi, zj) = (c * x - s * y, s * x + c * y);
                    zl[b] = zi;
                    zh[b] = zj;
                    let (di, dj) = (dl[b], dh[b]);
                    acc += di * (c * zj - s * zi) - dj * (c * zi + s * zj);
                    dl[b] = c * di - s * dj;
                    dh[b] = s * di + c * dj;
                }
                grad[g] = acc;
            }
            end = start;
        }
        std::mem::swap(&mut ws.delta, &mut ws.next);
    }
    Ok(logits)
}

/// Loss of one labelled sample and the gradient of every parameter.
pub fn network_gradient<T: Scalar>(net: &Network<T>, x: &[T], label: u8, stream: u64) -> Result<(T, Gradients<T>)> {
    let prep = Prepared::new(net);
    let mut trace = NetworkTrace::default();
    let u = forward_prepared(net, &prep, x, stream, &mut trace)?;
    let mut grads = Gradients::zeros(net);
    backward_into(net, &prep, &trace, net.loss.grad(u, label), &mut grads)?;
    Ok((net.loss.value(u, label), grads))
}

/// Loss of one labelled sample.
pub fn sample_loss<T: Scalar>(net: &Network<T>, x: &[T], label: u8, stream: u64) -> Result<T> {
    let prep = Prepared::new(net);
    let mut trace = NetworkTrace::default();
    let u = forward_prepared(net, &prep, x, stream, &mut trace)?;
    Ok(net.loss.value(u, label))
}
