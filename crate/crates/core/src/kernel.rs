//! One SGD step of a small dense network, run either centrally or under the
//! three-role hybrid partition.
//!
//! Layers are 1-based. Batches are row-major: one sample per row. The loss is
//! the squared error summed over outputs and averaged over the batch.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::latency::{Policy, Role};
use crate::profiles::{LayerSpec, ModelSpec, Worker};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// fan_out × fan_in
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("layers", "network needs at least one layer"));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.fan_out() {
                return Err(Error::Dimension {
                    field: format!("layers[{}].bias", i + 1),
                    expected: layer.fan_out(),
                    found: layer.bias.len(),
                });
            }
            if i > 0 && layers[i - 1].fan_out() != layer.fan_in() {
                return Err(Error::Dimension {
                    field: format!("layers[{}].weights", i + 1),
                    expected: layers[i - 1].fan_out(),
                    found: layer.fan_in(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Seeded network with widths `dims[0] -> dims[1] -> ...`, tanh hidden
    /// layers and an identity output layer.
    pub fn random(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid("dims", "need at least two positive widths"));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let n = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let limit = 1.0 / (w[0] as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit);
                DenseLayer {
                    weights: Array2::from_shape_simple_fn((w[1], w[0]), || dist.sample(&mut rng)),
                    bias: Array1::from_shape_simple_fn(w[1], || dist.sample(&mut rng)),
                    activation: if i + 1 == n { Activation::Identity } else { Activation::Tanh },
                }
            })
            .collect();
        Self::new(layers)
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    /// Dense-layer model with the same shapes, for the latency model.
    pub fn model_spec(&self, sample_bytes: u64) -> Result<ModelSpec> {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| LayerSpec::dense(i + 1, l.fan_in() as u64, l.fan_out() as u64))
            .collect();
        ModelSpec::new("dense", sample_bytes, layers)
    }

    /// Batch-mean squared error.
    pub fn loss(&self, inputs: &Array2<f64>, targets: &Array2<f64>) -> Result<f64> {
        let (out, _) = forward_range(self, 1, self.n_layers(), inputs)?;
        check_rows("targets", targets, out.nrows())?;
        check_cols("targets", targets, out.ncols())?;
        Ok((&out - targets).mapv(|d| d * d).sum() / inputs.nrows() as f64)
    }

    pub fn max_abs_diff(&self, other: &DenseNet) -> f64 {
        let mut m = 0.0f64;
        for (a, b) in self.layers.iter().zip(&other.layers) {
            for (x, y) in a.weights.iter().zip(&b.weights).chain(a.bias.iter().zip(&b.bias)) {
                m = m.max((x - y).abs());
            }
        }
        m
    }
}

/// Per-layer inputs and outputs of a forward pass over layers `from..=to`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    from: usize,
    inputs: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn samples(&self) -> Option<usize> {
        self.inputs.first().map(|a| a.nrows())
    }

    fn covers(&self, layer: usize) -> bool {
        layer >= self.from && layer < self.from + self.inputs.len()
    }
}

/// Gradient sums for the contiguous layers `first..first + weights.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub first: usize,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub sample_count: usize,
}

impl GradientSet {
    pub fn layer(&self, index: usize) -> Option<(&Array2<f64>, &Array1<f64>)> {
        let k = index.checked_sub(self.first)?;
        Some((self.weights.get(k)?, self.biases.get(k)?))
    }

    pub fn element_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }
}

fn check_rows(field: &str, a: &Array2<f64>, rows: usize) -> Result<()> {
    if a.nrows() != rows {
        return Err(Error::Dimension { field: format!("{field} rows"), expected: rows, found: a.nrows() });
    }
    Ok(())
}

fn check_cols(field: &str, a: &Array2<f64>, cols: usize) -> Result<()> {
    if a.ncols() != cols {
        return Err(Error::Dimension { field: format!("{field} columns"), expected: cols, found: a.ncols() });
    }
    Ok(())
}

fn check_range(from: usize, to: usize, n: usize) -> Result<()> {
    if from == 0 || to > n || from > to + 1 {
        return Err(Error::LayerRange { from, to, n_layers: n });
    }
    Ok(())
}

/// Forward pass over layers `from..=to` (`from == to + 1` is the empty range).
pub fn forward_range(net: &DenseNet, from: usize, to: usize, input: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
    forward_layers(&net.layers, from, to, input)
}

fn forward_layers(layers: &[DenseLayer], from: usize, to: usize, input: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
    check_range(from, to, layers.len())?;
    let mut cache = ForwardCache { from, inputs: Vec::new(), outputs: Vec::new() };
    let mut x = input.clone();
    for layer in &layers[from - 1..to] {
        check_cols("activations", &x, layer.fan_in())?;
        let mut z = x.dot(&layer.weights.t()) + &layer.bias;
        if layer.activation == Activation::Tanh {
            z.mapv_inplace(f64::tanh);
        }
        cache.inputs.push(x);
        cache.outputs.push(z.clone());
        x = z;
    }
    Ok((x, cache))
}

/// Backward pass from layer `from` down to `down_to`, given the loss gradient
/// at layer `from`'s output. Returns the per-layer gradient sums over the
/// cached samples and the gradient at layer `down_to`'s input.
pub fn backward_range(
    net: &DenseNet,
    from: usize,
    down_to: usize,
    upstream: &Array2<f64>,
    cache: Option<&ForwardCache>,
) -> Result<(GradientSet, Array2<f64>)> {
    backward_layers(&net.layers, from, down_to, upstream, cache)
}

fn backward_layers(
    layers: &[DenseLayer],
    from: usize,
    down_to: usize,
    upstream: &Array2<f64>,
    cache: Option<&ForwardCache>,
) -> Result<(GradientSet, Array2<f64>)> {
    check_range(down_to, from, layers.len())?;
    let empty = GradientSet { first: down_to, weights: Vec::new(), biases: Vec::new(), sample_count: upstream.nrows() };
    if down_to > from {
        return Ok((empty, upstream.clone()));
    }
    let cache = cache.ok_or_else(|| Error::invalid("cache", "backward pass needs the cached forward activations"))?;
    if !cache.covers(from) || !cache.covers(down_to) {
        return Err(Error::invalid("cache", format!("cache does not cover layers {down_to}..={from}")));
    }
    check_rows("upstream gradient", upstream, cache.samples().unwrap_or(0))?;
    let mut weights = Vec::with_capacity(from - down_to + 1);
    let mut biases = Vec::with_capacity(from - down_to + 1);
    let mut g = upstream.clone();
    for index in (down_to..=from).rev() {
        let layer = &layers[index - 1];
        let k = index - cache.from;
        check_cols("upstream gradient", &g, layer.fan_out())?;
        if layer.activation == Activation::Tanh {
            g = g * cache.outputs[k].mapv(|a| 1.0 - a * a);
        }
        weights.push(g.t().dot(&cache.inputs[k]));
        biases.push(g.sum_axis(Axis(0)));
        g = g.dot(&layer.weights);
    }
    weights.reverse();
    biases.reverse();
    Ok((GradientSet { weights, biases, ..empty }, g))
}

/// Per-sample gradient of the summed squared error at the network output.
fn loss_gradient(output: &Array2<f64>, targets: &Array2<f64>) -> Array2<f64> {
    (output - targets).mapv(|d| 2.0 * d)
}

fn apply_update(layer: &mut DenseLayer, grad_w: &Array2<f64>, grad_b: &Array1<f64>, lr: f64) {
    layer.weights.zip_mut_with(grad_w, |w, g| *w -= lr * g);
    layer.bias.zip_mut_with(grad_b, |w, g| *w -= lr * g);
}

fn check_batch(net: &DenseNet, inputs: &Array2<f64>, targets: &Array2<f64>) -> Result<()> {
    if inputs.nrows() == 0 {
        return Err(Error::invalid("batch", "batch must be nonempty"));
    }
    check_cols("inputs", inputs, net.input_dim())?;
    check_rows("targets", targets, inputs.nrows())?;
    check_cols("targets", targets, net.output_dim())
}

/// Mini-batch SGD: `w <- w - lr * (1/B) * sum of per-sample gradients`.
pub fn centralized_step(net: &DenseNet, inputs: &Array2<f64>, targets: &Array2<f64>, lr: f64) -> Result<DenseNet> {
    check_batch(net, inputs, targets)?;
    let n = net.n_layers();
    let batch = inputs.nrows() as f64;
    let (out, cache) = forward_range(net, 1, n, inputs)?;
    let (grads, _) = backward_range(net, n, 1, &loss_gradient(&out, targets), Some(&cache))?;
    let mut next = net.clone();
    for (i, layer) in next.layers.iter_mut().enumerate() {
        apply_update(layer, &(&grads.weights[i] / batch), &(&grads.biases[i] / batch), lr);
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    /// Activations at the split, sent forward to `o`.
    Activation,
    /// Loss gradient at the split, handed back by `o`.
    Gradient,
    /// Gradient sums for the sender's layers.
    GradPush,
    /// Averaged gradients for the receiver's layers.
    WeightPull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub from: Role,
    pub to: Role,
    pub elements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerState {
    pub role: Role,
    pub worker: Worker,
    /// Layers `1..=owned_layers` are held locally.
    pub owned_layers: usize,
    pub weights: Vec<DenseLayer>,
    pub inbox: Vec<Message>,
    pub outbox: Vec<Message>,
}

impl WorkerState {
    fn new(role: Role, worker: Worker, net: &DenseNet, owned: usize) -> Self {
        Self { role, worker, owned_layers: owned, weights: net.layers[..owned].to_vec(), inbox: Vec::new(), outbox: Vec::new() }
    }

    pub fn sent(&self, kind: MessageKind) -> usize {
        self.outbox.iter().filter(|m| m.kind == kind).map(|m| m.elements).sum()
    }
}

#[derive(Debug, Clone)]
pub struct HybridOutcome {
    /// `o`'s copy of the full model after the update.
    pub net: DenseNet,
    /// Final states in role order o, s, l.
    pub workers: [WorkerState; 3],
}

impl HybridOutcome {
    pub fn worker(&self, role: Role) -> &WorkerState {
        &self.workers[role_index(role)]
    }

    /// Every copy of every shared layer is bitwise equal to `o`'s.
    pub fn replicas_consistent(&self) -> bool {
        self.workers.iter().all(|w| w.weights.iter().zip(&self.net.layers).all(|(a, b)| a == b))
    }
}

fn role_index(role: Role) -> usize {
    match role {
        Role::O => 0,
        Role::S => 1,
        Role::L => 2,
    }
}

fn send(workers: &mut [WorkerState; 3], kind: MessageKind, from: Role, to: Role, elements: usize) {
    let msg = Message { kind, from, to, elements };
    workers[role_index(to)].inbox.push(msg.clone());
    workers[role_index(from)].outbox.push(msg);
}

fn rows(a: &Array2<f64>, lo: usize, hi: usize) -> Array2<f64> {
    a.slice(s![lo..hi, ..]).to_owned()
}

fn stack(parts: &[ArrayView2<'_, f64>]) -> Array2<f64> {
    concatenate(Axis(0), parts).expect("column counts agree")
}

/// One hybrid-parallel SGD step. Samples are dealt in batch order: the first
/// `b_o` to `o`, the next `b_s` to `s`, the rest to `l`.
pub fn hybrid_step(net: &DenseNet, policy: &Policy, inputs: &Array2<f64>, targets: &Array2<f64>, lr: f64) -> Result<HybridOutcome> {
    let n = net.n_layers();
    policy.validate(n)?;
    check_batch(net, inputs, targets)?;
    if inputs.nrows() != policy.batch() {
        return Err(Error::Dimension { field: "batch".into(), expected: policy.batch(), found: inputs.nrows() });
    }
    let Policy { mapping, m_s, m_l, b_o, b_s, b_l } = *policy;
    let batch = policy.batch();
    let mut workers = [
        WorkerState::new(Role::O, mapping.o, net, n),
        WorkerState::new(Role::S, mapping.s, net, m_s),
        WorkerState::new(Role::L, mapping.l, net, m_l),
    ];
    let x_o = rows(inputs, 0, b_o);
    let x_s = rows(inputs, b_o, b_o + b_s);
    let x_l = rows(inputs, b_o + b_s, batch);

    // Forward.
    let (a_s, cache_s) = forward_layers(&workers[1].weights, 1, m_s, &x_s)?;
    if b_s > 0 && m_s > 0 {
        send(&mut workers, MessageKind::Activation, Role::S, Role::O, a_s.len());
    }
    let (a_l, cache_l) = forward_layers(&workers[2].weights, 1, m_l, &x_l)?;
    if b_l > 0 && m_l > 0 {
        send(&mut workers, MessageKind::Activation, Role::L, Role::O, a_l.len());
    }
    let o_layers = &workers[0].weights;
    let (a1, cache1) = forward_layers(o_layers, 1, m_s, &x_o)?;
    let (a2, cache2) = forward_layers(o_layers, m_s + 1, m_l, &stack(&[a1.view(), a_s.view()]))?;
    let (out, cache3) = forward_layers(o_layers, m_l + 1, n, &stack(&[a2.view(), a_l.view()]))?;

    // Backward.
    let (g3, d3) = backward_layers(o_layers, n, m_l + 1, &loss_gradient(&out, targets), Some(&cache3))?;
    let (g2, d2) = backward_layers(o_layers, m_l, m_s + 1, &rows(&d3, 0, b_o + b_s), Some(&cache2))?;
    let (g1, _) = backward_layers(o_layers, m_s, 1, &rows(&d2, 0, b_o), Some(&cache1))?;
    let back_l = rows(&d3, b_o + b_s, batch);
    let back_s = rows(&d2, b_o, b_o + b_s);
    if b_l > 0 && m_l > 0 {
        send(&mut workers, MessageKind::Gradient, Role::O, Role::L, back_l.len());
    }
    if b_s > 0 && m_s > 0 {
        send(&mut workers, MessageKind::Gradient, Role::O, Role::S, back_s.len());
    }
    let (gs, _) = backward_layers(&workers[1].weights, m_s, 1, &back_s, Some(&cache_s))?;
    let (gl, _) = backward_layers(&workers[2].weights, m_l, 1, &back_l, Some(&cache_l))?;

    // Exchange and average, summing in role order o, s, l.
    if m_s > 0 {
        send(&mut workers, MessageKind::GradPush, Role::S, Role::O, gs.element_count());
    }
    if m_l > 0 {
        send(&mut workers, MessageKind::GradPush, Role::L, Role::O, gl.element_count());
    }
    let mut averaged = Vec::with_capacity(n);
    for index in 1..=n {
        let own = [&g1, &g2, &g3].into_iter().find_map(|g| g.layer(index).filter(|_| g.sample_count > 0));
        let helpers = [&gs, &gl].into_iter().filter(|g| g.sample_count > 0).filter_map(|g| g.layer(index));
        let mut parts = own.into_iter().chain(helpers);
        let (w0, b0) = parts.next().expect("the batch is nonempty, so some role covers every layer");
        let (mut w, mut b) = (w0.clone(), b0.clone());
        for (pw, pb) in parts {
            w += pw;
            b += pb;
        }
        averaged.push((w / batch as f64, b / batch as f64));
    }
    for (role, m) in [(Role::S, m_s), (Role::L, m_l)] {
        if m > 0 {
            let elements = averaged[..m].iter().map(|(w, b)| w.len() + b.len()).sum();
            send(&mut workers, MessageKind::WeightPull, Role::O, role, elements);
        }
    }

    // Independent local updates.
    for state in workers.iter_mut() {
        for (layer, (gw, gb)) in state.weights.iter_mut().zip(&averaged) {
            apply_update(layer, gw, gb, lr);
        }
    }
    let net = DenseNet { layers: workers[0].weights.clone() };
    Ok(HybridOutcome { net, workers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::RoleMapping;
    use ndarray::array;

    fn batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-1.0, 1.0);
        Array2::from_shape_simple_fn((rows, cols), || dist.sample(&mut rng))
    }

    #[test]
    fn empty_range_is_identity() {
        let net = DenseNet::random(&[3, 4, 2], 1).unwrap();
        let x = batch(5, 3, 2);
        let (y, _) = forward_range(&net, 1, 0, &x).unwrap();
        assert_eq!(y, x);
        let (g, d) = backward_range(&net, 0, 1, &x, None).unwrap();
        assert_eq!(d, x);
        assert!(g.weights.is_empty());
    }

    #[test]
    fn identity_layer_passes_input() {
        let layer = DenseLayer { weights: Array2::eye(3), bias: Array1::zeros(3), activation: Activation::Identity };
        let net = DenseNet::new(vec![layer]).unwrap();
        let x = batch(4, 3, 3);
        assert_eq!(forward_range(&net, 1, 1, &x).unwrap().0, x);
    }

    #[test]
    fn two_layer_forward_matches_hand_computation() {
        let l1 = DenseLayer { weights: array![[0.5, -1.0], [2.0, 0.25]], bias: array![0.1, -0.2], activation: Activation::Tanh };
        let l2 = DenseLayer { weights: array![[1.0, -3.0]], bias: array![0.5], activation: Activation::Identity };
        let net = DenseNet::new(vec![l1, l2]).unwrap();
        let x = array![[1.0, 2.0], [-0.5, 0.0]];
        let (y, _) = forward_range(&net, 1, 2, &x).unwrap();
        for (r, sample) in x.outer_iter().enumerate() {
            let h0 = (0.5 * sample[0] - 1.0 * sample[1] + 0.1).tanh();
            let h1 = (2.0 * sample[0] + 0.25 * sample[1] - 0.2).tanh();
            let expect = 1.0 * h0 - 3.0 * h1 + 0.5;
            assert!((y[[r, 0]] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_errors() {
        let net = DenseNet::random(&[3, 4, 2], 1).unwrap();
        assert!(forward_range(&net, 1, 2, &batch(2, 5, 0)).is_err());
        assert!(forward_range(&net, 1, 3, &batch(2, 3, 0)).is_err());
        let bad = DenseLayer { weights: Array2::zeros((2, 5)), bias: Array1::zeros(2), activation: Activation::Identity };
        let mut layers = net.layers.clone();
        layers[1] = bad;
        assert!(DenseNet::new(layers).is_err());
    }

    #[test]
    fn missing_cache_is_an_error() {
        let net = DenseNet::random(&[3, 4, 2], 1).unwrap();
        let g = batch(2, 2, 0);
        assert!(backward_range(&net, 2, 1, &g, None).is_err());
        let (_, cache) = forward_range(&net, 1, 1, &batch(2, 3, 0)).unwrap();
        assert!(backward_range(&net, 2, 1, &g, Some(&cache)).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = DenseNet::random(&[3, 4, 4, 2], 5).unwrap();
        let (_, cache) = forward_range(&net, 1, 3, &batch(6, 3, 6)).unwrap();
        let (g, d) = backward_range(&net, 3, 1, &Array2::zeros((6, 2)), Some(&cache)).unwrap();
        assert!(g.weights.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn split_backward_composes() {
        let net = DenseNet::random(&[3, 5, 4, 2], 7).unwrap();
        let x = batch(6, 3, 8);
        let (y, cache) = forward_range(&net, 1, 3, &x).unwrap();
        let up = loss_gradient(&y, &batch(6, 2, 9));
        let (full, d_full) = backward_range(&net, 3, 1, &up, Some(&cache)).unwrap();
        for m in 0..=3 {
            let (hi, d_mid) = backward_range(&net, 3, m + 1, &up, Some(&cache)).unwrap();
            let (lo, d_lo) = backward_range(&net, m, 1, &d_mid, Some(&cache)).unwrap();
            assert_eq!(d_lo, d_full);
            for i in 1..=3 {
                let part = if i > m { hi.layer(i) } else { lo.layer(i) };
                assert_eq!(part, full.layer(i));
            }
        }
    }

    #[test]
    fn lr_zero_and_single_sample() {
        let net = DenseNet::random(&[3, 4, 2], 1).unwrap();
        let (x, t) = (batch(4, 3, 2), batch(4, 2, 3));
        assert_eq!(centralized_step(&net, &x, &t, 0.0).unwrap(), net);

        let (x1, t1) = (rows(&x, 0, 1), rows(&t, 0, 1));
        let (y, cache) = forward_range(&net, 1, 2, &x1).unwrap();
        let (g, _) = backward_range(&net, 2, 1, &loss_gradient(&y, &t1), Some(&cache)).unwrap();
        let stepped = centralized_step(&net, &x1, &t1, 0.1).unwrap();
        for i in 0..2 {
            let expect = &net.layers[i].weights - &(&g.weights[i] * 0.1);
            assert!((&stepped.layers[i].weights - &expect).iter().all(|d| d.abs() < 1e-15));
        }
        assert!(centralized_step(&net, &Array2::zeros((0, 3)), &Array2::zeros((0, 2)), 0.1).is_err());
    }

    #[test]
    fn degenerate_partition_is_bitwise_central() {
        let net = DenseNet::random(&[3, 5, 4, 2], 11).unwrap();
        let (x, t) = (batch(8, 3, 12), batch(8, 2, 13));
        let central = centralized_step(&net, &x, &t, 0.05).unwrap();
        for mapping in RoleMapping::ALL {
            for m_s in 0..=3 {
                for m_l in m_s..=3 {
                    let p = Policy { mapping, m_s, m_l, b_o: 8, b_s: 0, b_l: 0 };
                    let out = hybrid_step(&net, &p, &x, &t, 0.05).unwrap();
                    assert_eq!(out.net, central);
                    assert!(out.replicas_consistent());
                }
            }
        }
    }

    #[test]
    fn policy_mismatch_is_rejected() {
        let net = DenseNet::random(&[3, 4, 2], 1).unwrap();
        let (x, t) = (batch(4, 3, 2), batch(4, 2, 3));
        let p = Policy { mapping: RoleMapping::ALL[0], m_s: 1, m_l: 3, b_o: 2, b_s: 1, b_l: 1 };
        assert!(hybrid_step(&net, &p, &x, &t, 0.1).is_err());
        let p = Policy { m_l: 2, b_o: 3, ..p };
        assert!(hybrid_step(&net, &p, &x, &t, 0.1).is_err());
    }
}
