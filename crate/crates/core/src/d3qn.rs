//! Dueling double deep Q-learning: a small dense network with exact reverse-mode
//! gradients, double-Q targets, uniform replay, Adam and a hard-synced target copy.
//!
//! Parameters live in one flat vector. Each dense layer stores its weights
//! row-major as `[out][in]` followed by its `out` biases; layers appear in the
//! order trunk (input to last hidden), value head (1 output), advantage head
//! (one output per action).

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"D3QN";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Train steps between hard target copies.
    pub target_update_period: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Environment steps over which epsilon decays linearly.
    pub epsilon_decay_steps: u64,
    pub replay_capacity: usize,
    /// Transitions stored before the first train step.
    pub warmup: usize,
    pub hidden_sizes: Vec<usize>,
    pub grad_clip_norm: f64,
    /// Environment steps per train step.
    pub train_every: u64,
    /// Ramp the T2 count from zero over the first `curriculum_fraction` of episodes.
    pub curriculum: bool,
    pub curriculum_fraction: f64,
    /// One network and replay buffer shared by every T1 of a swarm.
    pub parameter_sharing: bool,
    /// Jammer and T1 retraining rounds of the adversarial pipeline.
    pub alternation_rounds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.99,
            learning_rate: 5e-4,
            batch_size: 64,
            target_update_period: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 15_000,
            replay_capacity: 100_000,
            warmup: 2_000,
            hidden_sizes: vec![64, 64],
            grad_clip_norm: 10.0,
            train_every: 4,
            curriculum: true,
            curriculum_fraction: 0.1,
            parameter_sharing: true,
            alternation_rounds: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must be in [0, 1]"));
        }
        if !(self.epsilon_end >= 0.0 && self.epsilon_end <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return Err(Error::config("epsilon must satisfy 0 <= end <= start <= 1"));
        }
        if !(self.learning_rate > 0.0) || !(self.grad_clip_norm > 0.0) {
            return Err(Error::config("learning_rate and grad_clip_norm must be > 0"));
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.target_update_period == 0 || self.train_every == 0 {
            return Err(Error::config(
                "batch_size, replay_capacity, target_update_period and train_every must be >= 1",
            ));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::config("hidden layer sizes must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.curriculum_fraction) {
            return Err(Error::config("curriculum_fraction must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Offsets of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: usize,
    pub biases: usize,
}

impl DenseLayer {
    fn len(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    input: usize,
    hidden: Vec<usize>,
    actions: usize,
    layers: Vec<DenseLayer>,
    pub params: Vec<f64>,
}

fn plan(input: usize, hidden: &[usize], actions: usize) -> Vec<DenseLayer> {
    let mut sizes = vec![input];
    sizes.extend_from_slice(hidden);
    let last = *sizes.last().unwrap();
    let mut shapes: Vec<(usize, usize)> = sizes.windows(2).map(|w| (w[0], w[1])).collect();
    shapes.push((last, 1));
    shapes.push((last, actions));
    let mut offset = 0;
    shapes
        .into_iter()
        .map(|(i, o)| {
            let l = DenseLayer {
                inputs: i,
                outputs: o,
                weights: offset,
                biases: offset + i * o,
            };
            offset += l.len();
            l
        })
        .collect()
}

/// Activations kept from a forward pass for backpropagation.
struct Trace {
    /// Input followed by every hidden activation (post-ReLU).
    acts: Vec<Vec<f64>>,
    value: f64,
    advantages: Vec<f64>,
}

fn dense(layer: &DenseLayer, params: &[f64], x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let w = &params[layer.weights..layer.biases];
    let b = &params[layer.biases..layer.biases + layer.outputs];
    for o in 0..layer.outputs {
        let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
        let mut s = b[o];
        for (wi, xi) in row.iter().zip(x) {
            s += wi * xi;
        }
        out.push(s);
    }
}

impl NetworkParams {
    /// He-uniform trunk weights, Glorot-uniform heads, zero biases.
    pub fn new(input: usize, hidden: &[usize], actions: usize, rng: &mut ChaCha8Rng) -> Result<NetworkParams> {
        let mut net = NetworkParams::zeros(input, hidden, actions)?;
        let n_trunk = hidden.len();
        for (k, l) in net.layers.clone().iter().enumerate() {
            let bound = if k < n_trunk {
                (6.0 / l.inputs as f64).sqrt()
            } else {
                (6.0 / (l.inputs + l.outputs) as f64).sqrt()
            };
            for w in &mut net.params[l.weights..l.biases] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(input: usize, hidden: &[usize], actions: usize) -> Result<NetworkParams> {
        if input == 0 || actions == 0 || hidden.contains(&0) {
            return Err(Error::config("network needs input, hidden and action widths >= 1"));
        }
        let layers = plan(input, hidden, actions);
        let n = layers.last().map_or(0, |l| l.biases + l.outputs);
        Ok(NetworkParams {
            input,
            hidden: hidden.to_vec(),
            actions,
            layers,
            params: vec![0.0; n],
        })
    }

    pub fn input_width(&self) -> usize {
        self.input
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.hidden
    }

    pub fn action_count(&self) -> usize {
        self.actions
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn value_head(&self) -> DenseLayer {
        self.layers[self.hidden.len()]
    }

    pub fn advantage_head(&self) -> DenseLayer {
        self.layers[self.hidden.len() + 1]
    }

    pub fn same_shape(&self, other: &NetworkParams) -> bool {
        self.input == other.input && self.hidden == other.hidden && self.actions == other.actions
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input {
            return Err(Error::contract(format!(
                "feature width {} does not match network input width {}",
                x.len(),
                self.input
            )));
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut acts = Vec::with_capacity(self.hidden.len() + 1);
        acts.push(x.to_vec());
        for l in &self.layers[..self.hidden.len()] {
            let mut h = Vec::with_capacity(l.outputs);
            dense(l, &self.params, acts.last().unwrap(), &mut h);
            for v in &mut h {
                *v = v.max(0.0);
            }
            acts.push(h);
        }
        let top = acts.last().unwrap();
        let mut v = Vec::with_capacity(1);
        dense(&self.value_head(), &self.params, top, &mut v);
        let mut a = Vec::with_capacity(self.actions);
        dense(&self.advantage_head(), &self.params, top, &mut a);
        Trace {
            acts,
            value: v[0],
            advantages: a,
        }
    }

    fn q_from(trace: &Trace) -> Vec<f64> {
        let mean = trace.advantages.iter().sum::<f64>() / trace.advantages.len() as f64;
        trace.advantages.iter().map(|a| trace.value + a - mean).collect()
    }

    /// `Q_a = V + A_a - mean(A)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(Self::q_from(&self.trace(x)))
    }

    /// Value and raw advantages before the dueling combination.
    pub fn heads(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        let t = self.trace(x);
        Ok((t.value, t.advantages))
    }

    /// Accumulates `dL/dparams` for one sample given `dL/dQ`.
    fn backward(&self, trace: &Trace, dq: &[f64], grad: &mut [f64]) {
        let n = self.actions as f64;
        let dq_sum: f64 = dq.iter().sum();
        let dv = dq_sum;
        let da: Vec<f64> = dq.iter().map(|g| g - dq_sum / n).collect();
        let top = trace.acts.last().unwrap();
        let mut dh = vec![0.0; top.len()];
        for (layer, delta) in [(self.value_head(), vec![dv]), (self.advantage_head(), da)] {
            accumulate(&layer, &self.params, top, &delta, grad, &mut dh);
        }
        for k in (0..self.hidden.len()).rev() {
            let layer = self.layers[k];
            let out = &trace.acts[k + 1];
            let delta: Vec<f64> = dh.iter().zip(out).map(|(g, h)| if *h > 0.0 { *g } else { 0.0 }).collect();
            let mut dx = vec![0.0; layer.inputs];
            accumulate(&layer, &self.params, &trace.acts[k], &delta, grad, &mut dx);
            dh = dx;
        }
    }

    /// Copy with `new_input` input features; extra input columns are zero so
    /// the widened network computes the same outputs on the original prefix.
    pub fn widen_input(&self, new_input: usize) -> Result<NetworkParams> {
        if new_input < self.input {
            return Err(Error::config(format!(
                "cannot narrow network input from {} to {new_input}",
                self.input
            )));
        }
        let mut wide = NetworkParams::zeros(new_input, &self.hidden, self.actions)?;
        let (old0, new0) = (self.layers[0], wide.layers[0]);
        for o in 0..old0.outputs {
            let src = &self.params[old0.weights + o * old0.inputs..old0.weights + (o + 1) * old0.inputs];
            let dst = new0.weights + o * new0.inputs;
            wide.params[dst..dst + old0.inputs].copy_from_slice(src);
        }
        let old_rest = old0.biases;
        let new_rest = new0.biases;
        wide.params[new_rest..].copy_from_slice(&self.params[old_rest..]);
        Ok(wide)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.params.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.input as u32).to_le_bytes());
        out.extend_from_slice(&(self.hidden.len() as u32).to_le_bytes());
        for h in &self.hidden {
            out.extend_from_slice(&(*h as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.actions as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<NetworkParams> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::format("not a D3QN checkpoint (bad magic)"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(format!(
                "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let input = r.u32()? as usize;
        let n_hidden = r.u32()? as usize;
        if n_hidden > 64 {
            return Err(Error::format("implausible hidden layer count"));
        }
        let hidden: Vec<usize> = (0..n_hidden).map(|_| r.u32().map(|h| h as usize)).collect::<Result<_>>()?;
        let actions = r.u32()? as usize;
        let count = r.u64()? as usize;
        let mut net = NetworkParams::zeros(input, &hidden, actions).map_err(|e| Error::format(e.to_string()))?;
        if count != net.params.len() {
            return Err(Error::format(format!(
                "checkpoint holds {count} parameters, layer sizes imply {}",
                net.params.len()
            )));
        }
        if r.bytes.len() - r.pos != 8 * count {
            return Err(Error::format("checkpoint length does not match its header"));
        }
        for p in &mut net.params {
            *p = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        }
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::format("checkpoint contains non-finite parameters"));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<NetworkParams> {
        NetworkParams::from_bytes(&fs::read(path)?)
    }
}

/// Adds `delta ⊗ x` to the layer's weight gradient, `delta` to its bias
/// gradient, and `Wᵀ delta` to `dx`.
fn accumulate(layer: &DenseLayer, params: &[f64], x: &[f64], delta: &[f64], grad: &mut [f64], dx: &mut [f64]) {
    let n_in = layer.inputs;
    for (o, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let w = layer.weights + o * n_in;
        for ((g, xi), (wi, dxi)) in grad[w..w + n_in]
            .iter_mut()
            .zip(x)
            .zip(params[w..w + n_in].iter().zip(dx.iter_mut()))
        {
            *g += d * xi;
            *dxi += d * wi;
        }
        grad[layer.biases + o] += d;
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::format("checkpoint truncated"));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action.
pub fn act(params: &NetworkParams, x: &[f64], epsilon: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    params.check_input(x)?;
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..params.actions));
    }
    Ok(argmax(&params.forward(x)?))
}

/// Linear decay from `epsilon_start` to `epsilon_end` over `epsilon_decay_steps`.
pub fn epsilon_at(step: u64, cfg: &TrainConfig) -> f64 {
    if cfg.epsilon_decay_steps == 0 || step >= cfg.epsilon_decay_steps {
        return cfg.epsilon_end;
    }
    let frac = step as f64 / cfg.epsilon_decay_steps as f64;
    cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity: capacity.max(1),
            items: Vec::new(),
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// Uniform sample with replacement.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<&Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect()
    }
}

/// Double-Q targets: `r` for terminal transitions, otherwise
/// `r + γ · Q_target(s', argmax_a Q_online(s', a))`.
pub fn td_targets(batch: &[&Transition], online: &NetworkParams, target: &NetworkParams, gamma: f64) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                return Ok(t.reward);
            }
            let a = argmax(&online.forward(&t.next_state)?);
            Ok(t.reward + gamma * target.forward(&t.next_state)?[a])
        })
        .collect()
}

/// Mean squared TD error on the taken actions and its exact gradient.
pub fn loss_and_gradient(params: &NetworkParams, batch: &[&Transition], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() || batch.len() != targets.len() {
        return Err(Error::contract("batch and targets must be non-empty and of equal length"));
    }
    let mut grad = vec![0.0; params.params.len()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    let mut dq = vec![0.0; params.actions];
    for (t, y) in batch.iter().zip(targets) {
        params.check_input(&t.state)?;
        if t.action >= params.actions {
            return Err(Error::contract(format!("action {} out of range", t.action)));
        }
        let trace = params.trace(&t.state);
        let q = NetworkParams::q_from(&trace);
        let err = q[t.action] - y;
        loss += err * err * scale;
        dq.iter_mut().for_each(|g| *g = 0.0);
        dq[t.action] = 2.0 * err * scale;
        params.backward(&trace, &dq, &mut grad);
    }
    Ok((loss, grad))
}

/// Rescales `grad` so its Euclidean norm is at most `max_norm`; returns the original norm.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
        }
    }
}

/// Hard copy of `online` into `target` whenever `step_counter` is a positive
/// multiple of `period`. Returns whether a copy happened.
pub fn sync_target(online: &NetworkParams, target: &mut NetworkParams, period: u64, step_counter: u64) -> bool {
    if period > 0 && step_counter > 0 && step_counter % period == 0 {
        target.params.clone_from(&online.params);
        true
    } else {
        false
    }
}

/// Online and target networks with their optimizer state.
#[derive(Debug, Clone)]
pub struct Learner {
    pub online: NetworkParams,
    pub target: NetworkParams,
    pub adam: Adam,
    pub train_steps: u64,
}

impl Learner {
    pub fn new(online: NetworkParams, cfg: &TrainConfig) -> Learner {
        let adam = Adam::new(online.params.len(), cfg.learning_rate);
        Learner {
            target: online.clone(),
            online,
            adam,
            train_steps: 0,
        }
    }

    /// One minibatch update followed by the target sync check. Returns `None`
    /// while the buffer holds fewer than `max(warmup, 1)` transitions.
    pub fn train_step(&mut self, buffer: &ReplayBuffer, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
        if buffer.len() < cfg.warmup.max(1) {
            return Ok(None);
        }
        let batch = buffer.sample(cfg.batch_size, rng);
        let targets = td_targets(&batch, &self.online, &self.target, cfg.gamma)?;
        let (loss, mut grad) = loss_and_gradient(&self.online, &batch, &targets)?;
        clip_global_norm(&mut grad, cfg.grad_clip_norm);
        self.adam.step(&mut self.online.params, &grad);
        self.train_steps += 1;
        sync_target(&self.online, &mut self.target, cfg.target_update_period, self.train_steps);
        Ok(Some(loss))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(s: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(s)
    }

    #[test]
    fn layout_offsets_are_contiguous() {
        let n = NetworkParams::zeros(3, &[4, 5], 2).unwrap();
        let l = n.layers();
        assert_eq!(l.len(), 4);
        assert_eq!((l[0].weights, l[0].biases), (0, 12));
        assert_eq!(l[1].weights, 16);
        assert_eq!(n.value_head().inputs, 5);
        assert_eq!(n.params.len(), 16 + 25 + 6 + 12);
    }

    #[test]
    fn zero_advantage_head_gives_value_everywhere() {
        let mut n = NetworkParams::new(4, &[6], 5, &mut rng(1)).unwrap();
        let a = n.advantage_head();
        for p in &mut n.params[a.weights..a.biases + a.outputs] {
            *p = 0.0;
        }
        let x = [0.1, -0.2, 0.3, 0.9];
        let (v, _) = n.heads(&x).unwrap();
        for q in n.forward(&x).unwrap() {
            assert!((q - v).abs() < 1e-15);
        }
    }

    #[test]
    fn shifting_advantages_leaves_q() {
        let mut n = NetworkParams::new(3, &[4], 3, &mut rng(2)).unwrap();
        let x = [0.5, 0.1, -0.7];
        let q0 = n.forward(&x).unwrap();
        let a = n.advantage_head();
        for b in &mut n.params[a.biases..a.biases + a.outputs] {
            *b += 3.25;
        }
        let q1 = n.forward(&x).unwrap();
        for (p, q) in q0.iter().zip(&q1) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn width_mismatch_is_contract_error() {
        let n = NetworkParams::zeros(3, &[2], 2).unwrap();
        assert!(matches!(n.forward(&[1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
    }

    #[test]
    fn epsilon_schedule() {
        let c = TrainConfig {
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_decay_steps: 100,
            ..TrainConfig::default()
        };
        assert_eq!(epsilon_at(0, &c), 1.0);
        assert!((epsilon_at(50, &c) - 0.55).abs() < 1e-12);
        assert_eq!(epsilon_at(100, &c), 0.1);
        assert_eq!(epsilon_at(10_000, &c), 0.1);
    }

    #[test]
    fn replay_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(Transition {
                state: vec![i as f64],
                action: 0,
                reward: 0.0,
                next_state: vec![],
                terminal: true,
            });
        }
        assert_eq!(b.len(), 3);
        let xs: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().state[0]).collect();
        assert_eq!(xs, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sync_schedule() {
        let online = NetworkParams::new(2, &[3], 2, &mut rng(3)).unwrap();
        let mut target = NetworkParams::zeros(2, &[3], 2).unwrap();
        assert!(!sync_target(&online, &mut target, 5, 4));
        assert!(sync_target(&online, &mut target, 5, 5));
        assert_eq!(target, online);
        assert!(!sync_target(&online, &mut target, 5, 6));
    }

    #[test]
    fn checkpoint_round_trip_and_rejections() {
        let n = NetworkParams::new(5, &[7, 3], 4, &mut rng(4)).unwrap();
        let bytes = n.to_bytes();
        let back = NetworkParams::from_bytes(&bytes).unwrap();
        assert_eq!(back, n);
        assert!(back.params.iter().zip(&n.params).all(|(a, b)| a.to_bits() == b.to_bits()));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(NetworkParams::from_bytes(&bad), Err(Error::Format(_))));
        assert!(NetworkParams::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(NetworkParams::from_bytes(b"nope").is_err());
    }

    #[test]
    fn widened_input_preserves_outputs() {
        let n = NetworkParams::new(3, &[5], 2, &mut rng(5)).unwrap();
        let w = n.widen_input(6).unwrap();
        let q0 = n.forward(&[0.2, -0.4, 0.6]).unwrap();
        let q1 = w.forward(&[0.2, -0.4, 0.6, 0.9, -0.9, 0.3]).unwrap();
        assert_eq!(q0, q1);
        assert!(n.widen_input(2).is_err());
    }

    #[test]
    fn perfect_predictions_give_zero_loss() {
        let n = NetworkParams::new(2, &[3], 2, &mut rng(6)).unwrap();
        let t = Transition {
            state: vec![0.3, 0.1],
            action: 1,
            reward: 0.0,
            next_state: vec![0.0, 0.0],
            terminal: true,
        };
        let y = n.forward(&t.state).unwrap()[1];
        let (loss, grad) = loss_and_gradient(&n, &[&t], &[y]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }
}
