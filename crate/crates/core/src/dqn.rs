//! Deep Q-learning: an MLP action-value network trained by backpropagation,
//! a FIFO replay memory, a periodically synced target network and
//! epsilon-greedy exploration.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::{seeded, stream, SimRng};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "cran-qnet";
pub const CHECKPOINT_VERSION: u32 = 1;
const BUFFER_MAGIC: &[u8; 8] = b"CRANRPL1";

/// Fully connected network, rectifier on hidden layers, identity output.
///
/// Parameters live in one flat vector laid out layer by layer as
/// `[W_0, b_0, W_1, b_1, ...]`, with each `W_l` row-major `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    network: QNetwork,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl QNetwork {
    fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::Dimension(format!(
                "layer sizes {layer_sizes:?} need at least two non-zero entries"
            )));
        }
        Ok(())
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        Self::check_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params: vec![0.0; param_count(layer_sizes)],
        })
    }

    /// He-normal weights, zero biases.
    pub fn new<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        let mut off = 0;
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let sd = (2.0 / fan_in as f64).sqrt();
            for p in &mut net.params[off..off + fan_in * fan_out] {
                let z: f64 = StandardNormal.sample(rng);
                *p = sd * z;
            }
            off += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_params(layer_sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        Self::check_sizes(layer_sizes)?;
        if params.len() != param_count(layer_sizes) {
            return Err(Error::Dimension(format!(
                "{} parameters for layers {layer_sizes:?}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameter".into()));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_actions(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_width() {
            return Err(Error::Dimension(format!(
                "network expects {} inputs, got {}",
                self.input_width(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.layer_sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let a = &acts[l];
            let mut z = b.to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *zo += row.iter().zip(a).map(|(wi, ai)| wi * ai).sum::<f64>();
            }
            if l + 1 < layers {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts.push(z);
            off += n_in * n_out + n_out;
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.activations(x).pop().unwrap())
    }

    /// Loss `mean_b (y_b - Q(s_b, a_b))^2` and its gradient with respect to
    /// the flat parameter vector. Only the taken action contributes.
    pub fn loss_and_gradient(
        &self,
        states: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let b = states.len();
        if b == 0 {
            return Err(Error::Contract("empty batch".into()));
        }
        if actions.len() != b || targets.len() != b {
            return Err(Error::Dimension("batch fields differ in length".into()));
        }
        let layers = self.layer_sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.layer_sizes[l] * self.layer_sizes[l + 1] + self.layer_sizes[l + 1];
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for k in 0..b {
            self.check_input(states[k])?;
            if actions[k] >= self.num_actions() {
                return Err(Error::Domain(format!("action {} out of range", actions[k])));
            }
            let acts = self.activations(states[k]);
            let q = acts[layers][actions[k]];
            let err = targets[k] - q;
            loss += err * err;
            let mut delta = vec![0.0; self.num_actions()];
            delta[actions[k]] = -2.0 * err / b as f64;
            for l in (0..layers).rev() {
                let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
                let wo = offsets[l];
                let bo = wo + n_in * n_out;
                let a = &acts[l];
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    grad[bo + o] += d;
                    let g = &mut grad[wo + o * n_in..wo + (o + 1) * n_in];
                    for (gi, ai) in g.iter_mut().zip(a) {
                        *gi += d * ai;
                    }
                }
                if l > 0 {
                    let w = &self.params[wo..bo];
                    let mut prev = vec![0.0; n_in];
                    for o in 0..n_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        for (p, wi) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *p += d * wi;
                        }
                    }
                    for (p, ai) in prev.iter_mut().zip(a) {
                        if *ai <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        Ok((loss / b as f64, grad))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            network: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let header: serde_json::Value = serde_json::from_str(s)?;
        if header.get("format").and_then(|f| f.as_str()) != Some(CHECKPOINT_FORMAT) {
            return Err(Error::Parse("not a Q-network checkpoint".into()));
        }
        let version = header.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                kind: "checkpoint",
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let file: CheckpointFile = serde_json::from_str(s)?;
        let QNetwork {
            layer_sizes,
            params,
        } = file.network;
        Self::from_params(&layer_sizes, params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Momentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

/// First-order optimizer with its running state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, num_params: usize) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd => (vec![], vec![]),
            OptimizerKind::Momentum { .. } => (vec![0.0; num_params], vec![]),
            OptimizerKind::Adam { .. } => (vec![0.0; num_params], vec![0.0; num_params]),
        };
        Self {
            kind,
            learning_rate,
            m,
            v,
            t: 0,
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate, 0)
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        let lr = self.learning_rate;
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Momentum { beta } => {
                for ((p, g), m) in params.iter_mut().zip(grad).zip(&mut self.m) {
                    *m = beta * *m + g;
                    *p -= lr * *m;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.t.min(i32::MAX as u64) as i32);
                let c2 = 1.0 - beta2.powi(self.t.min(i32::MAX as u64) as i32);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(&mut self.m)
                    .zip(&mut self.v)
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Bounded FIFO transition store.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("buffer_capacity", "must be >= 1"));
        }
        Ok(Self {
            capacity,
            storage: VecDeque::with_capacity(capacity.min(1 << 16)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }

    /// Uniform sample without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if batch_size > self.len() {
            return Err(Error::Contract(format!(
                "cannot sample {batch_size} from {} stored transitions",
                self.len()
            )));
        }
        Ok(index::sample(rng, self.len(), batch_size)
            .into_iter()
            .map(|i| &self.storage[i])
            .collect())
    }

    /// Little-endian binary snapshot.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let width = self.storage.front().map_or(0, |t| t.state.len());
        w.write_all(BUFFER_MAGIC)?;
        for v in [self.capacity as u64, self.len() as u64, width as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for t in &self.storage {
            if t.state.len() != width || t.next_state.len() != width {
                return Err(Error::Dimension("ragged transitions in buffer".into()));
            }
            w.write_all(&(t.action as u64).to_le_bytes())?;
            w.write_all(&[t.terminal as u8])?;
            w.write_all(&t.reward.to_le_bytes())?;
            for v in t.state.iter().chain(&t.next_state) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BUFFER_MAGIC {
            return Err(Error::Parse("not a replay buffer snapshot".into()));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let capacity = next_u64(&mut r)? as usize;
        let len = next_u64(&mut r)? as usize;
        let width = next_u64(&mut r)? as usize;
        let mut buf = Self::new(capacity)?;
        if len > capacity {
            return Err(Error::Parse("snapshot longer than its capacity".into()));
        }
        for _ in 0..len {
            let action = next_u64(&mut r)? as usize;
            let mut flag = [0u8; 1];
            r.read_exact(&mut flag)?;
            let mut vals = vec![0.0; 1 + 2 * width];
            for v in &mut vals {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                *v = f64::from_le_bytes(b);
            }
            buf.push(Transition {
                state: vals[1..1 + width].to_vec(),
                action,
                reward: vals[0],
                next_state: vals[1 + width..].to_vec(),
                terminal: flag[0] != 0,
            });
        }
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action. With `epsilon == 0` no random number is drawn.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        net.check_input(state)?;
        return Ok(rng.random_range(0..net.num_actions()));
    }
    Ok(argmax(&net.forward(state)?))
}

/// Bellman targets `r` (terminal) or `r + gamma * max_a' Q_target(s', a')`.
pub fn compute_targets(batch: &[&Transition], target_net: &QNetwork, gamma: f64) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    batch
        .iter()
        .map(|t| {
            if t.terminal || gamma == 0.0 {
                Ok(t.reward)
            } else {
                let q = target_net.forward(&t.next_state)?;
                Ok(t.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            }
        })
        .collect()
}

/// One gradient step on the squared Bellman error of the taken actions.
/// Returns the loss before the update.
pub fn train_step(
    net: &mut QNetwork,
    target_net: &QNetwork,
    batch: &[&Transition],
    gamma: f64,
    optimizer: &mut Optimizer,
) -> Result<f64> {
    let targets = compute_targets(batch, target_net, gamma)?;
    fit_targets(net, batch, &targets, optimizer)
}

/// Gradient step towards precomputed targets. Returns the pre-update loss.
pub fn fit_targets(
    net: &mut QNetwork,
    batch: &[&Transition],
    targets: &[f64],
    optimizer: &mut Optimizer,
) -> Result<f64> {
    let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
    let (loss, grad) = net.loss_and_gradient(&states, &actions, targets)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("training loss {loss}")));
    }
    optimizer.apply(&mut net.params, &grad);
    Ok(loss)
}

pub fn sync_target(net: &QNetwork) -> QNetwork {
    net.clone()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnParams {
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub target_sync_interval: u64,
    pub train_interval: u64,
    pub buffer_capacity: usize,
    pub episode_length: usize,
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
    /// Number of training episodes run offline.
    pub episodes: usize,
}

impl Default for DqnParams {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 40_000,
            learning_rate: 1e-3,
            batch_size: 64,
            target_sync_interval: 200,
            train_interval: 4,
            buffer_capacity: 100_000,
            episode_length: 100,
            hidden: vec![64, 64],
            optimizer: OptimizerKind::Sgd,
            episodes: 6000,
        }
    }
}

impl DqnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma", "must lie in (0, 1]"));
        }
        for (key, v) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(key, "must lie in [0, 1]"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be >= 1"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::config("buffer_capacity", "must be >= batch_size"));
        }
        if self.target_sync_interval == 0 {
            return Err(Error::config("target_sync_interval", "must be >= 1"));
        }
        if self.train_interval == 0 {
            return Err(Error::config("train_interval", "must be >= 1"));
        }
        if self.episode_length == 0 {
            return Err(Error::config("episode_length", "must be >= 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer widths must be >= 1"));
        }
        match self.optimizer {
            OptimizerKind::Sgd => {}
            OptimizerKind::Momentum { beta } => {
                if !(0.0..1.0).contains(&beta) {
                    return Err(Error::config("optimizer.beta", "must lie in [0, 1)"));
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                    return Err(Error::config(
                        "optimizer",
                        "adam needs beta1, beta2 in [0, 1) and eps > 0",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end` over
    /// `epsilon_decay_steps`, constant afterwards.
    pub fn epsilon_at(&self, step: u64) -> f64 {
        if self.epsilon_decay_steps == 0 || step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    pub fn layer_sizes(&self, inputs: usize, actions: usize) -> Vec<usize> {
        let mut s = vec![inputs];
        s.extend(&self.hidden);
        s.push(actions);
        s
    }
}

/// Online network, target network, replay memory and optimizer, driven one
/// environment step at a time.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub params: DqnParams,
    pub net: QNetwork,
    pub target: QNetwork,
    pub buffer: ReplayBuffer,
    optimizer: Optimizer,
    policy_rng: SimRng,
    replay_rng: SimRng,
    steps: u64,
    updates: u64,
}

impl DqnAgent {
    pub fn new(inputs: usize, actions: usize, params: DqnParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let net = QNetwork::new(&params.layer_sizes(inputs, actions), &mut seeded(seed, stream::INIT))?;
        Self::from_parts(net, ReplayBuffer::new(params.buffer_capacity)?, params, seed)
    }

    /// Resumes from a trained network and replay memory. The target network
    /// starts as a copy of `net`.
    pub fn from_parts(
        net: QNetwork,
        buffer: ReplayBuffer,
        params: DqnParams,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let mut buffer = buffer;
        if buffer.capacity() != params.buffer_capacity {
            let mut b = ReplayBuffer::new(params.buffer_capacity)?;
            for t in buffer.iter() {
                b.push(t.clone());
            }
            buffer = b;
        }
        let optimizer = Optimizer::new(params.optimizer, params.learning_rate, net.params().len());
        Ok(Self {
            target: sync_target(&net),
            net,
            buffer,
            optimizer,
            policy_rng: seeded(seed, stream::POLICY),
            replay_rng: seeded(seed, stream::REPLAY),
            steps: 0,
            updates: 0,
            params,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon_at(self.steps)
    }

    pub fn act(&mut self, state: &[f64], epsilon: f64) -> Result<usize> {
        select_action(&self.net, state, epsilon, &mut self.policy_rng)
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.net.forward(state)?))
    }

    /// Stores a transition and, when `learn` is set, trains every
    /// `train_interval` steps once the memory holds a full batch and syncs
    /// the target every `target_sync_interval` updates. Returns the loss of
    /// the update performed, if any.
    pub fn observe(&mut self, t: Transition, learn: bool) -> Result<Option<f64>> {
        self.buffer.push(t);
        self.steps += 1;
        if !learn
            || !self.steps.is_multiple_of(self.params.train_interval)
            || self.buffer.len() < self.params.batch_size
        {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.params.batch_size, &mut self.replay_rng)?;
        let loss = train_step(
            &mut self.net,
            &self.target,
            &batch,
            self.params.gamma,
            &mut self.optimizer,
        )?;
        self.updates += 1;
        if self.updates.is_multiple_of(self.params.target_sync_interval) {
            self.target = sync_target(&self.net);
        }
        Ok(Some(loss))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(reward: f64, terminal: bool) -> Transition {
        Transition {
            state: vec![0.0, 1.0],
            action: 0,
            reward,
            next_state: vec![1.0, 0.0],
            terminal,
        }
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = QNetwork::zeros(&[3, 5, 4]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0; 4]);
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn single_linear_layer() {
        // W = [[1, 0], [0, 2]], b = [0.5, -1]
        let net = QNetwork::from_params(&[2, 2], vec![1.0, 0.0, 0.0, 2.0, 0.5, -1.0]).unwrap();
        assert_eq!(net.forward(&[3.0, 4.0]).unwrap(), vec![3.5, 7.0]);
        assert_eq!(net.forward(&[3.0, 4.0]).unwrap(), net.forward(&[3.0, 4.0]).unwrap());
    }

    #[test]
    fn argmax_and_shift() {
        assert_eq!(argmax(&[1.0, 5.0, 3.0]), 1);
        assert_eq!(argmax(&[8.0, 12.0, 10.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
    }

    #[test]
    fn bellman_targets() {
        // one linear layer whose outputs are [2, 0] at next_state [1, 0]
        let target = QNetwork::from_params(&[2, 2], vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let a = tr(3.0, true);
        let b = tr(1.0, false);
        let y = compute_targets(&[&a, &b], &target, 0.9).unwrap();
        assert_eq!(y[0], 3.0);
        assert!((y[1] - 2.8).abs() < 1e-12);
        let y0 = compute_targets(&[&a, &b], &target, 0.0).unwrap();
        assert_eq!(y0, vec![3.0, 1.0]);
        assert!(compute_targets(&[], &target, 0.9).is_err());
    }

    #[test]
    fn zero_error_leaves_parameters() {
        let mut rng = seeded(1, 0);
        let mut net = QNetwork::new(&[2, 4, 2], &mut rng).unwrap();
        let before = net.clone();
        let t = tr(0.0, true);
        let q = net.forward(&t.state).unwrap()[0];
        let loss = fit_targets(&mut net, &[&t], &[q], &mut Optimizer::sgd(0.1)).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net, before);
    }

    #[test]
    fn linear_update_matches_hand_gradient() {
        // Q(s, 0) = w . s + b with s = [0, 1]; dL/dw = -2 (y - Q) s
        let mut net = QNetwork::from_params(&[2, 1], vec![0.5, 0.25, 0.0]).unwrap();
        let t = tr(2.0, true);
        let lr = 0.1;
        let loss = fit_targets(&mut net, &[&t], &[2.0], &mut Optimizer::sgd(lr)).unwrap();
        assert_eq!(loss, (2.0f64 - 0.25).powi(2));
        let g = -2.0 * (2.0 - 0.25);
        assert_eq!(net.params(), &[0.5, 0.25 - lr * g, -lr * g]);
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(2).unwrap();
        for r in [1.0, 2.0, 3.0] {
            b.push(tr(r, false));
        }
        let rewards: Vec<f64> = b.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0]);
        assert!(b.sample(3, &mut seeded(0, 0)).is_err());
        let mut s: Vec<f64> = b.sample(2, &mut seeded(0, 0)).unwrap().iter().map(|t| t.reward).collect();
        s.sort_by(f64::total_cmp);
        assert_eq!(s, vec![2.0, 3.0]);
    }

    #[test]
    fn buffer_snapshot_round_trip() {
        let mut b = ReplayBuffer::new(5).unwrap();
        for r in [0.1, -2.5, 1e-300] {
            b.push(tr(r, r < 0.0));
        }
        let mut bytes = Vec::new();
        b.write_to(&mut bytes).unwrap();
        assert_eq!(ReplayBuffer::read_from(bytes.as_slice()).unwrap(), b);
    }

    #[test]
    fn checkpoint_round_trip_and_version() {
        let net = QNetwork::new(&[3, 4, 2], &mut seeded(4, 0)).unwrap();
        let json = net.to_json().unwrap();
        assert_eq!(QNetwork::from_json(&json).unwrap(), net);
        let bad = json.replace("\"version\":1", "\"version\":9");
        assert!(matches!(QNetwork::from_json(&bad), Err(Error::Version { found: 9, .. })));
    }

    #[test]
    fn sync_is_a_deep_copy() {
        let mut net = QNetwork::new(&[2, 3, 2], &mut seeded(2, 0)).unwrap();
        let target = sync_target(&net);
        let x = [0.3, -0.7];
        let before = target.forward(&x).unwrap();
        net.params_mut()[0] += 1.0;
        assert_eq!(target.forward(&x).unwrap(), before);
        assert_eq!(sync_target(&target), sync_target(&target));
    }

    #[test]
    fn epsilon_schedule() {
        let p = DqnParams {
            epsilon_decay_steps: 100,
            ..DqnParams::default()
        };
        assert_eq!(p.epsilon_at(0), 1.0);
        assert!((p.epsilon_at(50) - 0.525).abs() < 1e-12);
        assert_eq!(p.epsilon_at(100), 0.05);
        assert_eq!(p.epsilon_at(10_000), 0.05);
    }

    #[test]
    fn invalid_params_name_key() {
        let p = DqnParams {
            gamma: 0.0,
            ..DqnParams::default()
        };
        match p.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "gamma"),
            other => panic!("{other:?}"),
        }
    }
}
