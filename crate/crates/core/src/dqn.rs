//! Double DQN learner over prioritized replay.

use rand::Rng;
use thiserror::Error;

use crate::envcore::{normalize_into, OBS_BYTES};
use crate::neuralnet::{Adam, AdamConfig, NetError, NetworkParameters, NUM_LAYERS};
use crate::replay::{PrioritizedBuffer, ReplayError, SampleIndex, Transition};

#[derive(Debug, Error)]
pub enum DqnError {
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid learner config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerConfig {
    pub discount: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Gradient steps between target-network syncs.
    pub target_sync_period: u64,
    pub huber_delta: f64,
    /// Learning starts once the buffer holds this many transitions.
    pub warmup: usize,
}

impl LearnerConfig {
    pub fn single_player() -> Self {
        Self {
            discount: 0.99,
            learning_rate: 1e-4,
            batch_size: 32,
            target_sync_period: 1_000,
            huber_delta: 1.0,
            warmup: 320,
        }
    }

    pub fn two_player() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 256,
            warmup: 2_560,
            ..Self::single_player()
        }
    }

    pub fn validate(&self) -> Result<(), DqnError> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(DqnError::Config(format!("discount {} outside (0, 1)", self.discount)));
        }
        if self.batch_size < 1 {
            return Err(DqnError::Config("batch_size must be at least 1".into()));
        }
        if self.target_sync_period < 1 {
            return Err(DqnError::Config("target_sync_period must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.huber_delta > 0.0) {
            return Err(DqnError::Config("learning_rate and huber_delta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsilonSchedule {
    Linear { start: f64, floor: f64, decay_steps: u64 },
    Multiplicative { start: f64, floor: f64, rate: f64 },
    Fixed(f64),
}

impl EpsilonSchedule {
    pub fn at(&self, step: u64) -> f64 {
        match *self {
            EpsilonSchedule::Linear {
                start,
                floor,
                decay_steps,
            } => {
                if decay_steps == 0 {
                    return floor;
                }
                let frac = step as f64 / decay_steps as f64;
                (start - (start - floor) * frac).max(floor)
            }
            EpsilonSchedule::Multiplicative { start, floor, rate } => {
                (start * rate.powf(step as f64)).max(floor)
            }
            EpsilonSchedule::Fixed(eps) => eps,
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy over `q`. Always consumes exactly one uniform draw, plus
/// one more when exploring.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f32], epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..q.len())
    } else {
        argmax(q)
    }
}

pub fn select_action<R: Rng + ?Sized>(
    params: &NetworkParameters,
    observation: &[f32],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, NetError> {
    let q = params.forward(observation)?;
    Ok(epsilon_greedy(&q, epsilon, rng))
}

/// `y = r` for terminal samples, otherwise
/// `y = r + γ·Q_target(s′, argmax_a Q_online(s′, a))`.
pub fn double_q_targets(
    rewards: &[f32],
    terminals: &[bool],
    q_online_next: &[f32],
    q_target_next: &[f32],
    actions: usize,
    discount: f64,
) -> Vec<f32> {
    let gamma = discount as f32;
    rewards
        .iter()
        .zip(terminals)
        .enumerate()
        .map(|(i, (&r, &terminal))| {
            if terminal {
                return r;
            }
            let row = i * actions..(i + 1) * actions;
            let best = argmax(&q_online_next[row.clone()]);
            r + gamma * q_target_next[row][best]
        })
        .collect()
}

fn stack_observations<'a, I>(observations: I, len: usize) -> Vec<f32>
where
    I: IntoIterator<Item = &'a [u8; OBS_BYTES]>,
{
    let mut out = vec![0.0; len * OBS_BYTES];
    for (chunk, obs) in out.chunks_exact_mut(OBS_BYTES).zip(observations) {
        normalize_into(obs, chunk);
    }
    out
}

pub fn compute_targets(
    online: &NetworkParameters,
    target: &NetworkParameters,
    batch: &[&Transition],
    discount: f64,
) -> Vec<f32> {
    let n = batch.len();
    if n == 0 {
        return Vec::new();
    }
    let next = stack_observations(batch.iter().map(|t| &t.next_obs), n);
    let q_online = online.forward_batch(&next, n);
    let q_target = target.forward_batch(&next, n);
    let rewards: Vec<f32> = batch.iter().map(|t| t.reward).collect();
    let terminals: Vec<bool> = batch.iter().map(|t| t.terminal).collect();
    double_q_targets(
        &rewards,
        &terminals,
        q_online.output(),
        q_target.output(),
        online.action_count(),
        discount,
    )
}

pub fn huber(td: f64, delta: f64) -> f64 {
    let a = td.abs();
    if a <= delta {
        0.5 * a * a
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// d huber / d td.
pub fn huber_grad(td: f64, delta: f64) -> f64 {
    td.clamp(-delta, delta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnDiagnostics {
    pub loss: f64,
    pub mean_abs_td: f64,
    pub grad_norms: [f64; NUM_LAYERS],
    pub target_synced: bool,
}

/// Hidden features of stored transitions under a frozen prefix. Frozen
/// layers never change and the target net shares them, so each
/// transition's features are computed once, when it is first sampled.
#[derive(Clone, Debug)]
struct FeatureCache {
    depth: usize,
    width: usize,
    /// Serial of the transition whose features a slot holds.
    serials: Vec<Option<u64>>,
    obs: Vec<f32>,
    next: Vec<f32>,
}

impl FeatureCache {
    fn new(depth: usize, width: usize) -> Self {
        Self {
            depth,
            width,
            serials: Vec::new(),
            obs: Vec::new(),
            next: Vec::new(),
        }
    }

    fn fill(&mut self, net: &NetworkParameters, indices: &[SampleIndex], items: &[&Transition]) {
        let w = self.width;
        let mut missing: Vec<usize> = Vec::new();
        for (i, idx) in indices.iter().enumerate() {
            if idx.slot >= self.serials.len() {
                self.serials.resize(idx.slot + 1, None);
                self.obs.resize((idx.slot + 1) * w, 0.0);
                self.next.resize((idx.slot + 1) * w, 0.0);
            }
            if self.serials[idx.slot] != Some(idx.serial) && !missing.iter().any(|&j| indices[j].slot == idx.slot) {
                missing.push(i);
            }
        }
        if missing.is_empty() {
            return;
        }
        let m = missing.len();
        let inputs = stack_observations(
            missing
                .iter()
                .map(|&i| &items[i].obs)
                .chain(missing.iter().map(|&i| &items[i].next_obs)),
            2 * m,
        );
        let feats = net.hidden_features(&inputs, 2 * m, self.depth);
        for (k, &i) in missing.iter().enumerate() {
            let slot = indices[i].slot;
            self.serials[slot] = Some(indices[i].serial);
            self.obs[slot * w..(slot + 1) * w].copy_from_slice(&feats[k * w..(k + 1) * w]);
            self.next[slot * w..(slot + 1) * w].copy_from_slice(&feats[(m + k) * w..(m + k + 1) * w]);
        }
    }

    /// `[obs features of the batch, next-obs features of the batch]`.
    fn gather(&self, indices: &[SampleIndex]) -> Vec<f32> {
        let w = self.width;
        let mut out = Vec::with_capacity(2 * indices.len() * w);
        for idx in indices {
            out.extend_from_slice(&self.obs[idx.slot * w..(idx.slot + 1) * w]);
        }
        for idx in indices {
            out.extend_from_slice(&self.next[idx.slot * w..(idx.slot + 1) * w]);
        }
        out
    }
}

/// Owns the online network, its lagged target copy and the optimizer.
#[derive(Clone, Debug)]
pub struct Learner {
    online: NetworkParameters,
    target: NetworkParameters,
    optimizer: Adam,
    config: LearnerConfig,
    grad_steps: u64,
    cache: Option<FeatureCache>,
}

impl Learner {
    pub fn new(params: NetworkParameters, config: LearnerConfig) -> Result<Self, DqnError> {
        config.validate()?;
        let optimizer = Adam::new(&params, AdamConfig::with_lr(config.learning_rate));
        Ok(Self {
            target: params.clone(),
            online: params,
            optimizer,
            config,
            grad_steps: 0,
            cache: None,
        })
        .map(Self::with_feature_cache_enabled)
    }

    fn with_feature_cache_enabled(mut self) -> Self {
        self.set_feature_cache(true);
        self
    }

    /// Turns the frozen-prefix feature cache on or off. It is on by default
    /// and only takes effect when at least the first layer is frozen.
    pub fn set_feature_cache(&mut self, enabled: bool) {
        let depth = self.online.frozen_prefix().min(NUM_LAYERS - 1);
        self.cache = (enabled && depth > 0).then(|| FeatureCache::new(depth, self.online.layers[depth].cols));
    }

    pub fn feature_cache_enabled(&self) -> bool {
        self.cache.is_some()
    }

    pub fn online(&self) -> &NetworkParameters {
        &self.online
    }

    pub fn target(&self) -> &NetworkParameters {
        &self.target
    }

    pub fn optimizer(&self) -> &Adam {
        &self.optimizer
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    pub fn into_online(self) -> NetworkParameters {
        self.online
    }

    pub fn ready(&self, buffer: &PrioritizedBuffer) -> bool {
        buffer.len() >= self.config.warmup.max(self.config.batch_size)
    }

    /// One prioritized double-DQN gradient step. Only the Q-value of the
    /// taken action receives gradient.
    pub fn learn_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &mut PrioritizedBuffer,
        beta: f64,
        rng: &mut R,
    ) -> Result<LearnDiagnostics, DqnError> {
        let b = self.config.batch_size;
        let a = self.online.action_count();
        let sample = buffer.sample(b, beta, rng)?;

        let (acts, q_target_next) = match self.cache.as_mut() {
            Some(cache) => {
                cache.fill(&self.online, &sample.indices, &sample.items);
                let feats = cache.gather(&sample.indices);
                let w = cache.width;
                (
                    self.online.forward_from_features(&feats, 2 * b, cache.depth),
                    self.target.forward_from_features(&feats[b * w..], b, cache.depth),
                )
            }
            None => {
                let mut inputs = stack_observations(sample.items.iter().map(|t| &t.obs), 2 * b);
                let next = stack_observations(sample.items.iter().map(|t| &t.next_obs), b);
                inputs[b * OBS_BYTES..].copy_from_slice(&next);
                (self.online.forward_batch(&inputs, 2 * b), self.target.forward_batch(&next, b))
            }
        };

        let rewards: Vec<f32> = sample.items.iter().map(|t| t.reward).collect();
        let terminals: Vec<bool> = sample.items.iter().map(|t| t.terminal).collect();
        let targets = double_q_targets(
            &rewards,
            &terminals,
            &acts.output()[b * a..],
            q_target_next.output(),
            a,
            self.config.discount,
        );

        let mut out_grads = vec![0.0f32; b * a];
        let mut td_errors = Vec::with_capacity(b);
        let mut loss = 0.0;
        let scale = 1.0 / b as f64;
        for (i, t) in sample.items.iter().enumerate() {
            let q_sa = acts.output_row(i)[t.action as usize];
            let td = (targets[i] - q_sa) as f64;
            let w = sample.weights[i];
            loss += scale * w * huber(td, self.config.huber_delta);
            // loss depends on Q(s,a) through td = y - Q(s,a)
            out_grads[i * a + t.action as usize] =
                (-scale * w * huber_grad(td, self.config.huber_delta)) as f32;
            td_errors.push(td);
        }
        let indices = sample.indices;

        let grad_norms = self
            .online
            .backward_and_update(&mut self.optimizer, &acts, b, &out_grads)?;
        buffer.update_priorities(&indices, &td_errors);

        self.grad_steps += 1;
        let target_synced = self.grad_steps % self.config.target_sync_period == 0;
        if target_synced {
            self.target = self.online.clone();
        }
        Ok(LearnDiagnostics {
            loss,
            mean_abs_td: td_errors.iter().map(|d| d.abs()).sum::<f64>() * scale,
            grad_norms,
            target_synced,
        })
    }
}
