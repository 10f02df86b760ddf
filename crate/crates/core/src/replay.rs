//! Proportional prioritized experience replay backed by a sum-tree.

use rand::Rng;
use thiserror::Error;

use crate::envcore::OBS_BYTES;

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("buffer holds {size} transitions, cannot sample a batch of {batch}")]
    InsufficientSize { size: usize, batch: usize },
    #[error("beta {0} outside [0, 1]")]
    Beta(f64),
    #[error("replay capacity must be positive")]
    Capacity,
}

/// Which controlled player produced a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Player1,
    Player2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: [u8; OBS_BYTES],
    pub action: u8,
    /// Clipped to [-1, 1].
    pub reward: f32,
    pub next_obs: [u8; OBS_BYTES],
    pub terminal: bool,
    pub source: Provenance,
}

/// Binary sum-tree over `capacity` leaves; internal nodes hold subtree sums.
#[derive(Clone, Debug)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.nodes[self.leaves + index]
    }

    /// Sets a leaf and recomputes each ancestor from its two children, so the
    /// root never accumulates incremental rounding drift.
    pub fn set(&mut self, index: usize, value: f64) {
        let mut node = self.leaves + index;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Leaf whose cumulative-mass interval contains `mass`.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = self.nodes[2 * node];
            if mass < left || self.nodes[2 * node + 1] <= 0.0 {
                node *= 2;
            } else {
                mass -= left;
                node = 2 * node + 1;
            }
        }
        node - self.leaves
    }

    pub fn leaf_sum(&self) -> f64 {
        self.nodes[self.leaves..].iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplayConfig {
    pub capacity: usize,
    pub alpha: f64,
    pub beta_start: f64,
    pub priority_floor: f64,
}

impl ReplayConfig {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            capacity,
            alpha: 0.6,
            beta_start: 0.4,
            priority_floor: 1e-5,
        }
    }

    /// Linear anneal from `beta_start` at step 0 to 1.0 at `horizon`.
    pub fn beta_at(&self, step: u64, horizon: u64) -> f64 {
        if horizon == 0 {
            return 1.0;
        }
        let frac = (step as f64 / horizon as f64).min(1.0);
        self.beta_start + (1.0 - self.beta_start) * frac
    }
}

/// Slot plus the insertion serial that occupied it when sampled; an update
/// aimed at an evicted slot is detected by a serial mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleIndex {
    pub slot: usize,
    pub serial: u64,
}

#[derive(Debug)]
pub struct SampledBatch<'a, T> {
    pub indices: Vec<SampleIndex>,
    pub items: Vec<&'a T>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PrioritizedBuffer<T = Transition> {
    config: ReplayConfig,
    items: Vec<T>,
    serials: Vec<u64>,
    priorities: Vec<f64>,
    tree: SumTree,
    next_slot: usize,
    next_serial: u64,
    max_priority: f64,
    stale_updates: u64,
}

impl<T> PrioritizedBuffer<T> {
    pub fn new(config: ReplayConfig) -> Result<Self, ReplayError> {
        if config.capacity == 0 {
            return Err(ReplayError::Capacity);
        }
        Ok(Self {
            config,
            items: Vec::new(),
            serials: Vec::new(),
            priorities: Vec::new(),
            tree: SumTree::new(config.capacity),
            next_slot: 0,
            next_serial: 0,
            max_priority: 1.0,
            stale_updates: 0,
        })
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn max_priority(&self) -> f64 {
        self.max_priority
    }

    pub fn stale_updates(&self) -> u64 {
        self.stale_updates
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    /// Raw priority `p` (before the alpha exponent) of a live slot.
    pub fn priority(&self, slot: usize) -> f64 {
        self.priorities[slot]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Items oldest first.
    pub fn iter_fifo(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.config.capacity {
            0
        } else {
            self.next_slot
        };
        self.items[split..].iter().chain(&self.items[..split])
    }

    pub fn clear(&mut self) {
        self.items.clear();
        self.serials.clear();
        self.priorities.clear();
        self.tree = SumTree::new(self.config.capacity);
        self.next_slot = 0;
        self.max_priority = 1.0;
    }

    /// Stores `item` at the current maximum priority, evicting the oldest
    /// entry when full.
    pub fn push(&mut self, item: T) -> SampleIndex {
        let slot = self.next_slot;
        let serial = self.next_serial;
        if slot == self.items.len() {
            self.items.push(item);
            self.serials.push(serial);
            self.priorities.push(self.max_priority);
        } else {
            self.items[slot] = item;
            self.serials[slot] = serial;
            self.priorities[slot] = self.max_priority;
        }
        self.tree.set(slot, self.max_priority.powf(self.config.alpha));
        self.next_slot = (slot + 1) % self.config.capacity;
        self.next_serial += 1;
        SampleIndex { slot, serial }
    }

    pub fn probability(&self, slot: usize) -> f64 {
        self.tree.get(slot) / self.tree.total()
    }

    /// Stratified proportional sampling: one draw in each of `batch` equal
    /// mass segments. Weights are `(N·P(i))^-beta` scaled so the batch
    /// maximum is 1.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        batch: usize,
        beta: f64,
        rng: &mut R,
    ) -> Result<SampledBatch<'_, T>, ReplayError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(ReplayError::Beta(beta));
        }
        if batch == 0 || self.items.len() < batch {
            return Err(ReplayError::InsufficientSize {
                size: self.items.len(),
                batch,
            });
        }
        let total = self.tree.total();
        let segment = total / batch as f64;
        let n = self.items.len() as f64;
        let mut indices = Vec::with_capacity(batch);
        let mut items = Vec::with_capacity(batch);
        let mut weights = Vec::with_capacity(batch);
        for k in 0..batch {
            let mass = segment * (k as f64 + rng.gen::<f64>());
            let slot = self.tree.find(mass.min(total)).min(self.items.len() - 1);
            let p = self.tree.get(slot) / total;
            indices.push(SampleIndex {
                slot,
                serial: self.serials[slot],
            });
            items.push(&self.items[slot]);
            weights.push((n * p).powf(-beta));
        }
        let max_w = weights.iter().cloned().fold(f64::MIN, f64::max);
        for w in weights.iter_mut() {
            *w /= max_w;
        }
        Ok(SampledBatch {
            indices,
            items,
            weights,
        })
    }

    /// Sets `p = |δ| + floor` for each live index; evicted ones are counted
    /// in [`PrioritizedBuffer::stale_updates`] and skipped.
    pub fn update_priorities(&mut self, indices: &[SampleIndex], td_errors: &[f64]) {
        for (idx, &td) in indices.iter().zip(td_errors) {
            if self.serials.get(idx.slot) != Some(&idx.serial) {
                self.stale_updates += 1;
                continue;
            }
            let p = td.abs() + self.config.priority_floor;
            self.priorities[idx.slot] = p;
            self.max_priority = self.max_priority.max(p);
            self.tree.set(idx.slot, p.powf(self.config.alpha));
        }
    }
}
