//! Fully-connected Q-value network (128 → 512 → 256 → A) with Adam, layer
//! freezing and a compact binary checkpoint format.
//!
//! Parameters are stored as `f32`. Matrix products go through
//! `matrixmultiply::sgemm`; the optimizer keeps its moment estimates in `f64`.

mod adam;
mod checkpoint;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{deserialize, serialize, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Width of a byte observation and of the network input.
pub const INPUT_DIM: usize = 128;
pub const HIDDEN1_DIM: usize = 512;
pub const HIDDEN2_DIM: usize = 256;
pub const MAX_ACTIONS: usize = 32;
pub const NUM_LAYERS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("action count {0} outside 1..={MAX_ACTIONS}")]
    ActionCount(usize),
    #[error("expected input of length {expected}, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("gradient batch shape mismatch: expected {expected} values, got {got}")]
    GradientShape { expected: usize, got: usize },
    #[error("non-finite gradient input")]
    NonFiniteGradient,
    #[error("checkpoint has bad magic bytes")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u16),
    #[error("truncated checkpoint payload")]
    Truncated,
    #[error("checkpoint dimension mismatch: {0}")]
    DimMismatch(String),
}

/// One affine layer. `weights` is `rows × cols` (out × in), row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
}

impl Layer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            biases: vec![0.0; rows],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParameters {
    pub layers: [Layer; NUM_LAYERS],
    pub freeze_mask: [bool; NUM_LAYERS],
}

impl NetworkParameters {
    /// Network with the given `[input, hidden1, hidden2, output]` widths,
    /// fan-in scaled uniform weights and zero biases.
    pub fn with_dims(dims: [usize; 4], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = [0, 1, 2].map(|i| {
            let (rows, cols) = (dims[i + 1], dims[i]);
            let bound = (6.0 / cols as f64).sqrt();
            let mut layer = Layer::zeros(rows, cols);
            for w in layer.weights.iter_mut() {
                *w = rng.gen_range(-bound..=bound) as f32;
            }
            layer
        });
        Self {
            layers,
            freeze_mask: [false; NUM_LAYERS],
        }
    }

    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            layers: [0, 1, 2].map(|i| Layer::zeros(dims[i + 1], dims[i])),
            freeze_mask: [false; NUM_LAYERS],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        [
            self.layers[0].cols,
            self.layers[0].rows,
            self.layers[1].rows,
            self.layers[2].rows,
        ]
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn action_count(&self) -> usize {
        self.layers[2].rows
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters that receive updates under the current freeze mask.
    pub fn trainable_param_count(&self) -> usize {
        self.layers
            .iter()
            .zip(self.freeze_mask)
            .filter(|(_, frozen)| !frozen)
            .map(|(l, _)| l.param_count())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }

    /// Freezes the first `count` layers and unfreezes the rest.
    pub fn freeze_first(&mut self, count: usize) {
        for (i, frozen) in self.freeze_mask.iter_mut().enumerate() {
            *frozen = i < count;
        }
    }

    /// Q-values for a single normalized observation.
    pub fn forward(&self, observation: &[f32]) -> Result<Vec<f32>, NetError> {
        if observation.len() != self.input_dim() {
            return Err(NetError::InputLength {
                expected: self.input_dim(),
                got: observation.len(),
            });
        }
        Ok(self.forward_batch(observation, 1).output().to_vec())
    }

    /// Forward pass over `batch` row-major inputs, keeping every activation
    /// needed by [`NetworkParameters::gradients`].
    pub fn forward_batch(&self, inputs: &[f32], batch: usize) -> Activations {
        assert_eq!(inputs.len(), batch * self.input_dim(), "input batch shape");
        let h1 = affine(&self.layers[0], inputs, batch, true);
        let h2 = affine(&self.layers[1], &h1, batch, true);
        let out = affine(&self.layers[2], &h2, batch, false);
        Activations {
            batch,
            input: inputs.to_vec(),
            hidden: [h1, h2],
            output: out,
        }
    }

    /// Number of leading frozen layers.
    pub fn frozen_prefix(&self) -> usize {
        self.freeze_mask.iter().take_while(|&&f| f).count()
    }

    /// Post-ReLU output of the first `depth` hidden layers (`depth` is 1 or 2).
    pub fn hidden_features(&self, inputs: &[f32], batch: usize, depth: usize) -> Vec<f32> {
        assert!((1..NUM_LAYERS).contains(&depth), "feature depth");
        assert_eq!(inputs.len(), batch * self.input_dim(), "input batch shape");
        let mut h = affine(&self.layers[0], inputs, batch, true);
        for layer in &self.layers[1..depth] {
            h = affine(layer, &h, batch, true);
        }
        h
    }

    /// Completes a forward pass from [`NetworkParameters::hidden_features`]
    /// of the given depth. The result supports
    /// [`NetworkParameters::gradients`] as long as layers below `depth`
    /// are frozen.
    pub fn forward_from_features(&self, features: &[f32], batch: usize, depth: usize) -> Activations {
        assert!((1..NUM_LAYERS).contains(&depth), "feature depth");
        assert_eq!(features.len(), batch * self.layers[depth].cols, "feature batch shape");
        let mut hidden = [Vec::new(), Vec::new()];
        hidden[depth - 1] = features.to_vec();
        if depth == 1 {
            hidden[1] = affine(&self.layers[1], features, batch, true);
        }
        let output = affine(&self.layers[2], &hidden[1], batch, false);
        Activations {
            batch,
            input: Vec::new(),
            hidden,
            output,
        }
    }

    /// Backpropagates `output_grads` (dLoss/dQ, `batch × A`, row-major) through
    /// the first `batch` rows of `acts`. Frozen layers get no gradient, and
    /// no work is spent propagating into a prefix that is entirely frozen.
    pub fn gradients(
        &self,
        acts: &Activations,
        batch: usize,
        output_grads: &[f32],
    ) -> Result<Gradients, NetError> {
        let a = self.action_count();
        if output_grads.len() != batch * a || batch > acts.batch {
            return Err(NetError::GradientShape {
                expected: batch * a,
                got: output_grads.len(),
            });
        }
        if output_grads.iter().any(|g| !g.is_finite()) {
            return Err(NetError::NonFiniteGradient);
        }
        debug_assert!(
            !acts.input.is_empty() || self.freeze_mask[0],
            "activations from cached features need a frozen first layer"
        );
        let inputs_of = |layer: usize| -> &[f32] {
            match layer {
                0 => &acts.input[..batch * self.layers[0].cols],
                l => &acts.hidden[l - 1][..batch * self.layers[l].cols],
            }
        };
        // Deepest layer index whose gradient is still needed below it.
        let first_trainable = self.freeze_mask.iter().position(|f| !f);
        let mut grads = Gradients::empty(self);
        let Some(first_trainable) = first_trainable else {
            return Ok(grads);
        };

        let mut delta = output_grads.to_vec();
        for l in (first_trainable..NUM_LAYERS).rev() {
            let layer = &self.layers[l];
            if !self.freeze_mask[l] {
                let g = &mut grads.layers[l];
                outer_accumulate(&delta, inputs_of(l), batch, layer.rows, layer.cols, &mut g.weights);
                for row in delta.chunks_exact(layer.rows) {
                    for (b, d) in g.biases.iter_mut().zip(row) {
                        *b += d;
                    }
                }
            }
            if l > first_trainable {
                let mut next = back_project(layer, &delta, batch);
                let h = &acts.hidden[l - 1][..batch * layer.cols];
                for (n, &act) in next.iter_mut().zip(h) {
                    if act <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = std::mem::take(&mut next);
            }
        }
        Ok(grads)
    }

    /// Applies one Adam step for the gradients of `output_grads`; returns the
    /// per-layer L2 norms of the raw gradients (zero for frozen layers).
    pub fn backward_and_update(
        &mut self,
        optimizer: &mut Adam,
        acts: &Activations,
        batch: usize,
        output_grads: &[f32],
    ) -> Result<[f64; NUM_LAYERS], NetError> {
        let grads = self.gradients(acts, batch, output_grads)?;
        optimizer.step(self, &grads);
        Ok(grads.norms())
    }
}

/// Builds the standard 128 → 512 → 256 → `action_count` network.
pub fn init_network(action_count: usize, seed: u64) -> Result<NetworkParameters, NetError> {
    if !(1..=MAX_ACTIONS).contains(&action_count) {
        return Err(NetError::ActionCount(action_count));
    }
    Ok(NetworkParameters::with_dims(
        [INPUT_DIM, HIDDEN1_DIM, HIDDEN2_DIM, action_count],
        seed,
    ))
}

/// Deep copy, freeze mask included.
pub fn copy_weights(source: &NetworkParameters) -> NetworkParameters {
    source.clone()
}

pub struct Activations {
    batch: usize,
    input: Vec<f32>,
    hidden: [Vec<f32>; 2],
    output: Vec<f32>,
}

impl Activations {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Q-values, `batch × A`, row-major.
    pub fn output(&self) -> &[f32] {
        &self.output
    }

    pub fn output_row(&self, row: usize) -> &[f32] {
        let a = self.output.len() / self.batch;
        &self.output[row * a..(row + 1) * a]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: [Layer; NUM_LAYERS],
}

impl Gradients {
    fn empty(params: &NetworkParameters) -> Self {
        Self {
            layers: [0, 1, 2].map(|i| Layer::zeros(params.layers[i].rows, params.layers[i].cols)),
        }
    }

    pub fn norms(&self) -> [f64; NUM_LAYERS] {
        self.layers.clone().map(|l| {
            l.weights
                .iter()
                .chain(&l.biases)
                .map(|&g| (g as f64) * (g as f64))
                .sum::<f64>()
                .sqrt()
        })
    }
}

/// `out = act(inputs · Wᵀ + b)` for a `batch × cols` input.
fn affine(layer: &Layer, inputs: &[f32], batch: usize, relu: bool) -> Vec<f32> {
    let (rows, cols) = (layer.rows, layer.cols);
    let mut out = Vec::with_capacity(batch * rows);
    for _ in 0..batch {
        out.extend_from_slice(&layer.biases);
    }
    // SAFETY: all slices are sized batch×cols, rows×cols and batch×rows.
    unsafe {
        matrixmultiply::sgemm(
            batch,
            cols,
            rows,
            1.0,
            inputs.as_ptr(),
            cols as isize,
            1,
            layer.weights.as_ptr(),
            1,
            cols as isize,
            1.0,
            out.as_mut_ptr(),
            rows as isize,
            1,
        );
    }
    if relu {
        for v in out.iter_mut() {
            *v = v.max(0.0);
        }
    }
    out
}

/// `grad_w += deltaᵀ · inputs` (rows × cols).
fn outer_accumulate(
    delta: &[f32],
    inputs: &[f32],
    batch: usize,
    rows: usize,
    cols: usize,
    grad_w: &mut [f32],
) {
    // SAFETY: delta is batch×rows, inputs batch×cols, grad_w rows×cols.
    unsafe {
        matrixmultiply::sgemm(
            rows,
            batch,
            cols,
            1.0,
            delta.as_ptr(),
            1,
            rows as isize,
            inputs.as_ptr(),
            cols as isize,
            1,
            1.0,
            grad_w.as_mut_ptr(),
            cols as isize,
            1,
        );
    }
}

/// `delta · W` (batch × cols).
fn back_project(layer: &Layer, delta: &[f32], batch: usize) -> Vec<f32> {
    let mut out = vec![0.0; batch * layer.cols];
    // SAFETY: delta is batch×rows, weights rows×cols, out batch×cols.
    unsafe {
        matrixmultiply::sgemm(
            batch,
            layer.rows,
            layer.cols,
            1.0,
            delta.as_ptr(),
            layer.rows as isize,
            1,
            layer.weights.as_ptr(),
            layer.cols as isize,
            1,
            0.0,
            out.as_mut_ptr(),
            layer.cols as isize,
            1,
        );
    }
    out
}
