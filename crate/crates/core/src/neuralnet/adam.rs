use super::{Gradients, NetworkParameters, NUM_LAYERS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Moments {
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Moments {
    fn zeros(len: usize) -> Self {
        Self {
            first: vec![0.0; len],
            second: vec![0.0; len],
        }
    }
}

/// Adam with bias correction. Moments are laid out per layer as weights
/// followed by biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    moments: [Moments; NUM_LAYERS],
}

impl Adam {
    pub fn new(params: &NetworkParameters, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: [0, 1, 2].map(|l| Moments::zeros(params.layers[l].param_count())),
        }
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments_zero(&self, layer: usize) -> bool {
        let m = &self.moments[layer];
        m.first.iter().chain(&m.second).all(|&v| v == 0.0)
    }

    /// Clears moments and step counter.
    pub fn reset(&mut self) {
        self.step = 0;
        for m in &mut self.moments {
            m.first.fill(0.0);
            m.second.fill(0.0);
        }
    }

    pub fn step(&mut self, params: &mut NetworkParameters, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let c = self.config;
        let correction1 = 1.0 - c.beta1.powi(t);
        let correction2 = 1.0 - c.beta2.powi(t);
        for l in 0..NUM_LAYERS {
            if params.freeze_mask[l] {
                continue;
            }
            let layer = &mut params.layers[l];
            let grad = &grads.layers[l];
            let m = &mut self.moments[l];
            let nw = layer.weights.len();
            let (mw, mb) = m.first.split_at_mut(nw);
            let (vw, vb) = m.second.split_at_mut(nw);
            update_slice(&mut layer.weights, &grad.weights, mw, vw, c, correction1, correction2);
            update_slice(&mut layer.biases, &grad.biases, mb, vb, c, correction1, correction2);
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(super) fn update_slice(
    params: &mut [f32],
    grads: &[f32],
    first: &mut [f64],
    second: &mut [f64],
    c: AdamConfig,
    correction1: f64,
    correction2: f64,
) {
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(first).zip(second) {
        let g = g as f64;
        *m = c.beta1 * *m + (1.0 - c.beta1) * g;
        *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p = (*p as f64 - c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon)) as f32;
    }
}
