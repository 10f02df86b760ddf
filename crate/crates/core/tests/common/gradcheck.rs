//! Finite-difference gradient oracle. Runs its own 64-bit forward pass and
//! never touches the crate's backprop code.

use duelforge::neuralnet::NetworkParameters;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-3;
/// Denominator floor so exactly-zero gradients (dead units) compare as equal.
pub const REL_FLOOR: f64 = 1e-6;

type Shadow = Vec<(Vec<f64>, Vec<f64>, usize, usize)>;

fn shadow(params: &NetworkParameters) -> Shadow {
    params
        .layers
        .iter()
        .map(|l| {
            (
                l.weights.iter().map(|&w| w as f64).collect(),
                l.biases.iter().map(|&b| b as f64).collect(),
                l.rows,
                l.cols,
            )
        })
        .collect()
}

/// Returns the per-sample layer outputs before activation.
fn preactivations(net: &Shadow, x: &[f64]) -> Vec<Vec<f64>> {
    let mut pre = Vec::new();
    let mut h = x.to_vec();
    for (li, (w, b, rows, cols)) in net.iter().enumerate() {
        let z: Vec<f64> = (0..*rows)
            .map(|r| b[r] + (0..*cols).map(|c| w[r * cols + c] * h[c]).sum::<f64>())
            .collect();
        h = if li + 1 < net.len() {
            z.iter().map(|v| v.max(0.0)).collect()
        } else {
            z.clone()
        };
        pre.push(z);
    }
    pre
}

/// Σ_b Σ_a G[b,a]·Q[b,a], whose gradient w.r.t. Q is G.
fn loss(net: &Shadow, inputs: &[Vec<f64>], out_grads: &[Vec<f64>]) -> f64 {
    inputs
        .iter()
        .zip(out_grads)
        .map(|(x, g)| {
            let q = preactivations(net, x).pop().unwrap();
            q.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum()
}

pub struct Case {
    pub params: NetworkParameters,
    pub inputs: Vec<f32>,
    pub out_grads: Vec<f32>,
    pub batch: usize,
}

/// Random 4→8→6→3 network and batch with no hidden pre-activation within
/// `margin` of the relu kink, so central differences are well defined.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = 0.02;
    loop {
        let mut params = NetworkParameters::with_dims([4, 8, 6, 3], rng.gen());
        for layer in params.layers.iter_mut() {
            for b in layer.biases.iter_mut() {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        let batch = rng.gen_range(1..=5);
        let inputs: Vec<f32> = (0..batch * 4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let out_grads: Vec<f32> = (0..batch * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let net = shadow(&params);
        let near_kink = inputs.chunks(4).any(|x| {
            let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let pre = preactivations(&net, &x);
            pre[..2].iter().flatten().any(|z| z.abs() < margin)
        });
        if !near_kink {
            return Case {
                params,
                inputs,
                out_grads,
                batch,
            };
        }
    }
}

/// Central-difference gradients laid out like the network: per layer,
/// weights then biases.
pub fn numeric_gradients(case: &Case) -> Vec<Vec<f64>> {
    let inputs: Vec<Vec<f64>> = case
        .inputs
        .chunks(4)
        .map(|c| c.iter().map(|&v| v as f64).collect())
        .collect();
    let grads: Vec<Vec<f64>> = case
        .out_grads
        .chunks(3)
        .map(|c| c.iter().map(|&v| v as f64).collect())
        .collect();
    let base = shadow(&case.params);
    let mut out = Vec::new();
    for li in 0..base.len() {
        let n_w = base[li].0.len();
        let n_b = base[li].1.len();
        let mut layer_grads = Vec::with_capacity(n_w + n_b);
        for k in 0..n_w + n_b {
            let mut plus = base.clone();
            let mut minus = base.clone();
            if k < n_w {
                plus[li].0[k] += FD_STEP;
                minus[li].0[k] -= FD_STEP;
            } else {
                plus[li].1[k - n_w] += FD_STEP;
                minus[li].1[k - n_w] -= FD_STEP;
            }
            let d = (loss(&plus, &inputs, &grads) - loss(&minus, &inputs, &grads)) / (2.0 * FD_STEP);
            layer_grads.push(d);
        }
        out.push(layer_grads);
    }
    out
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Worst relative error between the crate's analytic gradients and the oracle.
pub fn max_relative_error(case: &Case) -> f64 {
    let acts = case.params.forward_batch(&case.inputs, case.batch);
    let analytic = case
        .params
        .gradients(&acts, case.batch, &case.out_grads)
        .expect("gradients");
    let numeric = numeric_gradients(case);
    let mut worst: f64 = 0.0;
    for (layer, num) in analytic.layers.iter().zip(&numeric) {
        for (a, n) in layer.weights.iter().chain(&layer.biases).zip(num) {
            worst = worst.max(relative_error(*a as f64, *n));
        }
    }
    worst
}
