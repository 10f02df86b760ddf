//! Checks for the prioritized buffer, each returning the measured quantity
//! so tests and the acceptance run share them.

use duelforge::replay::{PrioritizedBuffer, ReplayConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fills a 16-slot buffer with fixed priorities, draws `draws` samples in
/// batches of 16 and returns the worst `|freq - P(i)|`. `P(i)` is computed
/// here from the raw priorities, not read back from the tree.
pub fn sampling_law_deviation(alpha: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = ReplayConfig::with_capacity(16);
    cfg.alpha = alpha;
    let mut buf = PrioritizedBuffer::new(cfg).unwrap();
    let priorities: Vec<f64> = (0..16).map(|_| rng.gen_range(0.05..5.0)).collect();
    let idx: Vec<_> = (0..16u32).map(|i| buf.push(i)).collect();
    buf.update_priorities(&idx, &priorities);
    let floor = cfg.priority_floor;
    let mass: Vec<f64> = priorities.iter().map(|p| (p + floor).powf(alpha)).collect();
    let total: f64 = mass.iter().sum();

    let batch = 16;
    let mut counts = [0u64; 16];
    for _ in 0..draws / batch {
        let s = buf.sample(batch, 0.4, &mut rng).unwrap();
        for item in s.items {
            counts[*item as usize] += 1;
        }
    }
    let n = (draws / batch * batch) as f64;
    counts
        .iter()
        .zip(&mass)
        .map(|(&c, m)| (c as f64 / n - m / total).abs())
        .fold(0.0, f64::max)
}

/// Random interleaving of pushes and priority updates on a small ring, so
/// evictions and stale updates both happen. Returns `|root - Σ leaves| / Σ leaves`.
pub fn tree_drift_after(ops: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = PrioritizedBuffer::new(ReplayConfig::with_capacity(1000)).unwrap();
    let mut live = Vec::new();
    for i in 0..ops {
        if live.is_empty() || rng.gen_bool(0.5) {
            live.push(buf.push(i));
        } else {
            let k = rng.gen_range(1..=8.min(live.len()));
            let picks: Vec<_> = (0..k).map(|_| live[rng.gen_range(0..live.len())]).collect();
            let tds: Vec<f64> = (0..k).map(|_| rng.gen_range(-1e3..1e3) * rng.gen::<f64>().powi(4)).collect();
            buf.update_priorities(&picks, &tds);
        }
        if live.len() > 4000 {
            live.drain(..2000);
        }
    }
    let leaves = buf.tree().leaf_sum();
    (buf.tree().total() - leaves).abs() / leaves
}
