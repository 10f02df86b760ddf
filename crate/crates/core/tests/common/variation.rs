//! Naive windowed-variation reference: for every byte and time step the
//! neighbours are collected into a vector and averaged directly.

use duelforge::envcore::{RamTrace, OBS_BYTES};
use duelforge::ramscope::{temporal_variation, VariationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn naive(rows: &[[u8; OBS_BYTES]], kernel: usize, cap: f64) -> Vec<f64> {
    let half = (kernel / 2) as isize;
    let t_len = rows.len() as isize;
    (0..OBS_BYTES)
        .map(|b| {
            let mut acc = 0.0;
            for t in 0..t_len {
                let mut neighbours = Vec::new();
                for dt in -half..=half {
                    let s = t + dt;
                    if dt != 0 && s >= 0 && s < t_len {
                        neighbours.push(rows[s as usize][b] as f64);
                    }
                }
                let m = neighbours.iter().sum::<f64>() / neighbours.len() as f64;
                let d = rows[t as usize][b] as f64 - m;
                acc += d * d;
            }
            (acc / t_len as f64).min(cap)
        })
        .collect()
}

/// Random trace mixing uniform, slowly drifting and constant bytes.
pub fn random_trace(rng: &mut ChaCha8Rng, len: usize) -> Vec<[u8; OBS_BYTES]> {
    let kinds: Vec<u8> = (0..OBS_BYTES).map(|_| rng.gen_range(0..3)).collect();
    let mut state = [0u8; OBS_BYTES];
    rng.fill(&mut state[..]);
    (0..len)
        .map(|_| {
            for (b, k) in kinds.iter().enumerate() {
                state[b] = match k {
                    0 => rng.gen(),
                    1 => state[b].wrapping_add(rng.gen_range(0..3)),
                    _ => state[b],
                };
            }
            state
        })
        .collect()
}

/// Largest per-byte gap between the crate and the naive reference over
/// `traces` random traces cycling through the lengths 2, 11, 100, 2000.
pub fn max_oracle_gap(traces: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = VariationConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..traces {
        let len = [2, 11, 100, 2000][i % 4];
        let rows = random_trace(&mut rng, len);
        let expected = naive(&rows, cfg.kernel_size, cfg.cap);
        let got = temporal_variation(&RamTrace::new(rows), &cfg).unwrap();
        for (g, e) in got.per_byte.iter().zip(&expected) {
            worst = worst.max((g - e).abs());
        }
    }
    worst
}

/// `(constant trace all zero, alternating trace all at the cap)`.
pub fn edge_cases_hold() -> (bool, bool) {
    let cfg = VariationConfig::default();
    let constant = RamTrace::new(vec![[77u8; OBS_BYTES]; 500]);
    let flat = temporal_variation(&constant, &cfg).unwrap();
    let alternating = RamTrace::new(
        (0..1000)
            .map(|t| [if t % 2 == 0 { 0 } else { 255 }; OBS_BYTES])
            .collect(),
    );
    let capped = temporal_variation(&alternating, &cfg).unwrap();
    (
        flat.per_byte.iter().all(|&v| v == 0.0),
        capped.per_byte.iter().all(|&v| v == 3000.0),
    )
}

/// Frozen synthetic profile behind the committed golden graymap.
pub fn synthetic_profile() -> duelforge::ramscope::VariationProfile {
    let mut per_byte = [0.0; OBS_BYTES];
    for (k, v) in per_byte.iter_mut().enumerate() {
        // a ramp down the rows, a bright diagonal and a few saturated cells
        *v = match k {
            _ if k % 9 == 0 => 3000.0,
            _ if k % 23 == 5 => 0.0,
            _ => (k / 8) as f64 * 150.0 + (k % 8) as f64 * 12.5,
        };
    }
    duelforge::ramscope::VariationProfile {
        per_byte,
        kernel_size: 11,
        cap: 3000.0,
    }
}
