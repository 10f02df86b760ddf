//! Straight-line reference versions of the report statistics.

use duelforge::metrics::{min_max_normalize, normalized_diff_of_means, running_average, winsorize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference (complexity, normalized difference) pairs; the last one is
/// the outlier whose removal strengthens the correlation.
pub const REFERENCE_PAIRS: [(f64, f64); 10] = [
    (454.15, 0.646),
    (394.42, 0.255),
    (328.22, 0.468),
    (285.66, 0.518),
    (217.84, 0.588),
    (142.73, -0.075),
    (112.35, 0.148),
    (126.85, 0.081),
    (127.54, 0.121),
    (65.31, 0.613),
];

pub fn ref_running_average(xs: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let start = if i + 1 > window { i + 1 - window } else { 0 };
        let mut s = 0.0;
        for x in &xs[start..=i] {
            s += x;
        }
        out.push(s / (i + 1 - start) as f64);
    }
    out
}

/// Smallest 1-based rank k with k/N >= q, found by scanning.
fn ref_rank(n: usize, q: f64) -> usize {
    (1..=n).find(|&k| k as f64 / n as f64 >= q - 1e-12).unwrap_or(n)
}

pub fn ref_winsorize(xs: &[f64], level: f64) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail = (1.0 - level) / 2.0;
    let lo = s[ref_rank(s.len(), tail) - 1];
    let hi = s[ref_rank(s.len(), 1.0 - tail) - 1];
    xs.iter()
        .map(|&x| if x < lo { lo } else if x > hi { hi } else { x })
        .collect()
}

pub fn ref_min_max(xs: &[f64]) -> Vec<f64> {
    let mut lo = xs[0];
    let mut hi = xs[0];
    for &x in xs {
        if x < lo {
            lo = x;
        }
        if x > hi {
            hi = x;
        }
    }
    xs.iter().map(|&x| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 }).collect()
}

pub fn ref_norm_diff(t: &[f64], s: &[f64], level: f64) -> f64 {
    let mut pool = t.to_vec();
    pool.extend_from_slice(s);
    let scaled = ref_min_max(&ref_winsorize(&pool, level));
    let mt: f64 = scaled[..t.len()].iter().sum::<f64>() / t.len() as f64;
    let ms: f64 = scaled[t.len()..].iter().sum::<f64>() / s.len() as f64;
    mt - ms
}

pub fn ref_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Reward-like series with ties, outliers and negative values.
pub fn random_series(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.gen_range(1..300);
    (0..n)
        .map(|_| match rng.gen_range(0..4) {
            0 => rng.gen_range(-21..=21) as f64,
            1 => rng.gen_range(-1.0..1.0),
            2 => rng.gen_range(-1e4..1e4),
            _ => 3.0,
        })
        .collect()
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Worst disagreement with the reference versions over `cases` random inputs.
pub fn max_stats_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let xs = random_series(&mut rng);
        let ys = random_series(&mut rng);
        let window = rng.gen_range(1..120);
        let level = [0.9, 0.8, 0.5, 1.0, rng.gen_range(0.01..1.0)][rng.gen_range(0..5)];
        worst = worst.max(gap(&running_average(&xs, window).unwrap(), &ref_running_average(&xs, window)));
        worst = worst.max(gap(&winsorize(&xs, level).unwrap(), &ref_winsorize(&xs, level)));
        worst = worst.max(gap(&min_max_normalize(&xs), &ref_min_max(&xs)));
        let d = normalized_diff_of_means(&xs, &ys, level).unwrap();
        worst = worst.max((d - ref_norm_diff(&xs, &ys, level)).abs());
    }
    worst
}
