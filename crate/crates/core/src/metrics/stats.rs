use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("input is empty")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooFew(usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("level {0} outside (0, 1]")]
    Level(f64),
    #[error("window must be at least 1")]
    Window,
    #[error("non-finite value in input")]
    NonFinite,
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Element `i` is the mean of the last `min(i + 1, window)` values.
pub fn running_average(series: &[f64], window: usize) -> Result<Vec<f64>, StatsError> {
    if window == 0 {
        return Err(StatsError::Window);
    }
    if series.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(series)?;
    Ok((0..series.len())
        .map(|i| mean(&series[(i + 1).saturating_sub(window)..=i]))
        .collect())
}

/// Nearest-rank percentile of sorted data: the `ceil(q·N)`-th smallest value
/// (1-based), with rank clamped to `[1, N]`.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    // the epsilon keeps q·N that lands on an integer from rounding up a rank
    let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

/// Bounds at the `(1-level)/2` and `1-(1-level)/2` nearest-rank percentiles.
pub fn winsor_bounds(values: &[f64], level: f64) -> Result<(f64, f64), StatsError> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(StatsError::Level(level));
    }
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((nearest_rank(&sorted, tail), nearest_rank(&sorted, 1.0 - tail)))
}

pub fn winsorize(values: &[f64], level: f64) -> Result<Vec<f64>, StatsError> {
    let (lo, hi) = winsor_bounds(values, level)?;
    Ok(values.iter().map(|v| v.clamp(lo, hi)).collect())
}

/// `(v - min) / (max - min)`; all zeros when the range is degenerate.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Jointly winsorizes and min-max scales both pools (one set of bounds per
/// game), then returns `mean(transferred) - mean(scratch)`.
pub fn normalized_diff_of_means(transferred: &[f64], scratch: &[f64], level: f64) -> Result<f64, StatsError> {
    if transferred.is_empty() || scratch.is_empty() {
        return Err(StatsError::Empty);
    }
    let pool: Vec<f64> = transferred.iter().chain(scratch).copied().collect();
    let (lo, hi) = winsor_bounds(&pool, level)?;
    let clamped: Vec<f64> = pool.iter().map(|v| v.clamp(lo, hi)).collect();
    let scaled = min_max_normalize(&clamped);
    let (t, s) = scaled.split_at(transferred.len());
    Ok(mean(t) - mean(s))
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFew(xs.len()));
    }
    check_finite(xs)?;
    check_finite(ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson r with each point left out in turn.
pub fn pearson_leave_one_out(xs: &[f64], ys: &[f64]) -> Vec<Result<f64, StatsError>> {
    (0..xs.len())
        .map(|skip| {
            let x: Vec<f64> = xs.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
            let y: Vec<f64> = ys.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
            pearson(&x, &y)
        })
        .collect()
}
