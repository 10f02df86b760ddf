//! Per-byte temporal variation of observation traces.
//!
//! For each byte and time step the value is compared with the mean of its
//! temporal neighbours inside a window of `kernel_size` steps; the squared
//! residuals are averaged over time and capped. The mean of the 128 capped
//! values is the trace's RAM complexity.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envcore::{RamTrace, OBS_BYTES};

pub const HEATMAP_ROWS: usize = 16;
pub const HEATMAP_COLS: usize = 8;

#[derive(Debug, Error)]
pub enum RamError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("temporal variation needs at least 2 rows, trace has {0}")]
    TooShort(usize),
    #[error("kernel size {0} must be odd and at least 3")]
    Kernel(usize),
    #[error("no time step has a full window of {kernel} in a trace of {rows} rows")]
    NoFullWindow { kernel: usize, rows: usize },
    #[error("cap must be positive, got {0}")]
    Cap(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Windows near either end shrink to the neighbours that exist.
    Truncate,
    /// Only time steps with a complete window contribute.
    Valid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationConfig {
    pub kernel_size: usize,
    pub cap: f64,
    pub include_center: bool,
    pub boundary: BoundaryMode,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self {
            kernel_size: 11,
            cap: 3000.0,
            include_center: false,
            boundary: BoundaryMode::Truncate,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationProfile {
    pub per_byte: [f64; OBS_BYTES],
    pub kernel_size: usize,
    pub cap: f64,
}

pub fn temporal_variation(trace: &RamTrace, config: &VariationConfig) -> Result<VariationProfile, RamError> {
    let rows = trace.len();
    if rows == 0 {
        return Err(RamError::EmptyTrace);
    }
    if rows < 2 {
        return Err(RamError::TooShort(rows));
    }
    let k = config.kernel_size;
    if k < 3 || k % 2 == 0 {
        return Err(RamError::Kernel(k));
    }
    if !(config.cap > 0.0) {
        return Err(RamError::Cap(config.cap));
    }
    let half = k / 2;
    let steps = match config.boundary {
        BoundaryMode::Truncate => 0..rows,
        BoundaryMode::Valid => {
            if rows < k {
                return Err(RamError::NoFullWindow { kernel: k, rows });
            }
            half..rows - half
        }
    };

    let mut per_byte = [0.0; OBS_BYTES];
    let mut prefix = vec![0.0f64; rows + 1];
    let mut column = vec![0.0f64; rows];
    for (byte, out) in per_byte.iter_mut().enumerate() {
        for (t, v) in trace.column(byte).enumerate() {
            column[t] = v as f64;
            prefix[t + 1] = prefix[t] + v as f64;
        }
        let mut total = 0.0;
        for t in steps.clone() {
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(rows - 1);
            let mut sum = prefix[hi + 1] - prefix[lo];
            let mut count = (hi - lo + 1) as f64;
            if !config.include_center {
                sum -= column[t];
                count -= 1.0;
            }
            let residual = column[t] - sum / count;
            total += residual * residual;
        }
        *out = (total / steps.len() as f64).min(config.cap);
    }
    Ok(VariationProfile {
        per_byte,
        kernel_size: k,
        cap: config.cap,
    })
}

pub fn ram_complexity(profile: &VariationProfile) -> f64 {
    profile.per_byte.iter().sum::<f64>() / OBS_BYTES as f64
}

/// Byte `k` sits at row `k / 8`, column `k % 8`.
pub fn heatmap_cell(byte: usize) -> (usize, usize) {
    (byte / HEATMAP_COLS, byte % HEATMAP_COLS)
}

pub fn intensity(value: f64, cap: f64) -> u8 {
    (255.0 * value / cap).round().clamp(0.0, 255.0) as u8
}

/// 16 rows of 8 comma-separated raw values.
pub fn heatmap_csv(profile: &VariationProfile) -> String {
    let mut out = String::new();
    for row in profile.per_byte.chunks(HEATMAP_COLS) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Plain-text graymap (P2), 8 wide by 16 high, maxval 255; brighter cells
/// vary more.
pub fn heatmap_pgm(profile: &VariationProfile) -> String {
    let mut out = format!("P2\n{HEATMAP_COLS} {HEATMAP_ROWS}\n255\n");
    for row in profile.per_byte.chunks(HEATMAP_COLS) {
        let cells: Vec<String> = row
            .iter()
            .map(|&v| intensity(v, profile.cap).to_string())
            .collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

/// Parses a heat CSV back into per-byte values.
pub fn parse_heatmap_csv(text: &str) -> Result<[f64; OBS_BYTES], String> {
    let mut values = Vec::with_capacity(OBS_BYTES);
    for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != HEATMAP_COLS {
            return Err(format!("line {}: expected {HEATMAP_COLS} values", lineno + 1));
        }
        for c in cells {
            values.push(
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("line {}: {e}", lineno + 1))?,
            );
        }
    }
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {OBS_BYTES} values, found {}", v.len()))
}

pub struct HeatmapFiles {
    pub csv: PathBuf,
    pub pgm: PathBuf,
}

/// Writes `<name>.heat.csv` and `<name>.pgm` into `dir`.
pub fn render_heatmap(profile: &VariationProfile, dir: &Path, name: &str) -> Result<HeatmapFiles, RamError> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{name}.heat.csv"));
    let pgm = dir.join(format!("{name}.pgm"));
    std::fs::write(&csv, heatmap_csv(profile))?;
    std::fs::write(&pgm, heatmap_pgm(profile))?;
    Ok(HeatmapFiles { csv, pgm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_from(column: &[u8]) -> RamTrace {
        RamTrace::new(column.iter().map(|&v| [v; OBS_BYTES]).collect())
    }

    #[test]
    fn constant_trace_is_zero() {
        let p = temporal_variation(&trace_from(&[17; 40]), &VariationConfig::default()).unwrap();
        assert!(p.per_byte.iter().all(|&v| v == 0.0));
        assert_eq!(ram_complexity(&p), 0.0);
    }

    #[test]
    fn alternating_trace_hits_cap() {
        let col: Vec<u8> = (0..200).map(|t| if t % 2 == 0 { 0 } else { 255 }).collect();
        let p = temporal_variation(&trace_from(&col), &VariationConfig::default()).unwrap();
        assert!(p.per_byte.iter().all(|&v| v == 3000.0));
        let uncapped = VariationConfig {
            cap: f64::INFINITY,
            boundary: BoundaryMode::Valid,
            ..VariationConfig::default()
        };
        let p = temporal_variation(&trace_from(&col), &uncapped).unwrap();
        // interior: 6 of 10 neighbours differ from the centre value
        assert!((p.per_byte[0] - 23_409.0).abs() < 1e-9);
    }

    #[test]
    fn single_byte_at_cap() {
        let mut per_byte = [0.0; OBS_BYTES];
        per_byte[5] = 3000.0;
        let p = VariationProfile {
            per_byte,
            kernel_size: 11,
            cap: 3000.0,
        };
        assert_eq!(ram_complexity(&p), 23.4375);
    }

    #[test]
    fn errors() {
        let cfg = VariationConfig::default();
        assert!(matches!(temporal_variation(&RamTrace::default(), &cfg), Err(RamError::EmptyTrace)));
        assert!(matches!(temporal_variation(&trace_from(&[1]), &cfg), Err(RamError::TooShort(1))));
        let even = VariationConfig {
            kernel_size: 10,
            ..cfg
        };
        assert!(matches!(temporal_variation(&trace_from(&[1, 2]), &even), Err(RamError::Kernel(10))));
        let valid = VariationConfig {
            boundary: BoundaryMode::Valid,
            ..cfg
        };
        assert!(matches!(
            temporal_variation(&trace_from(&[1; 5]), &valid),
            Err(RamError::NoFullWindow { .. })
        ));
    }

    #[test]
    fn two_row_trace() {
        // Each row's only neighbour is the other row.
        let p = temporal_variation(&trace_from(&[0, 10]), &VariationConfig::default()).unwrap();
        assert_eq!(p.per_byte[0], 100.0);
    }

    #[test]
    fn heatmap_layout() {
        let mut per_byte = [0.0; OBS_BYTES];
        per_byte[0] = 3000.0;
        let p = VariationProfile {
            per_byte,
            kernel_size: 11,
            cap: 3000.0,
        };
        let pgm = heatmap_pgm(&p);
        let lines: Vec<&str> = pgm.lines().collect();
        assert_eq!(&lines[..3], &["P2", "8 16", "255"]);
        assert_eq!(lines.len(), 3 + 16);
        assert_eq!(lines[3], "255 0 0 0 0 0 0 0");
        assert!(lines[4..].iter().all(|l| *l == "0 0 0 0 0 0 0 0"));
        assert_eq!(heatmap_cell(127), (15, 7));
        assert_eq!(heatmap_cell(9), (1, 1));

        let full = VariationProfile {
            per_byte: [3000.0; OBS_BYTES],
            ..p.clone()
        };
        assert!(heatmap_pgm(&full).lines().skip(3).all(|l| l.split(' ').all(|c| c == "255")));

        let back = parse_heatmap_csv(&heatmap_csv(&p)).unwrap();
        assert_eq!(back, p.per_byte);
        assert!(parse_heatmap_csv("1,2\n").is_err());
    }
}
