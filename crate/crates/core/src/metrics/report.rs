use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stats::{mean, normalized_diff_of_means, pearson, pearson_leave_one_out, running_average, std_dev};
use crate::ramscope::parse_heatmap_csv;
use crate::trainer::{read_episode_log, Manifest, TrainError, Variant};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("invalid report options: {0}")]
    Options(String),
}

impl ReportError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn input(path: &Path, message: impl ToString) -> Self {
        ReportError::Input {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub window: usize,
    /// Episodes from the end of each run pooled for the comparison.
    pub last_episodes: usize,
    pub winsor_level: f64,
    /// 1-based episode numbers for the snapshot table.
    pub snapshots: Vec<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            window: 10,
            last_episodes: 100,
            winsor_level: 0.90,
            snapshots: vec![1, 1000, 2000],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub game: String,
    pub ram_complexity: f64,
    pub norm_diff_means: f64,
}

#[derive(Debug, Default)]
pub struct ReportSummary {
    pub rows: Vec<ComparisonRow>,
    pub pearson_r: Option<f64>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Per-seed reward series of one (game, variant).
type SeedSeries = BTreeMap<u64, Vec<f64>>;

#[derive(Default)]
struct GameData {
    runs: BTreeMap<Variant, SeedSeries>,
}

fn parse_log_name(name: &str) -> Option<(String, Variant, u64)> {
    let stem = name.strip_prefix("episodes_")?.strip_suffix(".csv")?;
    let (rest, seed) = stem.rsplit_once("_seed")?;
    let (game, variant) = rest.rsplit_once('_')?;
    Some((game.to_string(), variant.parse().ok()?, seed.parse().ok()?))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut paths = std::fs::read_dir(dir)
        .map_err(|e| ReportError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| ReportError::io(dir, err)))
        .collect::<Result<Vec<_>, _>>()?;
    paths.sort();
    Ok(paths)
}

fn file_name(path: &Path) -> &str {
    path.file_name().and_then(|n| n.to_str()).unwrap_or("")
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn load_logs(logs_dir: &Path) -> Result<BTreeMap<String, GameData>, ReportError> {
    let mut games: BTreeMap<String, GameData> = BTreeMap::new();
    for path in sorted_entries(logs_dir)? {
        let Some((game, variant, seed)) = parse_log_name(file_name(&path)) else {
            continue;
        };
        let records = read_episode_log(&path).map_err(|e| match e {
            TrainError::Log { message, .. } => ReportError::input(&path, message),
            other => ReportError::input(&path, other),
        })?;
        for r in &records {
            if r.seed != seed {
                return Err(ReportError::input(&path, format!("row seed {} does not match file name", r.seed)));
            }
        }
        let rewards: Vec<f64> = records.iter().map(|r| r.total_reward_p1).collect();
        if let Some(v) = rewards.iter().find(|v| !v.is_finite()) {
            return Err(ReportError::input(&path, format!("non-finite reward {v}")));
        }
        games.entry(game).or_default().runs.entry(variant).or_default().insert(seed, rewards);
    }
    Ok(games)
}

fn load_complexity(profiles_dir: &Path, game: &str) -> Result<Option<f64>, ReportError> {
    let path = profiles_dir.join(format!("{game}.heat.csv"));
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| ReportError::io(&path, e))?;
    let values = parse_heatmap_csv(&text).map_err(|m| ReportError::input(&path, m))?;
    Ok(Some(mean(&values)))
}

fn load_manifests(logs_dir: &Path) -> Result<Vec<Manifest>, ReportError> {
    let mut out = Vec::new();
    for path in sorted_entries(logs_dir)? {
        let name = file_name(&path);
        if name.starts_with("manifest_") && name.ends_with(".json") {
            let text = std::fs::read_to_string(&path).map_err(|e| ReportError::io(&path, e))?;
            out.push(serde_json::from_str(&text).map_err(|e| ReportError::input(&path, e))?);
        }
    }
    Ok(out)
}

/// Seed-averaged smoothed curve: entry `i` averages the smoothed value of
/// every seed that reached episode `i`.
fn seed_curve(series: &SeedSeries, window: usize) -> Vec<f64> {
    let smoothed: Vec<Vec<f64>> = series
        .values()
        .filter(|s| !s.is_empty())
        .map(|s| running_average(s, window).expect("finite, non-empty"))
        .collect();
    let len = smoothed.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| mean(&smoothed.iter().filter_map(|s| s.get(i).copied()).collect::<Vec<_>>()))
        .collect()
}

fn last_pool(series: &SeedSeries, last: usize) -> Vec<f64> {
    series
        .values()
        .flat_map(|s| s[s.len().saturating_sub(last)..].iter().copied())
        .collect()
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, name: &str, text: &str) -> Result<(), ReportError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| ReportError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

/// Reads `episodes_*.csv` logs and `manifest_*.json` files from `logs_dir`
/// and `<game>.heat.csv` profiles from `profiles_dir`, and writes curves,
/// snapshots, wall time and correlation tables into `out_dir`. Output is a
/// pure function of the inputs.
pub fn build_report(
    logs_dir: &Path,
    profiles_dir: &Path,
    out_dir: &Path,
    options: &ReportOptions,
) -> Result<ReportSummary, ReportError> {
    if options.window == 0 || options.last_episodes == 0 {
        return Err(ReportError::Options("window and last_episodes must be positive".into()));
    }
    if !(options.winsor_level > 0.0 && options.winsor_level <= 1.0) {
        return Err(ReportError::Options(format!("winsor level {} outside (0, 1]", options.winsor_level)));
    }
    let games = load_logs(logs_dir)?;
    let manifests = load_manifests(logs_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| ReportError::io(out_dir, e))?;
    let mut writer = Writer {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    let mut summary = ReportSummary::default();
    if games.is_empty() {
        summary.warnings.push(format!("no episode logs found in {}", logs_dir.display()));
    }
    let variants = [Variant::Scratch, Variant::Transferred];

    // curves
    for (game, data) in &games {
        let curves: Vec<Vec<f64>> = variants
            .iter()
            .map(|v| data.runs.get(v).map(|s| seed_curve(s, options.window)).unwrap_or_default())
            .collect();
        let len = curves.iter().map(Vec::len).max().unwrap_or(0);
        let mut text = String::from("episode,scratch,transferred\n");
        for i in 0..len {
            let cells: Vec<String> = curves.iter().map(|c| c.get(i).map(|v| fmt(*v)).unwrap_or_default()).collect();
            let _ = writeln!(text, "{},{}", i + 1, cells.join(","));
        }
        writer.write(&format!("curves_{game}.csv"), &text)?;
    }

    // snapshots
    let mut text = String::from("game,variant,seeds");
    for k in &options.snapshots {
        let _ = write!(text, ",episode_{k}");
    }
    text.push('\n');
    for (game, data) in &games {
        for (variant, series) in &data.runs {
            let smoothed: Vec<Vec<f64>> = series
                .values()
                .filter(|s| !s.is_empty())
                .map(|s| running_average(s, options.window).expect("finite, non-empty"))
                .collect();
            let _ = write!(text, "{game},{variant},{}", series.len());
            for &k in &options.snapshots {
                let at: Vec<f64> = smoothed.iter().filter_map(|s| s.get(k.wrapping_sub(1)).copied()).collect();
                if at.is_empty() {
                    text.push(',');
                } else {
                    let _ = write!(text, ",{}±{}", fmt(mean(&at)), fmt(std_dev(&at)));
                }
            }
            text.push('\n');
        }
    }
    writer.write("snapshots.csv", &text)?;

    // wall time
    let mut text = String::from("game,variant,runs,failures,mean_wall_seconds,total_wall_seconds,mean_env_steps_per_second\n");
    for m in &manifests {
        let ok: Vec<_> = m.runs.iter().filter(|r| r.log_file.is_some()).collect();
        let walls: Vec<f64> = ok.iter().map(|r| r.wall_seconds).collect();
        let rates: Vec<f64> = ok.iter().map(|r| r.env_steps_per_second).collect();
        let avg = |v: &[f64]| if v.is_empty() { String::new() } else { fmt(mean(v)) };
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            m.game,
            m.variant,
            m.runs.len(),
            m.failures,
            avg(&walls),
            fmt(walls.iter().sum()),
            avg(&rates)
        );
    }
    writer.write("walltime.csv", &text)?;

    // comparison and correlation
    let mut text = String::from("game,ram_complexity,norm_diff_means,pearson_r_loo,pearson_r,pearson_r_loo_min,pearson_r_loo_max,note\n");
    let mut lines = Vec::new();
    for (game, data) in &games {
        let missing: Vec<&str> = variants
            .iter()
            .filter(|v| data.runs.get(v).is_none_or(|s| s.values().all(Vec::is_empty)))
            .map(|v| v.name())
            .collect();
        if !missing.is_empty() {
            let note = format!("skipped: no {} logs", missing.join(" or "));
            summary.warnings.push(format!("{game}: {note}"));
            lines.push((game.clone(), None, format!(",,,,,{note}")));
            continue;
        }
        let pool = |v: Variant| last_pool(&data.runs[&v], options.last_episodes);
        let diff = normalized_diff_of_means(&pool(Variant::Transferred), &pool(Variant::Scratch), options.winsor_level)
            .map_err(|e| ReportError::input(logs_dir, format!("{game}: {e}")))?;
        match load_complexity(profiles_dir, game)? {
            Some(c) => {
                summary.rows.push(ComparisonRow {
                    game: game.clone(),
                    ram_complexity: c,
                    norm_diff_means: diff,
                });
                lines.push((game.clone(), Some((c, diff)), String::new()));
            }
            None => {
                let note = "excluded from correlation: no RAM profile".to_string();
                summary.warnings.push(format!("{game}: {note}"));
                lines.push((game.clone(), None, format!("{},,,,,{note}", fmt(diff))));
            }
        }
    }
    let xs: Vec<f64> = summary.rows.iter().map(|r| r.ram_complexity).collect();
    let ys: Vec<f64> = summary.rows.iter().map(|r| r.norm_diff_means).collect();
    let loo = pearson_leave_one_out(&xs, &ys);
    let mut row_index = 0;
    for (game, values, note) in &lines {
        match values {
            Some((c, d)) => {
                let l = loo[row_index].as_ref().map(|r| fmt(*r)).unwrap_or_default();
                row_index += 1;
                let _ = writeln!(text, "{game},{},{},{l},,,,", fmt(*c), fmt(*d));
            }
            None => {
                let _ = writeln!(text, "{game},,{note}");
            }
        }
    }
    summary.pearson_r = pearson(&xs, &ys).ok();
    let loo_ok: Vec<f64> = loo.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    let loo_min = loo_ok.iter().copied().reduce(f64::min);
    let loo_max = loo_ok.iter().copied().reduce(f64::max);
    let note = match summary.pearson_r {
        Some(_) => String::new(),
        None => {
            let w = format!("pearson r undefined over {} comparison rows", xs.len());
            summary.warnings.push(w.clone());
            w
        }
    };
    let _ = writeln!(
        text,
        "all,,,,{},{},{},{note}",
        opt(summary.pearson_r),
        opt(loo_min),
        opt(loo_max)
    );
    writer.write("correlation.csv", &text)?;

    let mut warn_text = String::new();
    for w in &summary.warnings {
        let _ = writeln!(warn_text, "{w}");
    }
    writer.write("warnings.txt", &warn_text)?;
    summary.files = writer.files;
    Ok(summary)
}
