use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{TrainError, Variant};
use crate::envcore::GameId;

pub const EPISODE_LOG_HEADER: &str = "seed,episode,steps,reward_p1,reward_p2,raw_score_p1,epsilon,wall_ms";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    #[serde(rename = "episode")]
    pub episode_index: u64,
    #[serde(rename = "steps")]
    pub steps_taken: u32,
    /// Sum of clipped rewards.
    #[serde(rename = "reward_p1")]
    pub total_reward_p1: f64,
    #[serde(rename = "reward_p2")]
    pub total_reward_p2: f64,
    /// Sum of unclipped rewards.
    #[serde(rename = "raw_score_p1")]
    pub raw_score_p1: f64,
    #[serde(rename = "epsilon")]
    pub epsilon_at_end: f64,
    pub wall_ms: u64,
}

pub fn episode_log_name(game: GameId, variant: Variant, seed: u64) -> String {
    format!("episodes_{game}_{variant}_seed{seed}.csv")
}

pub fn checkpoint_file_name(game: GameId, variant: Variant, seed: u64) -> String {
    format!("checkpoint_{game}_{variant}_seed{seed}.dfck")
}

pub fn manifest_file_name(game: GameId, variant: Variant) -> String {
    format!("manifest_{game}_{variant}.json")
}

/// Writes the CSV log; `note`, if any, becomes a trailing `#` comment.
pub fn write_episode_log(path: &Path, records: &[EpisodeRecord], note: Option<&str>) -> Result<(), TrainError> {
    let io = |e: std::io::Error| TrainError::io(path, e);
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        writer.serialize(r).map_err(|e| TrainError::Log {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    let mut bytes = writer.into_inner().map_err(|e| TrainError::Log {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if records.is_empty() {
        bytes = format!("{EPISODE_LOG_HEADER}\n").into_bytes();
    }
    if let Some(note) = note {
        bytes.extend_from_slice(format!("# {note}\n").as_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(&bytes).map_err(io)?;
    Ok(())
}

pub fn read_episode_log(path: &Path) -> Result<Vec<EpisodeRecord>, TrainError> {
    let err = |message: String| TrainError::Log {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.join(",") != EPISODE_LOG_HEADER {
        return Err(err(format!("unexpected header '{}'", header.join(","))));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| err(e.to_string())))
        .collect()
}
