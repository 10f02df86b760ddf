use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    checkpoint_file_name, episode_log_name, manifest_file_name, train_two_player, transfer_checkpoint,
    write_episode_log, ExperimentConfig, StopReason, TrainError, Variant,
};
use crate::neuralnet::{serialize, NetworkParameters};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    /// Stopped by the step cap before the episode budget.
    Truncated,
    Failed { error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub variant: Variant,
    #[serde(flatten)]
    pub status: RunStatus,
    pub episodes: u64,
    pub env_steps: u64,
    pub grad_steps: u64,
    pub wall_seconds: f64,
    pub env_steps_per_second: f64,
    pub trainable_params: usize,
    pub total_params: usize,
    pub log_file: Option<String>,
    pub checkpoint_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub game: String,
    pub variant: Variant,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub runs: Vec<RunSummary>,
    pub total_episodes: u64,
    pub total_env_steps: u64,
    pub total_wall_seconds: f64,
    pub failures: usize,
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), TrainError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| TrainError::Log {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| TrainError::io(path, e))
}

fn run_one(
    config: &ExperimentConfig,
    variant: Variant,
    seed: u64,
    source: Option<&NetworkParameters>,
    out: &Path,
) -> RunSummary {
    let game = config.game;
    let mut summary = RunSummary {
        seed,
        variant,
        status: RunStatus::Completed,
        episodes: 0,
        env_steps: 0,
        grad_steps: 0,
        wall_seconds: 0.0,
        env_steps_per_second: 0.0,
        trainable_params: 0,
        total_params: 0,
        log_file: None,
        checkpoint_file: None,
    };
    let result = (|| -> Result<(), TrainError> {
        let start = match variant {
            Variant::Scratch => None,
            Variant::Transferred => {
                let ckpt = source.ok_or_else(|| TrainError::Config("transferred run needs a checkpoint".into()))?;
                Some(transfer_checkpoint(ckpt, config.two_player.freeze_layers, game)?)
            }
        };
        let outcome = train_two_player(game, &config.env, &config.two_player, seed, start, &mut ())?;
        let log = episode_log_name(game, variant, seed);
        write_episode_log(&out.join(&log), &outcome.records, outcome.note().as_deref())?;
        let ckpt = checkpoint_file_name(game, variant, seed);
        let ckpt_path = out.join(&ckpt);
        std::fs::write(&ckpt_path, serialize(&outcome.params)).map_err(|e| TrainError::io(&ckpt_path, e))?;

        summary.status = match outcome.stop {
            StopReason::EpisodeBudget => RunStatus::Completed,
            StopReason::StepCap => RunStatus::Truncated,
        };
        summary.episodes = outcome.records.len() as u64;
        summary.env_steps = outcome.env_steps;
        summary.grad_steps = outcome.grad_steps;
        summary.wall_seconds = outcome.wall_seconds;
        summary.env_steps_per_second = if outcome.wall_seconds > 0.0 {
            outcome.env_steps as f64 / outcome.wall_seconds
        } else {
            0.0
        };
        summary.trainable_params = outcome.params.trainable_param_count();
        summary.total_params = outcome.params.param_count();
        summary.log_file = Some(log);
        summary.checkpoint_file = Some(ckpt);
        Ok(())
    })();
    if let Err(e) = result {
        summary.status = RunStatus::Failed { error: e.to_string() };
    }
    summary
}

/// Runs every configured (variant, seed) pair, writing one episode log and
/// final checkpoint per run plus one manifest per variant into `out`. A
/// failed run is recorded in its manifest and does not stop the others.
/// Up to `workers` runs proceed at once; each run is independent, so the
/// files do not depend on `workers`.
pub fn run_seed_matrix(
    config: &ExperimentConfig,
    source: Option<&NetworkParameters>,
    out: &Path,
    workers: usize,
) -> Result<Vec<Manifest>, TrainError> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(|e| TrainError::io(out, e))?;
    let tp = &config.two_player;
    let jobs: Vec<(Variant, u64)> = tp
        .variants
        .iter()
        .flat_map(|&v| tp.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let started = unix_ms();
    let next = Mutex::new(0usize);
    let results = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let job = {
                    let mut n = next.lock().expect("job counter");
                    let j = *n;
                    *n += 1;
                    j
                };
                let Some(&(variant, seed)) = jobs.get(job) else {
                    break;
                };
                let summary = run_one(config, variant, seed, source, out);
                results.lock().expect("results")[job] = Some(summary);
            });
        }
    });
    let finished = unix_ms();
    let summaries: Vec<RunSummary> = results
        .into_inner()
        .expect("results")
        .into_iter()
        .map(|s| s.expect("every job ran"))
        .collect();

    let hash = config_hash(config);
    let mut manifests = Vec::new();
    for &variant in &tp.variants {
        let runs: Vec<RunSummary> = summaries.iter().filter(|s| s.variant == variant).cloned().collect();
        let manifest = Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            game: config.game.to_string(),
            variant,
            config_sha256: hash.clone(),
            config: config.clone(),
            started_unix_ms: started,
            finished_unix_ms: finished,
            total_episodes: runs.iter().map(|r| r.episodes).sum(),
            total_env_steps: runs.iter().map(|r| r.env_steps).sum(),
            total_wall_seconds: runs.iter().map(|r| r.wall_seconds).sum(),
            failures: runs.iter().filter(|r| matches!(r.status, RunStatus::Failed { .. })).count(),
            runs,
        };
        write_manifest(&out.join(manifest_file_name(config.game, variant)), &manifest)?;
        manifests.push(manifest);
    }
    Ok(manifests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envcore::GameId;
    use crate::neuralnet::init_network;
    use crate::trainer::{read_episode_log, LearnerSettings};

    fn tiny(game: GameId) -> ExperimentConfig {
        let mut c = ExperimentConfig::for_game(game);
        c.two_player.seeds = vec![24, 42];
        c.two_player.episode_budget = 2;
        c.two_player.learner = LearnerSettings {
            batch_size: 8,
            warmup: 32,
            replay_capacity: 512,
            ..LearnerSettings::two_player()
        };
        c
    }

    #[test]
    fn matrix_writes_logs_and_manifests() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(GameId::CoopCatch);
        let ckpt = init_network(3, 99).unwrap();
        let manifests = run_seed_matrix(&cfg, Some(&ckpt), dir.path(), 2).unwrap();
        assert_eq!(manifests.len(), 2);
        for m in &manifests {
            assert_eq!(m.failures, 0);
            assert_eq!(m.runs.len(), 2);
            for r in &m.runs {
                let log = read_episode_log(&dir.path().join(r.log_file.as_ref().unwrap())).unwrap();
                assert_eq!(log.len(), 2);
            }
        }
        let transferred = &manifests[1].runs[0];
        assert_eq!(transferred.trainable_params, 256 * 3 + 3);
        let text = std::fs::read_to_string(dir.path().join("manifest_coopcatch_transferred.json")).unwrap();
        assert!(text.contains("wall_seconds"));
    }

    #[test]
    fn missing_checkpoint_marks_failure() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(GameId::DuelPong);
        cfg.two_player.seeds = vec![3];
        let manifests = run_seed_matrix(&cfg, None, dir.path(), 1).unwrap();
        assert_eq!(manifests[0].failures, 0);
        assert_eq!(manifests[1].failures, 1);
        assert!(dir.path().join("episodes_duelpong_scratch_seed3.csv").exists());
    }

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.two_player.episode_budget += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
