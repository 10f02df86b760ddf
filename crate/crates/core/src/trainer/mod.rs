//! Single-player pretraining, transfer with layer freezing, and two-player
//! self-play across a seed matrix.

mod config;
mod eval;
mod log;
mod matrix;
mod pretrain;
mod selfplay;

pub use config::{
    EnvSettings, ExperimentConfig, LearnerSettings, SinglePlayerSettings, TwoPlayerSettings, Variant,
};
pub use eval::{evaluate_greedy, evaluate_random};
pub use log::{
    checkpoint_file_name, episode_log_name, manifest_file_name, read_episode_log, write_episode_log,
    EpisodeRecord, EPISODE_LOG_HEADER,
};
pub use matrix::{config_hash, run_seed_matrix, write_manifest, Manifest, RunStatus, RunSummary};
pub use pretrain::{
    pretrain_checkpoint_name, pretrain_curve_name, pretrain_single_player, write_pretrain_outputs, CurvePoint, PretrainOutcome};
pub use selfplay::{train_two_player, StopReason, TwoPlayerOutcome};

use thiserror::Error;

use crate::dqn::{DqnError, LearnDiagnostics};
use crate::envcore::{EnvError, GameId};
use crate::neuralnet::{copy_weights, NetError, NetworkParameters};
use crate::replay::ReplayError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("checkpoint has {got} actions but {game} needs {expected}")]
    ActionMismatch { game: GameId, expected: usize, got: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Dqn(#[from] DqnError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Log { path: String, message: String },
}

impl TrainError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        TrainError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Hooks into a running training loop. All methods default to no-ops.
pub trait TrainObserver {
    fn on_episode(&mut self, _record: &EpisodeRecord) {}

    /// Called right after the opponent snapshot is refreshed.
    fn on_sync(&mut self, _env_step: u64, _opponent: &NetworkParameters, _player: &NetworkParameters) {}

    /// Called after every two-player env step with the opponent in use.
    fn on_step(&mut self, _env_step: u64, _opponent: &NetworkParameters) {}

    fn on_learn(&mut self, _diagnostics: &LearnDiagnostics) {}
}

impl TrainObserver for () {}

/// Independent RNG stream for `(seed, stream)` via SplitMix64 finalization.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) mod streams {
    pub const ENV: u64 = 1;
    pub const AGENT: u64 = 2;
    pub const OPPONENT: u64 = 3;
    pub const REPLAY: u64 = 4;
    pub const EVAL: u64 = 5;
}

/// Copies pretrained weights for two-player training with the first
/// `freeze_layers` layers frozen. Optimizer state and replay are not part
/// of a checkpoint, so the caller starts both fresh.
pub fn transfer_checkpoint(
    checkpoint: &NetworkParameters,
    freeze_layers: usize,
    game: GameId,
) -> Result<NetworkParameters, TrainError> {
    if checkpoint.action_count() != game.action_count() {
        return Err(TrainError::ActionMismatch {
            game,
            expected: game.action_count(),
            got: checkpoint.action_count(),
        });
    }
    if freeze_layers > 3 {
        return Err(TrainError::Config(format!("cannot freeze {freeze_layers} layers")));
    }
    let mut params = copy_weights(checkpoint);
    params.freeze_first(freeze_layers);
    Ok(params)
}
