use serde::{Deserialize, Serialize};

use crate::dqn::LearnerConfig;
use crate::envcore::{EnvConfig, GameId, Mode};
use crate::replay::ReplayConfig;

use super::TrainError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Scratch,
    Transferred,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Scratch => "scratch",
            Variant::Transferred => "transferred",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scratch" => Ok(Variant::Scratch),
            "transferred" => Ok(Variant::Transferred),
            other => Err(TrainError::Config(format!("unknown variant '{other}'"))),
        }
    }
}

/// Preprocessing shared by both phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSettings {
    pub frame_skip: u32,
    pub sticky_prob: f64,
    pub max_episode_steps: u32,
    pub noop_max: u32,
}

impl Default for EnvSettings {
    fn default() -> Self {
        Self {
            frame_skip: 4,
            sticky_prob: 0.25,
            max_episode_steps: 200,
            noop_max: 0,
        }
    }
}

impl EnvSettings {
    pub fn env_config(&self, game: GameId, mode: Mode, seed: u64) -> EnvConfig {
        EnvConfig {
            game,
            mode,
            seed,
            frame_skip: self.frame_skip,
            sticky_prob: self.sticky_prob,
            max_episode_steps: self.max_episode_steps,
            noop_max: self.noop_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSettings {
    pub discount: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub target_sync_period: u64,
    pub huber_delta: f64,
    pub warmup: usize,
    pub replay_capacity: usize,
    pub alpha: f64,
    pub beta_start: f64,
    pub priority_floor: f64,
}

impl LearnerSettings {
    /// Single-player column: lr 1e-4, batch 32, replay 100,000.
    pub fn single_player() -> Self {
        Self::from_parts(LearnerConfig::single_player(), ReplayConfig::with_capacity(100_000))
    }

    /// Two-player column: lr 1e-3, batch 256, replay 500,000.
    pub fn two_player() -> Self {
        Self::from_parts(LearnerConfig::two_player(), ReplayConfig::with_capacity(500_000))
    }

    fn from_parts(l: LearnerConfig, r: ReplayConfig) -> Self {
        Self {
            discount: l.discount,
            learning_rate: l.learning_rate,
            batch_size: l.batch_size,
            target_sync_period: l.target_sync_period,
            huber_delta: l.huber_delta,
            warmup: l.warmup,
            replay_capacity: r.capacity,
            alpha: r.alpha,
            beta_start: r.beta_start,
            priority_floor: r.priority_floor,
        }
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            discount: self.discount,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            target_sync_period: self.target_sync_period,
            huber_delta: self.huber_delta,
            warmup: self.warmup,
        }
    }

    pub fn replay(&self) -> ReplayConfig {
        ReplayConfig {
            capacity: self.replay_capacity,
            alpha: self.alpha,
            beta_start: self.beta_start,
            priority_floor: self.priority_floor,
        }
    }
}

impl Default for LearnerSettings {
    fn default() -> Self {
        Self::two_player()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinglePlayerSettings {
    pub steps: u64,
    pub seed: u64,
    pub parallel_envs: usize,
    pub epsilon_start: f64,
    pub epsilon_floor: f64,
    /// Fraction of `steps` over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub learner: LearnerSettings,
}

impl Default for SinglePlayerSettings {
    fn default() -> Self {
        Self {
            steps: 300_000,
            seed: 99,
            parallel_envs: 10,
            epsilon_start: 1.0,
            epsilon_floor: 0.05,
            epsilon_decay_fraction: 0.1,
            learner: LearnerSettings::single_player(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPlayerSettings {
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub episode_budget: u64,
    pub step_cap: u64,
    /// Env steps between opponent refreshes.
    pub self_play_sync_period: u64,
    pub opponent_epsilon: f64,
    pub freeze_layers: usize,
    pub epsilon_start: f64,
    pub epsilon_floor: f64,
    pub epsilon_decay_rate: f64,
    /// Fill the per-episode `wall_ms` log column; off keeps logs reproducible.
    pub log_wall_time: bool,
    pub learner: LearnerSettings,
}

impl Default for TwoPlayerSettings {
    fn default() -> Self {
        Self {
            seeds: vec![24, 42, 56, 99, 3000],
            variants: vec![Variant::Scratch, Variant::Transferred],
            episode_budget: 2_000,
            step_cap: 4_000_000,
            self_play_sync_period: 50_000,
            opponent_epsilon: 0.05,
            freeze_layers: 2,
            epsilon_start: 1.0,
            epsilon_floor: 0.05,
            epsilon_decay_rate: 0.9999985,
            log_wall_time: false,
            learner: LearnerSettings::two_player(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameId,
    pub env: EnvSettings,
    pub single_player: SinglePlayerSettings,
    pub two_player: TwoPlayerSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            game: GameId::DuelPong,
            env: EnvSettings::default(),
            single_player: SinglePlayerSettings::default(),
            two_player: TwoPlayerSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_game(game: GameId) -> Self {
        Self {
            game,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let tp = &self.two_player;
        if tp.seeds.is_empty() {
            return Err(TrainError::Config("seed list is empty".into()));
        }
        if tp.episode_budget == 0 || tp.step_cap == 0 || tp.self_play_sync_period == 0 {
            return Err(TrainError::Config(
                "episode budget, step cap and self-play period must be positive".into(),
            ));
        }
        if tp.freeze_layers > 3 {
            return Err(TrainError::Config(format!(
                "freeze_layers {} exceeds the 3 network layers",
                tp.freeze_layers
            )));
        }
        if self.single_player.parallel_envs == 0 {
            return Err(TrainError::Config("parallel_envs must be at least 1".into()));
        }
        for (name, eps) in [
            ("two_player.opponent_epsilon", tp.opponent_epsilon),
            ("two_player.epsilon_start", tp.epsilon_start),
            ("two_player.epsilon_floor", tp.epsilon_floor),
            ("single_player.epsilon_start", self.single_player.epsilon_start),
            ("single_player.epsilon_floor", self.single_player.epsilon_floor),
        ] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(TrainError::Config(format!("{name} = {eps} outside [0, 1]")));
            }
        }
        self.single_player.learner.learner().validate()?;
        tp.learner.learner().validate()?;
        self.env
            .env_config(self.game, Mode::TwoPlayer, 0)
            .validate()?;
        Ok(())
    }
}
