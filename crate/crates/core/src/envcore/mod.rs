//! Byte-state game environments with Atari-style preprocessing.
//!
//! Each game exposes a 128-byte observation. [`Env`] wraps a game with
//! sticky actions, frame skipping, an episode step cap, no-op resets and
//! agent indication (player 2 sees the state with player-specific bytes
//! swapped so that it looks like player 1).

mod annotation;
mod coop_catch;
mod duel_pong;
mod trace;

pub use annotation::AnnotationMap;
pub use coop_catch::CoopCatch;
pub use duel_pong::DuelPong;
pub use trace::{random_rollout, RamTrace, TRACE_MAGIC, TRACE_VERSION};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OBS_BYTES: usize = 128;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode is over; call reset before stepping")]
    EpisodeOver,
    #[error("expected {expected} actions, got {got}")]
    ActionArity { expected: usize, got: usize },
    #[error("action {action} outside 0..{count}")]
    InvalidAction { action: u8, count: usize },
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error("invalid annotation map: {0}")]
    Annotation(String),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ByteObservation(pub [u8; OBS_BYTES]);

impl ByteObservation {
    pub fn zeros() -> Self {
        Self([0; OBS_BYTES])
    }

    pub fn bytes(&self) -> &[u8; OBS_BYTES] {
        &self.0
    }

    /// Each byte scaled to [0, 1].
    pub fn normalized(&self) -> [f32; OBS_BYTES] {
        let mut out = [0.0; OBS_BYTES];
        normalize_into(&self.0, &mut out);
        out
    }
}

impl fmt::Debug for ByteObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ByteObservation({:?}..)", &self.0[..16])
    }
}

impl std::ops::Index<usize> for ByteObservation {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

pub fn normalize_into(bytes: &[u8], out: &mut [f32]) {
    for (o, &b) in out.iter_mut().zip(bytes) {
        *o = b as f32 / 255.0;
    }
}

pub fn clip_reward(reward: f32) -> f32 {
    reward.clamp(-1.0, 1.0)
}

pub fn clip_and_normalize(reward: f32, obs: &ByteObservation) -> (f32, [f32; OBS_BYTES]) {
    (clip_reward(reward), obs.normalized())
}

/// Swaps every annotated byte pair. Only player 2's view goes through this.
pub fn reconstruct_for_player2(obs: &ByteObservation, map: &AnnotationMap) -> ByteObservation {
    let mut out = *obs;
    for &(i, j) in map.pairs() {
        out.0.swap(i as usize, j as usize);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameId {
    DuelPong,
    CoopCatch,
}

impl GameId {
    pub const ALL: [GameId; 2] = [GameId::DuelPong, GameId::CoopCatch];

    pub fn action_count(self) -> usize {
        match self {
            GameId::DuelPong => DuelPong::ACTIONS,
            GameId::CoopCatch => CoopCatch::ACTIONS,
        }
    }

    pub fn annotation(self) -> AnnotationMap {
        match self {
            GameId::DuelPong => DuelPong::annotation(),
            GameId::CoopCatch => CoopCatch::annotation(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GameId::DuelPong => "duelpong",
            GameId::CoopCatch => "coopcatch",
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameId {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "duelpong" => Ok(GameId::DuelPong),
            "coopcatch" => Ok(GameId::CoopCatch),
            other => Err(EnvError::Config(format!("unknown game '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    SinglePlayer,
    TwoPlayer,
}

impl Mode {
    pub fn controlled_players(self) -> usize {
        match self {
            Mode::SinglePlayer => 1,
            Mode::TwoPlayer => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub game: GameId,
    pub mode: Mode,
    pub seed: u64,
    pub frame_skip: u32,
    pub sticky_prob: f64,
    pub max_episode_steps: u32,
    pub noop_max: u32,
}

impl EnvConfig {
    pub fn new(game: GameId, mode: Mode, seed: u64) -> Self {
        Self {
            game,
            mode,
            seed,
            frame_skip: 4,
            sticky_prob: 0.25,
            max_episode_steps: 200,
            noop_max: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.frame_skip < 1 {
            return Err(EnvError::Config("frame_skip must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.sticky_prob) {
            return Err(EnvError::Config(format!(
                "sticky_prob {} outside [0, 1)",
                self.sticky_prob
            )));
        }
        if self.max_episode_steps < 1 {
            return Err(EnvError::Config("max_episode_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one internal game tick.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tick {
    pub rewards: [f32; 2],
    pub terminal: bool,
}

/// A two-slot byte-state game. In single-player mode the game drives
/// player 2 itself and ignores `actions[1]`.
pub trait Game: Send {
    fn action_count(&self) -> usize;
    fn reset(&mut self, rng: &mut ChaCha8Rng);
    fn tick(&mut self, actions: [u8; 2], rng: &mut ChaCha8Rng) -> Tick;
    fn observe(&self) -> ByteObservation;
}

fn make_game(game: GameId, mode: Mode) -> Box<dyn Game> {
    match game {
        GameId::DuelPong => Box::new(DuelPong::new(mode)),
        GameId::CoopCatch => Box::new(CoopCatch::new(mode)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    /// One view per controlled player; player 2's view is agent-indicated.
    pub obs: Vec<ByteObservation>,
    /// Pre-clip rewards accumulated over the skipped frames.
    pub rewards: Vec<f32>,
    pub terminal: Vec<bool>,
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.truncated || self.terminal.iter().any(|&t| t)
    }
}

pub struct Env {
    config: EnvConfig,
    game: Box<dyn Game>,
    rng: ChaCha8Rng,
    indication: AnnotationMap,
    prev_actions: [u8; 2],
    steps: u32,
    done: bool,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let indication = config.game.annotation();
        Ok(Self {
            game: make_game(config.game, config.mode),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            indication,
            prev_actions: [0; 2],
            steps: 0,
            done: true,
            config,
        })
    }

    /// Replaces the game's built-in annotation map.
    pub fn with_annotation(mut self, map: AnnotationMap) -> Self {
        self.indication = map;
        self
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn annotation(&self) -> &AnnotationMap {
        &self.indication
    }

    pub fn players(&self) -> usize {
        self.config.mode.controlled_players()
    }

    pub fn action_count(&self) -> usize {
        self.game.action_count()
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn raw_observation(&self) -> ByteObservation {
        self.game.observe()
    }

    fn views(&self) -> Vec<ByteObservation> {
        let raw = self.game.observe();
        match self.config.mode {
            Mode::SinglePlayer => vec![raw],
            Mode::TwoPlayer => vec![raw, reconstruct_for_player2(&raw, &self.indication)],
        }
    }

    pub fn reset(&mut self) -> Vec<ByteObservation> {
        loop {
            self.game.reset(&mut self.rng);
            let noops = if self.config.noop_max == 0 {
                0
            } else {
                self.rng.gen_range(0..=self.config.noop_max)
            };
            let mut ended = false;
            for _ in 0..noops {
                if self.game.tick([0, 0], &mut self.rng).terminal {
                    ended = true;
                    break;
                }
            }
            if !ended {
                break;
            }
        }
        self.prev_actions = [0; 2];
        self.steps = 0;
        self.done = false;
        self.views()
    }

    pub fn step(&mut self, actions: &[u8]) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let players = self.players();
        if actions.len() != players {
            return Err(EnvError::ActionArity {
                expected: players,
                got: actions.len(),
            });
        }
        let count = self.action_count();
        if let Some(&action) = actions.iter().find(|&&a| a as usize >= count) {
            return Err(EnvError::InvalidAction { action, count });
        }

        let mut effective = [0u8; 2];
        for p in 0..players {
            let sticky = self.rng.gen::<f64>() < self.config.sticky_prob;
            effective[p] = if sticky { self.prev_actions[p] } else { actions[p] };
        }
        self.prev_actions = effective;

        let mut rewards = [0.0f32; 2];
        let mut terminal = false;
        for _ in 0..self.config.frame_skip {
            let tick = self.game.tick(effective, &mut self.rng);
            rewards[0] += tick.rewards[0];
            rewards[1] += tick.rewards[1];
            if tick.terminal {
                terminal = true;
                break;
            }
        }
        self.steps += 1;
        let truncated = !terminal && self.steps >= self.config.max_episode_steps;
        self.done = terminal || truncated;
        Ok(StepResult {
            obs: self.views(),
            rewards: rewards[..players].to_vec(),
            terminal: vec![terminal; players],
            truncated,
        })
    }
}
