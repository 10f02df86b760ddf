//! Cooperative catching game.
//!
//! Byte layout: `[0]` p1 x, `[1]` p2 x, `[2]` object x, `[3]` object row,
//! `[4]` score mod 256, `[5]` misses, `[6]` tick mod 256, `[7..]` zero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AnnotationMap, ByteObservation, Game, Mode, Tick};

#[allow(dead_code)] // action 0 is implicit in the match fallbacks
pub const NOOP: u8 = 0;
pub const LEFT: u8 = 1;
pub const RIGHT: u8 = 2;

pub const FIELD_WIDTH: i32 = 160;
pub const CATCHER_WIDTH: i32 = 16;
pub const CATCHER_MAX_X: i32 = FIELD_WIDTH - CATCHER_WIDTH;
pub const CATCHER_SPEED: i32 = 4;
pub const PARTNER_SPEED: i32 = 3;
pub const FALL_SPEED: i32 = 2;
pub const CATCH_ROW: i32 = 184;
pub const MAX_MISSES: u8 = 3;
const START_X: [i32; 2] = [40, 104];

#[derive(Clone, Debug)]
pub struct CoopCatch {
    mode: Mode,
    catcher_x: [i32; 2],
    object: (i32, i32),
    score: u32,
    misses: u8,
    tick: u32,
}

impl CoopCatch {
    pub const ACTIONS: usize = 3;

    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            catcher_x: START_X,
            object: (FIELD_WIDTH / 2, 0),
            score: 0,
            misses: 0,
            tick: 0,
        }
    }

    pub fn annotation() -> AnnotationMap {
        AnnotationMap::new(vec![(0, 1)]).expect("static map")
    }

    fn spawn(&mut self, rng: &mut ChaCha8Rng) {
        self.object = (rng.gen_range(0..FIELD_WIDTH), 0);
    }

    fn partner_delta(&self) -> i32 {
        let diff = self.object.0 - (self.catcher_x[1] + CATCHER_WIDTH / 2);
        if diff >= PARTNER_SPEED {
            PARTNER_SPEED
        } else if diff <= -PARTNER_SPEED {
            -PARTNER_SPEED
        } else {
            0
        }
    }

    fn caught(&self) -> bool {
        self.catcher_x
            .iter()
            .any(|&cx| (cx..cx + CATCHER_WIDTH).contains(&self.object.0))
    }
}

fn catcher_delta(action: u8) -> i32 {
    match action {
        LEFT => -CATCHER_SPEED,
        RIGHT => CATCHER_SPEED,
        _ => 0,
    }
}

impl Game for CoopCatch {
    fn action_count(&self) -> usize {
        Self::ACTIONS
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) {
        *self = Self::new(self.mode);
        self.spawn(rng);
    }

    fn tick(&mut self, actions: [u8; 2], rng: &mut ChaCha8Rng) -> Tick {
        let mut out = Tick::default();
        let deltas = match self.mode {
            Mode::TwoPlayer => [catcher_delta(actions[0]), catcher_delta(actions[1])],
            Mode::SinglePlayer => [catcher_delta(actions[0]), self.partner_delta()],
        };
        for p in 0..2 {
            self.catcher_x[p] = (self.catcher_x[p] + deltas[p]).clamp(0, CATCHER_MAX_X);
        }
        self.tick = self.tick.wrapping_add(1);
        self.object.1 += FALL_SPEED;
        if self.object.1 >= CATCH_ROW {
            self.object.1 = CATCH_ROW;
            if self.caught() {
                self.score += 1;
                out.rewards = [1.0, 1.0];
            } else {
                self.misses += 1;
                out.terminal = self.misses >= MAX_MISSES;
            }
            if !out.terminal {
                self.spawn(rng);
            }
        }
        out
    }

    fn observe(&self) -> ByteObservation {
        let mut obs = ByteObservation::zeros();
        let b = &mut obs.0;
        b[0] = self.catcher_x[0] as u8;
        b[1] = self.catcher_x[1] as u8;
        b[2] = self.object.0 as u8;
        b[3] = self.object.1 as u8;
        b[4] = (self.score % 256) as u8;
        b[5] = self.misses;
        b[6] = (self.tick % 256) as u8;
        obs
    }
}
