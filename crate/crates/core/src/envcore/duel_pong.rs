//! Competitive paddle game.
//!
//! Byte layout: `[0]` p1 y, `[1]` p1 score, `[2]` p1 last action, `[3]` p2 y,
//! `[4]` p2 score, `[5]` p2 last action, `[6]` ball x, `[7]` ball y,
//! `[8]` vx + 128, `[9]` vy + 128, `[10]` tick mod 256, `[11]` serve flag,
//! `[12..]` zero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AnnotationMap, ByteObservation, Game, Mode, Tick};

pub const NOOP: u8 = 0;
pub const UP: u8 = 1;
pub const DOWN: u8 = 2;
pub const FIRE: u8 = 3;

pub const FIELD_WIDTH: i32 = 160;
pub const FIELD_HEIGHT: i32 = 192;
pub const PADDLE_HEIGHT: i32 = 24;
pub const PADDLE_MAX_Y: i32 = FIELD_HEIGHT - PADDLE_HEIGHT;
pub const PADDLE_COLUMNS: [i32; 2] = [8, 151];
pub const PADDLE_SPEED: i32 = 4;
pub const TRACKER_SPEED: i32 = 3;
pub const SERVE_HOLD_TICKS: u32 = 20;
pub const WINNING_SCORE: u8 = 5;
pub const CENTER: (i32, i32) = (FIELD_WIDTH / 2, FIELD_HEIGHT / 2);
const START_Y: i32 = PADDLE_MAX_Y / 2;
const SERVE_VY: [i32; 4] = [-2, -1, 1, 2];

#[derive(Clone, Debug)]
pub struct DuelPong {
    mode: Mode,
    paddle_y: [i32; 2],
    score: [u8; 2],
    last_action: [u8; 2],
    ball: (i32, i32),
    velocity: (i32, i32),
    tick: u32,
    /// Player holding the serve, with ticks waited so far.
    serving: Option<(usize, u32)>,
}

impl DuelPong {
    pub const ACTIONS: usize = 4;

    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            paddle_y: [START_Y; 2],
            score: [0; 2],
            last_action: [NOOP; 2],
            ball: CENTER,
            velocity: (0, 0),
            tick: 0,
            serving: Some((0, 0)),
        }
    }

    pub fn annotation() -> AnnotationMap {
        AnnotationMap::new(vec![(0, 3), (1, 4), (2, 5)]).expect("static map")
    }

    /// Scripted player 2: reacts only once the ball is heading its way and
    /// inside its half, then moves its centre toward the ball row.
    fn tracker_action(&self) -> (i32, u8) {
        let approaching = self.serving.is_none() && self.velocity.0 > 0 && self.ball.0 >= CENTER.0;
        if !approaching {
            return (0, NOOP);
        }
        let diff = self.ball.1 - (self.paddle_y[1] + PADDLE_HEIGHT / 2);
        if diff >= TRACKER_SPEED {
            (TRACKER_SPEED, DOWN)
        } else if diff <= -TRACKER_SPEED {
            (-TRACKER_SPEED, UP)
        } else {
            (0, NOOP)
        }
    }

    fn hits_paddle(&self, player: usize, y: i32) -> Option<i32> {
        let offset = y - self.paddle_y[player];
        (0..PADDLE_HEIGHT).contains(&offset).then_some(offset)
    }

    fn rebound_vy(&self, offset: i32) -> i32 {
        match offset * 3 / PADDLE_HEIGHT {
            0 => -2,
            1 => {
                if self.velocity.1 < 0 {
                    -1
                } else {
                    1
                }
            }
            _ => 2,
        }
    }

    fn start_serve(&mut self, server: usize) {
        self.ball = CENTER;
        self.velocity = (0, 0);
        self.serving = Some((server, 0));
    }
}

fn paddle_delta(action: u8) -> i32 {
    match action {
        UP => -PADDLE_SPEED,
        DOWN => PADDLE_SPEED,
        _ => 0,
    }
}

impl Game for DuelPong {
    fn action_count(&self) -> usize {
        Self::ACTIONS
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) {
        *self = Self::new(self.mode);
        let server = rng.gen_range(0..2);
        self.start_serve(server);
    }

    fn tick(&mut self, actions: [u8; 2], rng: &mut ChaCha8Rng) -> Tick {
        let mut out = Tick::default();
        let (p2_delta, p2_action) = match self.mode {
            Mode::TwoPlayer => (paddle_delta(actions[1]), actions[1]),
            Mode::SinglePlayer => self.tracker_action(),
        };
        let deltas = [paddle_delta(actions[0]), p2_delta];
        self.last_action = [actions[0], p2_action];
        for p in 0..2 {
            self.paddle_y[p] = (self.paddle_y[p] + deltas[p]).clamp(0, PADDLE_MAX_Y);
        }
        self.tick = self.tick.wrapping_add(1);

        if let Some((server, waited)) = self.serving {
            let waited = waited + 1;
            if self.last_action[server] == FIRE || waited >= SERVE_HOLD_TICKS {
                let vx = if server == 0 { 2 } else { -2 };
                self.velocity = (vx, SERVE_VY[rng.gen_range(0..SERVE_VY.len())]);
                self.serving = None;
            } else {
                self.serving = Some((server, waited));
            }
            return out;
        }

        let (old_x, _) = self.ball;
        let (mut x, mut y) = (self.ball.0 + self.velocity.0, self.ball.1 + self.velocity.1);
        if y < 0 {
            y = -y;
            self.velocity.1 = -self.velocity.1;
        } else if y > FIELD_HEIGHT - 1 {
            y = 2 * (FIELD_HEIGHT - 1) - y;
            self.velocity.1 = -self.velocity.1;
        }
        let [left, right] = PADDLE_COLUMNS;
        if self.velocity.0 < 0 && old_x > left && x <= left {
            if let Some(offset) = self.hits_paddle(0, y) {
                self.velocity = (2, self.rebound_vy(offset));
                x = 2 * left - x;
            }
        } else if self.velocity.0 > 0 && old_x < right && x >= right {
            if let Some(offset) = self.hits_paddle(1, y) {
                self.velocity = (-2, self.rebound_vy(offset));
                x = 2 * right - x;
            }
        }
        self.ball = (x, y);

        let scorer = if x < 0 {
            Some(1)
        } else if x > FIELD_WIDTH - 1 {
            Some(0)
        } else {
            None
        };
        if let Some(scorer) = scorer {
            self.score[scorer] += 1;
            out.rewards[scorer] = 1.0;
            out.rewards[1 - scorer] = -1.0;
            self.start_serve(1 - scorer);
            out.terminal = self.score[scorer] >= WINNING_SCORE;
        }
        out
    }

    fn observe(&self) -> ByteObservation {
        let mut obs = ByteObservation::zeros();
        let b = &mut obs.0;
        b[0] = self.paddle_y[0] as u8;
        b[1] = self.score[0];
        b[2] = self.last_action[0];
        b[3] = self.paddle_y[1] as u8;
        b[4] = self.score[1];
        b[5] = self.last_action[1];
        b[6] = self.ball.0 as u8;
        b[7] = self.ball.1 as u8;
        b[8] = (self.velocity.0 + 128) as u8;
        b[9] = (self.velocity.1 + 128) as u8;
        b[10] = (self.tick % 256) as u8;
        b[11] = self.serving.is_some() as u8;
        obs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn start_state_layout() {
        let mut g = DuelPong::new(Mode::TwoPlayer);
        g.reset(&mut rng());
        let obs = g.observe();
        assert_eq!((obs[6], obs[7]), (80, 96));
        assert_eq!((obs[0], obs[3]), (84, 84));
        assert_eq!(obs[11], 1);
        assert!(obs.0[12..].iter().all(|&b| b == 0));
    }

    #[test]
    fn up_moves_four_and_clamps() {
        let mut g = DuelPong::new(Mode::TwoPlayer);
        let mut r = rng();
        g.reset(&mut r);
        g.tick([UP, NOOP], &mut r);
        assert_eq!(g.observe()[0], 80);
        assert_eq!(g.observe()[2], UP);
        for _ in 0..40 {
            g.tick([UP, DOWN], &mut r);
        }
        assert_eq!(g.observe()[0], 0);
        assert_eq!(g.observe()[3], 168);
    }

    #[test]
    fn fire_serves_immediately() {
        let mut g = DuelPong::new(Mode::TwoPlayer);
        let mut r = rng();
        g.start_serve(1);
        g.tick([NOOP, FIRE], &mut r);
        assert!(g.serving.is_none());
        assert_eq!(g.velocity.0, -2);
    }

    #[test]
    fn serve_released_after_hold() {
        let mut g = DuelPong::new(Mode::TwoPlayer);
        let mut r = rng();
        g.start_serve(0);
        for _ in 0..SERVE_HOLD_TICKS - 1 {
            g.tick([NOOP, NOOP], &mut r);
            assert!(g.serving.is_some());
        }
        g.tick([NOOP, NOOP], &mut r);
        assert_eq!(g.velocity.0, 2);
    }

    #[test]
    fn paddle_thirds_set_vertical_speed() {
        let mut g = DuelPong::new(Mode::TwoPlayer);
        let mut r = rng();
        for (offset, vy_in, expected) in [(0, 1, -2), (10, 2, 1), (10, -2, -1), (20, -1, 2)] {
            g.serving = None;
            g.paddle_y = [100, 100];
            g.ball = (10, 100 + offset - vy_in);
            g.velocity = (-2, vy_in);
            g.tick([NOOP, NOOP], &mut r);
            assert_eq!(g.velocity, (2, expected), "offset {offset}");
            assert_eq!(g.ball.0, 8);
        }
    }

    #[test]
    fn miss_scores_for_opponent_and_opponent_serve() {
        let mut g = DuelPong::new(Mode::TwoPlayer);
        let mut r = rng();
        g.serving = None;
        g.paddle_y = [0, 0];
        g.ball = (1, 150);
        g.velocity = (-2, 1);
        let t = g.tick([NOOP, NOOP], &mut r);
        assert_eq!(t.rewards, [-1.0, 1.0]);
        assert_eq!(g.score, [0, 1]);
        assert_eq!(g.serving, Some((0, 0)));
        assert_eq!(g.ball, CENTER);
    }

    #[test]
    fn fifth_point_terminates() {
        let mut g = DuelPong::new(Mode::TwoPlayer);
        let mut r = rng();
        g.score = [4, 2];
        g.serving = None;
        g.paddle_y = [0, 0];
        g.ball = (158, 150);
        g.velocity = (2, 1);
        let t = g.tick([NOOP, NOOP], &mut r);
        assert!(t.terminal);
        assert_eq!(t.rewards, [1.0, -1.0]);
    }

    #[test]
    fn walls_reflect() {
        let mut g = DuelPong::new(Mode::TwoPlayer);
        let mut r = rng();
        g.serving = None;
        g.ball = (80, 1);
        g.velocity = (2, -2);
        g.tick([NOOP, NOOP], &mut r);
        assert_eq!(g.ball, (82, 1));
        assert_eq!(g.velocity.1, 2);
    }

    #[test]
    fn tracker_waits_then_follows() {
        let mut g = DuelPong::new(Mode::SinglePlayer);
        let mut r = rng();
        g.serving = None;
        g.paddle_y = [84, 84];
        g.ball = (40, 20);
        g.velocity = (2, 0);
        g.tick([NOOP, DOWN], &mut r);
        assert_eq!(g.paddle_y[1], 84, "ignores actions[1] and waits");
        g.ball = (100, 20);
        g.tick([NOOP, NOOP], &mut r);
        assert_eq!(g.paddle_y[1], 81);
        assert_eq!(g.observe()[5], UP);
    }
}
