use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{stream_seed, streams, EnvSettings, EpisodeRecord, TrainError, TrainObserver, TwoPlayerSettings};
use crate::dqn::{epsilon_greedy, EpsilonSchedule, Learner};
use crate::envcore::{clip_reward, Env, GameId, Mode};
use crate::neuralnet::{copy_weights, init_network, NetworkParameters};
use crate::replay::{PrioritizedBuffer, Provenance, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    EpisodeBudget,
    /// The step cap ended the run; the unfinished episode is not logged.
    StepCap,
}

pub struct TwoPlayerOutcome {
    pub records: Vec<EpisodeRecord>,
    pub params: NetworkParameters,
    pub stop: StopReason,
    pub env_steps: u64,
    pub grad_steps: u64,
    /// Transitions pushed per provenance: `[player 1, player 2]`.
    pub pushed: [u64; 2],
    pub wall_seconds: f64,
}

impl TwoPlayerOutcome {
    /// Comment line written at the end of a log cut short by the step cap.
    pub fn note(&self) -> Option<String> {
        match self.stop {
            StopReason::EpisodeBudget => None,
            StopReason::StepCap => Some(format!(
                "truncated: step cap of {} env steps reached after {} episodes",
                self.env_steps,
                self.records.len()
            )),
        }
    }
}

/// Self-play for one seed. Player 1 learns from its own transitions; player
/// 2 acts from a snapshot of player 1 taken every `self_play_sync_period`
/// env steps, on the agent-indicated view. `start` is a transferred
/// network (see [`super::transfer_checkpoint`]); `None` starts from scratch
/// with the network seeded by `seed`.
///
/// Player 1's epsilon decays once per env step after the replay warmup, so
/// it is exactly `epsilon_start` until learning begins.
pub fn train_two_player(
    game: GameId,
    env_settings: &EnvSettings,
    settings: &TwoPlayerSettings,
    seed: u64,
    start: Option<NetworkParameters>,
    observer: &mut dyn TrainObserver,
) -> Result<TwoPlayerOutcome, TrainError> {
    let began = Instant::now();
    let params = match start {
        Some(p) => {
            if p.action_count() != game.action_count() {
                return Err(TrainError::ActionMismatch {
                    game,
                    expected: game.action_count(),
                    got: p.action_count(),
                });
            }
            p
        }
        None => init_network(game.action_count(), seed)?,
    };
    let mut env = Env::new(env_settings.env_config(game, Mode::TwoPlayer, stream_seed(seed, streams::ENV)))?;
    let mut learner = Learner::new(params, settings.learner.learner())?;
    let replay_cfg = settings.learner.replay();
    let mut buffer = PrioritizedBuffer::new(replay_cfg.clone())?;
    let mut agent_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, streams::AGENT));
    let mut opponent_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, streams::OPPONENT));
    let mut replay_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, streams::REPLAY));
    let schedule = EpsilonSchedule::Multiplicative {
        start: settings.epsilon_start,
        floor: settings.epsilon_floor,
        rate: settings.epsilon_decay_rate,
    };
    let horizon = settings
        .step_cap
        .min(settings.episode_budget * env_settings.max_episode_steps as u64);

    let mut opponent = copy_weights(learner.online());
    observer.on_sync(0, &opponent, learner.online());

    let mut records = Vec::new();
    let mut env_step = 0u64;
    let mut decay_steps = 0u64;
    let mut pushed = [0u64; 2];
    let mut stop = StopReason::EpisodeBudget;

    'episodes: for episode in 0..settings.episode_budget {
        let episode_start = Instant::now();
        let views = env.reset();
        let mut obs = [views[0], views[1]];
        let mut totals = [0.0f64; 2];
        let mut raw_p1 = 0.0f64;
        let mut epsilon;
        loop {
            if env_step >= settings.step_cap {
                stop = StopReason::StepCap;
                break 'episodes;
            }
            epsilon = schedule.at(decay_steps);
            let q1 = learner.online().forward(&obs[0].normalized())?;
            let a1 = epsilon_greedy(&q1, epsilon, &mut agent_rng) as u8;
            let q2 = opponent.forward(&obs[1].normalized())?;
            let a2 = epsilon_greedy(&q2, settings.opponent_epsilon, &mut opponent_rng) as u8;

            let step = env.step(&[a1, a2])?;
            let r1 = clip_reward(step.rewards[0]);
            totals[0] += r1 as f64;
            totals[1] += clip_reward(step.rewards[1]) as f64;
            raw_p1 += step.rewards[0] as f64;
            buffer.push(Transition {
                obs: obs[0].0,
                action: a1,
                reward: r1,
                next_obs: step.obs[0].0,
                terminal: step.terminal[0],
                source: Provenance::Player1,
            });
            pushed[0] += 1;

            if learner.ready(&buffer) {
                let beta = replay_cfg.beta_at(env_step, horizon);
                let diag = learner.learn_step(&mut buffer, beta, &mut replay_rng)?;
                observer.on_learn(&diag);
                decay_steps += 1;
            }
            env_step += 1;
            if env_step % settings.self_play_sync_period == 0 {
                opponent = copy_weights(learner.online());
                observer.on_sync(env_step, &opponent, learner.online());
            }
            observer.on_step(env_step, &opponent);

            if step.done() {
                break;
            }
            obs = [step.obs[0], step.obs[1]];
        }
        let record = EpisodeRecord {
            seed,
            episode_index: episode,
            steps_taken: env.steps(),
            total_reward_p1: totals[0],
            total_reward_p2: totals[1],
            raw_score_p1: raw_p1,
            epsilon_at_end: epsilon,
            wall_ms: if settings.log_wall_time {
                episode_start.elapsed().as_millis() as u64
            } else {
                0
            },
        };
        observer.on_episode(&record);
        records.push(record);
    }
    if records.len() as u64 == settings.episode_budget {
        stop = StopReason::EpisodeBudget;
    }

    let grad_steps = learner.grad_steps();
    Ok(TwoPlayerOutcome {
        records,
        params: learner.into_online(),
        stop,
        env_steps: env_step,
        grad_steps,
        pushed,
        wall_seconds: began.elapsed().as_secs_f64(),
    })
}
