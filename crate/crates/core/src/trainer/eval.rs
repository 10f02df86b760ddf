use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{stream_seed, streams, EnvSettings, TrainError};
use crate::dqn::argmax;
use crate::envcore::{Env, GameId, Mode};
use crate::neuralnet::NetworkParameters;

/// Raw (unclipped) single-player score of each of `episodes` greedy episodes.
pub fn evaluate_greedy(
    params: &NetworkParameters,
    game: GameId,
    env: &EnvSettings,
    episodes: usize,
    seed: u64,
) -> Result<Vec<f64>, TrainError> {
    if params.action_count() != game.action_count() {
        return Err(TrainError::ActionMismatch {
            game,
            expected: game.action_count(),
            got: params.action_count(),
        });
    }
    run_episodes(game, env, episodes, seed, |obs, _| {
        let q = params.forward(obs).expect("observation length is fixed");
        argmax(&q)
    })
}

/// Same protocol as [`evaluate_greedy`] with uniform random actions.
pub fn evaluate_random(game: GameId, env: &EnvSettings, episodes: usize, seed: u64) -> Result<Vec<f64>, TrainError> {
    let actions = game.action_count();
    run_episodes(game, env, episodes, seed, |_, rng| rng.gen_range(0..actions))
}

fn run_episodes(
    game: GameId,
    settings: &EnvSettings,
    episodes: usize,
    seed: u64,
    mut policy: impl FnMut(&[f32], &mut ChaCha8Rng) -> usize,
) -> Result<Vec<f64>, TrainError> {
    let mut env = Env::new(settings.env_config(game, Mode::SinglePlayer, stream_seed(seed, streams::EVAL)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, streams::AGENT));
    let mut scores = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset()[0].normalized();
        let mut score = 0.0;
        loop {
            let action = policy(&obs, &mut rng) as u8;
            let step = env.step(&[action])?;
            score += step.rewards[0] as f64;
            if step.done() {
                break;
            }
            obs = step.obs[0].normalized();
        }
        scores.push(score);
    }
    Ok(scores)
}
