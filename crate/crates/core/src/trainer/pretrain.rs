use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{stream_seed, streams, EnvSettings, SinglePlayerSettings, TrainError, TrainObserver};
use crate::dqn::{epsilon_greedy, EpsilonSchedule, Learner};
use crate::envcore::{clip_reward, ByteObservation, Env, GameId, Mode, StepResult, OBS_BYTES};
use crate::neuralnet::{init_network, serialize, NetworkParameters};
use crate::replay::{PrioritizedBuffer, Provenance, Transition};

/// One finished single-player episode on the learning curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub env_step: u64,
    pub episode: u64,
    pub env_index: usize,
    pub steps: u32,
    pub reward: f64,
    pub raw_score: f64,
    pub epsilon: f64,
}

pub struct PretrainOutcome {
    pub params: NetworkParameters,
    pub curve: Vec<CurvePoint>,
    pub env_steps: u64,
    pub grad_steps: u64,
}

struct Slot {
    env: Env,
    obs: ByteObservation,
    reward: f64,
    raw: f64,
}

/// Trains a single-player agent with `settings.parallel_envs` environments
/// feeding one learner. Each round the envs act from one batched forward
/// pass, then their transitions are pushed in env order, each followed by
/// one gradient step once the warmup is met. With `workers > 1` env
/// stepping is spread over threads; results do not depend on `workers`.
pub fn pretrain_single_player(
    game: GameId,
    env_settings: &EnvSettings,
    settings: &SinglePlayerSettings,
    workers: usize,
    observer: &mut dyn TrainObserver,
) -> Result<PretrainOutcome, TrainError> {
    let seed = settings.seed;
    let params = init_network(game.action_count(), seed)?;
    if settings.steps == 0 {
        return Ok(PretrainOutcome {
            params,
            curve: Vec::new(),
            env_steps: 0,
            grad_steps: 0,
        });
    }
    let n = settings.parallel_envs.max(1);
    let env_root = stream_seed(seed, streams::ENV);
    let mut slots = (0..n)
        .map(|i| {
            let mut env = Env::new(env_settings.env_config(game, Mode::SinglePlayer, stream_seed(env_root, i as u64)))?;
            let obs = env.reset()[0];
            Ok(Slot {
                env,
                obs,
                reward: 0.0,
                raw: 0.0,
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;

    let mut learner = Learner::new(params, settings.learner.learner())?;
    let replay_cfg = settings.learner.replay();
    let mut buffer = PrioritizedBuffer::new(replay_cfg.clone())?;
    let mut agent_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, streams::AGENT));
    let mut replay_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, streams::REPLAY));
    let decay_steps = ((settings.steps as f64 * settings.epsilon_decay_fraction).round() as u64).max(1);
    let schedule = EpsilonSchedule::Linear {
        start: settings.epsilon_start,
        floor: settings.epsilon_floor,
        decay_steps,
    };

    let a = game.action_count();
    let mut inputs = vec![0.0f32; n * OBS_BYTES];
    let mut curve = Vec::new();
    let mut env_step = 0u64;
    while env_step < settings.steps {
        let active = n.min((settings.steps - env_step) as usize);
        for (i, slot) in slots[..active].iter().enumerate() {
            inputs[i * OBS_BYTES..(i + 1) * OBS_BYTES].copy_from_slice(&slot.obs.normalized());
        }
        let q = learner.online().forward_batch(&inputs[..active * OBS_BYTES], active);
        let epsilons: Vec<f64> = (0..active).map(|i| schedule.at(env_step + i as u64)).collect();
        let actions: Vec<u8> = (0..active)
            .map(|i| epsilon_greedy(q.output_row(i), epsilons[i], &mut agent_rng) as u8)
            .collect();
        debug_assert!(actions.iter().all(|&x| (x as usize) < a));

        let results = step_all(&mut slots[..active], &actions, workers)?;

        for (i, step) in results.into_iter().enumerate() {
            let slot = &mut slots[i];
            let raw = step.rewards[0];
            let clipped = clip_reward(raw);
            slot.reward += clipped as f64;
            slot.raw += raw as f64;
            buffer.push(Transition {
                obs: slot.obs.0,
                action: actions[i],
                reward: clipped,
                next_obs: step.obs[0].0,
                // truncation is not a true terminal; bootstrap through it
                terminal: step.terminal[0],
                source: Provenance::Player1,
            });
            let global = env_step + i as u64;
            if step.done() {
                curve.push(CurvePoint {
                    env_step: global + 1,
                    episode: curve.len() as u64,
                    env_index: i,
                    steps: slot.env.steps(),
                    reward: slot.reward,
                    raw_score: slot.raw,
                    epsilon: epsilons[i],
                });
                slot.obs = slot.env.reset()[0];
                slot.reward = 0.0;
                slot.raw = 0.0;
            } else {
                slot.obs = step.obs[0];
            }
            if learner.ready(&buffer) {
                let beta = replay_cfg.beta_at(global, settings.steps);
                let diag = learner.learn_step(&mut buffer, beta, &mut replay_rng)?;
                observer.on_learn(&diag);
            }
        }
        env_step += active as u64;
    }
    let grad_steps = learner.grad_steps();
    Ok(PretrainOutcome {
        params: learner.into_online(),
        curve,
        env_steps: env_step,
        grad_steps,
    })
}

fn step_all(slots: &mut [Slot], actions: &[u8], workers: usize) -> Result<Vec<StepResult>, TrainError> {
    let workers = workers.clamp(1, slots.len().max(1));
    if workers == 1 {
        return slots
            .iter_mut()
            .zip(actions)
            .map(|(s, &a)| s.env.step(&[a]).map_err(TrainError::from))
            .collect();
    }
    let chunk = slots.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = slots
            .chunks_mut(chunk)
            .zip(actions.chunks(chunk))
            .map(|(ss, aa)| {
                scope.spawn(move || {
                    ss.iter_mut()
                        .zip(aa)
                        .map(|(s, &a)| s.env.step(&[a]))
                        .collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        let mut out = Vec::new();
        for h in handles {
            out.extend(h.join().expect("env worker panicked")?);
        }
        Ok(out)
    })
}

pub fn pretrain_checkpoint_name(game: GameId, seed: u64) -> String {
    format!("pretrain_{game}_seed{seed}.dfck")
}

pub fn pretrain_curve_name(game: GameId, seed: u64) -> String {
    format!("pretrain_curve_{game}_seed{seed}.csv")
}

/// Writes the checkpoint and learning curve into `dir`; returns the
/// checkpoint path.
pub fn write_pretrain_outputs(
    outcome: &PretrainOutcome,
    dir: &Path,
    game: GameId,
    seed: u64,
) -> Result<PathBuf, TrainError> {
    std::fs::create_dir_all(dir).map_err(|e| TrainError::io(dir, e))?;
    let ckpt = dir.join(pretrain_checkpoint_name(game, seed));
    std::fs::write(&ckpt, serialize(&outcome.params)).map_err(|e| TrainError::io(&ckpt, e))?;
    let curve_path = dir.join(pretrain_curve_name(game, seed));
    let log_err = |e: csv::Error| TrainError::Log {
        path: curve_path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&curve_path).map_err(log_err)?;
    if outcome.curve.is_empty() {
        w.write_record(["env_step", "episode", "env_index", "steps", "reward", "raw_score", "epsilon"])
            .map_err(log_err)?;
    }
    for p in &outcome.curve {
        w.serialize(p).map_err(log_err)?;
    }
    w.flush().map_err(|e| TrainError::io(&curve_path, e))?;
    Ok(ckpt)
}
