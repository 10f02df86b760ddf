//! Times a short self-play run for each variant and a short pretraining run.

use std::time::Instant;

use duelforge::envcore::GameId;
use duelforge::neuralnet::init_network;
use duelforge::trainer::{pretrain_single_player, train_two_player, transfer_checkpoint, ExperimentConfig};

fn main() {
    let mut cfg = ExperimentConfig::for_game(GameId::DuelPong);
    cfg.two_player.episode_budget = 60;
    let ckpt = init_network(4, 99).unwrap();
    for transferred in [false, true] {
        let start = transferred.then(|| transfer_checkpoint(&ckpt, 2, GameId::DuelPong).unwrap());
        let t = Instant::now();
        let out = train_two_player(GameId::DuelPong, &cfg.env, &cfg.two_player, 42, start, &mut ()).unwrap();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "two-player transferred={transferred}: {} env steps, {} grad steps, {:.1} steps/s",
            out.env_steps,
            out.grad_steps,
            out.env_steps as f64 / secs
        );
    }
    cfg.single_player.steps = 10_000;
    let t = Instant::now();
    let out = pretrain_single_player(GameId::DuelPong, &cfg.env, &cfg.single_player, 1, &mut ()).unwrap();
    println!(
        "single-player: {} env steps in {:.1}s",
        out.env_steps,
        t.elapsed().as_secs_f64()
    );
}
