//! Greedy single-player evaluation of a checkpoint against the random baseline.
//!
//! cargo run --release --example evaluate -- <checkpoint> <game> [episodes]

use duelforge::envcore::GameId;
use duelforge::metrics::{mean, std_dev};
use duelforge::neuralnet::deserialize;
use duelforge::trainer::{evaluate_greedy, evaluate_random, EnvSettings};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 3 {
        eprintln!("usage: evaluate <checkpoint> <game> [episodes]");
        std::process::exit(2);
    }
    let params = deserialize(&std::fs::read(&args[1]).expect("read checkpoint")).expect("valid checkpoint");
    let game: GameId = args[2].parse().expect("game");
    let episodes = args.get(3).map_or(100, |s| s.parse().expect("episodes"));
    let env = EnvSettings::default();
    let greedy = evaluate_greedy(&params, game, &env, episodes, 1).expect("greedy evaluation");
    let random = evaluate_random(game, &env, episodes, 1).expect("random evaluation");
    println!("greedy {:.3} ± {:.3}", mean(&greedy), std_dev(&greedy));
    println!("random {:.3} ± {:.3}", mean(&random), std_dev(&random));
}
