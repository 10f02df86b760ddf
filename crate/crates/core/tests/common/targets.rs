//! Per-sample double-Q target oracle: one forward pass per transition and
//! a hand-written argmax, compared against the batched implementation.

use duelforge::dqn::compute_targets;
use duelforge::envcore::{ByteObservation, OBS_BYTES};
use duelforge::neuralnet::init_network;
use duelforge::replay::{Provenance, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_force(
    online: &duelforge::neuralnet::NetworkParameters,
    target: &duelforge::neuralnet::NetworkParameters,
    t: &Transition,
    discount: f64,
) -> f32 {
    if t.terminal {
        return t.reward;
    }
    let x = ByteObservation(t.next_obs).normalized();
    let q_on = online.forward(&x).unwrap();
    let q_tg = target.forward(&x).unwrap();
    let mut best = 0;
    for a in 1..q_on.len() {
        if q_on[a] > q_on[best] {
            best = a;
        }
    }
    t.reward + discount as f32 * q_tg[best]
}

fn random_transition(rng: &mut ChaCha8Rng, actions: usize) -> Transition {
    let mut obs = [0u8; OBS_BYTES];
    let mut next_obs = [0u8; OBS_BYTES];
    rng.fill(&mut obs[..]);
    rng.fill(&mut next_obs[..]);
    Transition {
        obs,
        action: rng.gen_range(0..actions) as u8,
        reward: [-1.0, 0.0, 1.0][rng.gen_range(0..3)],
        next_obs,
        terminal: rng.gen_bool(0.2),
        source: Provenance::Player1,
    }
}

/// Runs `batches` random batches (fresh online and target networks every
/// 100 batches) and returns how many targets differ in any bit.
pub fn target_mismatches(batches: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    let mut nets = None;
    for i in 0..batches {
        if i % 100 == 0 {
            let actions = rng.gen_range(2..=6);
            nets = Some((
                init_network(actions, rng.gen()).unwrap(),
                init_network(actions, rng.gen()).unwrap(),
                actions,
            ));
        }
        let (online, target, actions) = nets.as_ref().unwrap();
        let discount = rng.gen_range(0.5..0.999);
        let n = rng.gen_range(1..=32);
        let batch: Vec<Transition> = (0..n).map(|_| random_transition(&mut rng, *actions)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let got = compute_targets(online, target, &refs, discount);
        for (t, y) in batch.iter().zip(&got) {
            if brute_force(online, target, t, discount).to_bits() != y.to_bits() {
                mismatches += 1;
            }
        }
    }
    mismatches
}
