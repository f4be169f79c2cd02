//! Realistic samples drawn from random playouts.

use guanzero::cards::deal;
use guanzero::engine::MiniGameState;
use guanzero::features::DecisionEncoder;
use guanzero::valuenet::Sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` samples from random decision points of random mini games, with
/// targets drawn from the reward support {-3, -2, -1, 1, 2, 3}.
pub fn random_samples(seed: u64, n: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut game = 0u64;
    while out.len() < n {
        let mut s =
            MiniGameState::evaluation(&deal(seed.wrapping_mul(1_000_003).wrapping_add(game)));
        game += 1;
        while !s.is_done() && out.len() < n {
            let legal = s.legal_actions().unwrap();
            let pick = rng.random_range(0..legal.len());
            if rng.random_bool(0.15) {
                let enc = DecisionEncoder::new(&s, &legal, true);
                let mag = rng.random_range(1..=3) as f32;
                let target = if rng.random_bool(0.5) { mag } else { -mag };
                out.push(Sample {
                    state: enc.encode(&s, &legal[pick]),
                    action: legal[pick].cards(),
                    target,
                });
            }
            s.apply(legal[pick].clone()).unwrap();
        }
    }
    out
}
