//! Helpers shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbsynth::heuristics::{allowed_actions, BlockedStateRegistry, HeuristicConfig};
use rbsynth::protocol::{enumerate_actions, AlgorithmDraft};

/// Every draft visited by a uniform random walk through the admissible
/// actions, starting from the empty draft. The last element is complete unless
/// the walk hit a dead end.
pub fn walk(seed: u64, cfg: &HeuristicConfig) -> Vec<AlgorithmDraft> {
    let universe = enumerate_actions(cfg.max_types);
    let blocked = BlockedStateRegistry::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = AlgorithmDraft::new();
    let mut seen = vec![d.clone()];
    while !d.is_complete() {
        let allowed = allowed_actions(&d, &universe, cfg, &blocked);
        if allowed.is_empty() {
            break;
        }
        d.push(allowed[rng.gen_range(0..allowed.len())]).unwrap();
        seen.push(d.clone());
    }
    seen
}

/// A complete heuristic-admissible algorithm, if the walk from `seed` gets
/// there.
pub fn admissible(seed: u64) -> Option<AlgorithmDraft> {
    walk(seed, &HeuristicConfig::default())
        .pop()
        .filter(AlgorithmDraft::is_complete)
}

/// The first `count` complete admissible algorithms from consecutive seeds.
pub fn admissible_corpus(first_seed: u64, count: usize) -> Vec<AlgorithmDraft> {
    (first_seed..).filter_map(admissible).take(count).collect()
}
