use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::episode::{run_episode, EpisodeContext, EpisodeRecord, EpisodeVerdict, Judgement, Policy, Ucb};
use super::qtable::QTable;
use super::LearnerConfig;
use crate::heuristics::BlockedStateRegistry;
use crate::oracle::{validate, OracleError};
use crate::protocol::{enumerate_actions, Action, AlgorithmDraft, StateKey};

/// One row of the statistics stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub cumulative_states: usize,
    pub cumulative_algorithms: usize,
    pub cumulative_correct: usize,
    pub cumulative_incorrect: usize,
    pub episode_reward: i64,
    pub best_reward_so_far: Option<i64>,
}

impl EpisodeStats {
    pub const CSV_HEADER: &'static str = "episode,cumulative_states,cumulative_algorithms,cumulative_correct,cumulative_incorrect,episode_reward,best_reward_so_far";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.episode,
            self.cumulative_states,
            self.cumulative_algorithms,
            self.cumulative_correct,
            self.cumulative_incorrect,
            self.episode_reward,
            self.best_reward_so_far.map(|b| b.to_string()).unwrap_or_default()
        )
    }

    pub fn parse_csv_row(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 7 {
            return None;
        }
        Some(Self {
            episode: f[0].parse().ok()?,
            cumulative_states: f[1].parse().ok()?,
            cumulative_algorithms: f[2].parse().ok()?,
            cumulative_correct: f[3].parse().ok()?,
            cumulative_incorrect: f[4].parse().ok()?,
            episode_reward: f[5].parse().ok()?,
            best_reward_so_far: if f[6].is_empty() {
                None
            } else {
                Some(f[6].parse().ok()?)
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestAlgorithm {
    pub episode: usize,
    /// Actions in the order they were generated.
    pub algorithm: AlgorithmDraft,
    pub total_reward: i64,
    pub runtime_sum: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstCorrect {
    pub episode: usize,
    /// Distinct algorithms generated up to and including that episode.
    pub algorithms_generated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub index: usize,
    pub seed: u64,
    pub episodes: usize,
    pub best: Option<BestAlgorithm>,
    pub first_correct: Option<FirstCorrect>,
    pub correct_algorithms: Vec<StateKey>,
    pub stats: Vec<EpisodeStats>,
}

impl SimulationResult {
    pub fn last(&self) -> Option<&EpisodeStats> {
        self.stats.last()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RngState {
    seed: Vec<u8>,
    stream: String,
    word_pos: String,
}

mod rng_serde {
    use super::*;

    pub fn serialize<S: serde::Serializer>(rng: &ChaCha8Rng, s: S) -> Result<S::Ok, S::Error> {
        RngState {
            seed: rng.get_seed().to_vec(),
            stream: rng.get_stream().to_string(),
            word_pos: rng.get_word_pos().to_string(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<ChaCha8Rng, D::Error> {
        use serde::de::Error;
        let st = RngState::deserialize(d)?;
        let seed: [u8; 32] = st
            .seed
            .try_into()
            .map_err(|_| D::Error::custom("rng seed must be 32 bytes"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(st.stream.parse().map_err(D::Error::custom)?);
        rng.set_word_pos(st.word_pos.parse().map_err(D::Error::custom)?);
        Ok(rng)
    }
}

/// A resumable learning run over one Q-table.
///
/// The whole struct is the checkpoint: serialising it after episode k and
/// resuming yields exactly the episodes an uninterrupted run would.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Simulation {
    pub index: usize,
    pub seed: u64,
    pub episodes: usize,
    completed: usize,
    #[serde(with = "rng_serde")]
    rng: ChaCha8Rng,
    qtable: QTable,
    blocked: BlockedStateRegistry,
    visited: BTreeSet<StateKey>,
    verdicts: BTreeMap<StateKey, Judgement>,
    correct: usize,
    best: Option<BestAlgorithm>,
    first_correct: Option<FirstCorrect>,
    stats: Vec<EpisodeStats>,
}

impl Simulation {
    pub fn new(index: usize, seed: u64, episodes: usize) -> Self {
        Self {
            index,
            seed,
            episodes,
            completed: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            qtable: QTable::new(),
            blocked: BlockedStateRegistry::new(),
            visited: BTreeSet::new(),
            verdicts: BTreeMap::new(),
            correct: 0,
            best: None,
            first_correct: None,
            stats: Vec::new(),
        }
    }

    pub fn completed(&self) -> usize {
        self.completed
    }

    pub fn is_finished(&self) -> bool {
        self.completed >= self.episodes
    }

    pub fn qtable(&self) -> &QTable {
        &self.qtable
    }

    pub fn blocked(&self) -> &BlockedStateRegistry {
        &self.blocked
    }

    pub fn stats(&self) -> &[EpisodeStats] {
        &self.stats
    }

    pub fn best(&self) -> Option<&BestAlgorithm> {
        self.best.as_ref()
    }

    /// Runs the next episode with the UCB policy.
    pub fn step(
        &mut self,
        cfg: &LearnerConfig,
        universe: &[Action],
    ) -> Result<(EpisodeRecord, EpisodeStats), OracleError> {
        let mut policy = Ucb(cfg.policy.clone());
        self.step_with(cfg, universe, &mut policy)
    }

    pub fn step_with(
        &mut self,
        cfg: &LearnerConfig,
        universe: &[Action],
        policy: &mut dyn Policy,
    ) -> Result<(EpisodeRecord, EpisodeStats), OracleError> {
        let index = self.completed + 1;
        let before = self.verdicts.len();
        let verdicts = &mut self.verdicts;
        let mut judge = |alg: &AlgorithmDraft| -> Result<Judgement, OracleError> {
            let key = alg.key();
            if let Some(j) = verdicts.get(&key) {
                return Ok(*j);
            }
            let v = validate(alg, &cfg.oracle)?;
            let j = Judgement {
                correct: v.is_correct(),
                property: v.violation().map(|v| v.property),
            };
            verdicts.insert(key, j);
            Ok(j)
        };
        let rec = run_episode(
            index,
            EpisodeContext {
                q: &mut self.qtable,
                blocked: &mut self.blocked,
                rng: &mut self.rng,
            },
            cfg,
            universe,
            policy,
            &mut judge,
        )?;

        self.visited.extend(rec.trajectory.iter().map(|t| t.next.clone()));
        let new_algorithm = self.verdicts.len() > before;
        if new_algorithm && rec.verdict == EpisodeVerdict::Correct {
            self.correct += 1;
        }
        if rec.verdict == EpisodeVerdict::Correct {
            if self.first_correct.is_none() {
                self.first_correct = Some(FirstCorrect {
                    episode: index,
                    algorithms_generated: self.verdicts.len(),
                });
            }
            if self.best.as_ref().is_none_or(|b| rec.total_reward() > b.total_reward) {
                self.best = Some(BestAlgorithm {
                    episode: index,
                    algorithm: rec.algorithm.clone(),
                    total_reward: rec.total_reward(),
                    runtime_sum: rec.runtime_sum,
                });
            }
        }
        self.completed = index;
        let stats = EpisodeStats {
            episode: index,
            cumulative_states: self.visited.len(),
            cumulative_algorithms: self.verdicts.len(),
            cumulative_correct: self.correct,
            cumulative_incorrect: self.verdicts.len() - self.correct,
            episode_reward: rec.total_reward(),
            best_reward_so_far: self.best.as_ref().map(|b| b.total_reward),
        };
        self.stats.push(stats);
        Ok((rec, stats))
    }

    pub fn result(&self) -> SimulationResult {
        SimulationResult {
            index: self.index,
            seed: self.seed,
            episodes: self.completed,
            best: self.best.clone(),
            first_correct: self.first_correct,
            correct_algorithms: self
                .verdicts
                .iter()
                .filter(|(_, j)| j.correct)
                .map(|(k, _)| k.clone())
                .collect(),
            stats: self.stats.clone(),
        }
    }
}

/// Runs `episodes` episodes from a fresh Q-table.
pub fn run_simulation(episodes: usize, cfg: &LearnerConfig, seed: u64) -> Result<SimulationResult, OracleError> {
    let universe = enumerate_actions(cfg.max_types);
    let mut sim = Simulation::new(0, seed, episodes);
    while !sim.is_finished() {
        sim.step(cfg, &universe)?;
    }
    Ok(sim.result())
}
