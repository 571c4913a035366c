//! The learner: builds algorithms action by action with Q-learning and UCB
//! exploration, one episode per candidate.

mod episode;
mod qtable;
mod simulation;

pub use episode::{
    run_episode, EpisodeContext, EpisodeRecord, EpisodeVerdict, Judgement, Policy, Scripted, Transition, Ucb,
};
pub use qtable::{q_update, ucb_select, ActionValue, QTable, StateEntry};
pub use simulation::{run_simulation, BestAlgorithm, EpisodeStats, FirstCorrect, Simulation, SimulationResult};

use serde::{Deserialize, Serialize};

use crate::heuristics::HeuristicConfig;
use crate::oracle::OracleConfig;
use crate::reward::RewardConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub ucb_c: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            ucb_c: 2.0,
            alpha: 0.1,
            gamma: 1.0,
        }
    }
}

/// Everything an episode needs besides the mutable learner state.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub policy: PolicyParams,
    pub heuristics: HeuristicConfig,
    pub rewards: RewardConfig,
    pub oracle: OracleConfig,
    /// Message types in the action universe.
    pub max_types: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            policy: PolicyParams::default(),
            heuristics: HeuristicConfig::default(),
            rewards: RewardConfig::default(),
            oracle: OracleConfig::default(),
            max_types: 2,
        }
    }
}
