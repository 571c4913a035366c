use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::qtable::{q_update, ucb_select, QTable};
use super::{LearnerConfig, PolicyParams};
use crate::heuristics::{allowed_actions, record_incorrect, BlockedStateRegistry};
use crate::oracle::{OracleError, Property};
use crate::protocol::{Action, AlgorithmDraft, StateKey};
use crate::reward::{bonus_reward, runtime_reward, EpisodeLedger};

/// Chooses one action among the admissible candidates.
pub trait Policy {
    fn begin_episode(&mut self) {}

    fn select(&mut self, state: &StateKey, candidates: &[Action], q: &QTable, rng: &mut ChaCha8Rng) -> Action;
}

#[derive(Debug, Clone)]
pub struct Ucb(pub PolicyParams);

impl Policy for Ucb {
    fn select(&mut self, state: &StateKey, candidates: &[Action], q: &QTable, rng: &mut ChaCha8Rng) -> Action {
        ucb_select(state, candidates, q, &self.0, rng)
    }
}

/// Replays a fixed action sequence every episode; falls back to the first
/// candidate once the script runs out or names an inadmissible action.
#[derive(Debug, Clone)]
pub struct Scripted {
    script: Vec<Action>,
    pos: usize,
}

impl Scripted {
    pub fn new(script: Vec<Action>) -> Self {
        Self { script, pos: 0 }
    }

    pub fn for_algorithm(alg: &AlgorithmDraft) -> Self {
        Self::new(alg.actions().map(|(_, a)| a).collect())
    }
}

impl Policy for Scripted {
    fn begin_episode(&mut self) {
        self.pos = 0;
    }

    fn select(&mut self, _: &StateKey, candidates: &[Action], _: &QTable, _: &mut ChaCha8Rng) -> Action {
        let next = self.script.get(self.pos).copied();
        self.pos += 1;
        next.filter(|a| candidates.contains(a)).unwrap_or(candidates[0])
    }
}

/// Oracle outcome for one complete algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgement {
    pub correct: bool,
    pub property: Option<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeVerdict {
    Correct,
    Incorrect,
    /// No admissible action was left before the algorithm was complete.
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub state: StateKey,
    pub action: Action,
    pub reward: i64,
    pub next: StateKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: usize,
    pub trajectory: Vec<Transition>,
    pub algorithm: AlgorithmDraft,
    pub verdict: EpisodeVerdict,
    pub violated: Option<Property>,
    pub runtime_sum: i64,
    pub bonus: i64,
}

impl EpisodeRecord {
    pub fn total_reward(&self) -> i64 {
        self.runtime_sum + self.bonus
    }
}

/// Mutable learner state shared by the episodes of one simulation.
pub struct EpisodeContext<'a> {
    pub q: &'a mut QTable,
    pub blocked: &'a mut BlockedStateRegistry,
    pub rng: &'a mut ChaCha8Rng,
}

/// Builds one algorithm, validates it and applies every Q-table update.
///
/// `judge` is called once, on the completed algorithm; it is never called for
/// aborted episodes.
pub fn run_episode(
    index: usize,
    ctx: EpisodeContext<'_>,
    cfg: &LearnerConfig,
    universe: &[Action],
    policy: &mut dyn Policy,
    judge: &mut dyn FnMut(&AlgorithmDraft) -> Result<Judgement, OracleError>,
) -> Result<EpisodeRecord, OracleError> {
    let EpisodeContext { q, blocked, rng } = ctx;
    let p = &cfg.policy;
    policy.begin_episode();
    let mut draft = AlgorithmDraft::new();
    let mut ledger = EpisodeLedger::new();
    let mut trajectory: Vec<Transition> = Vec::new();

    while let Some(handler) = draft.current_handler() {
        let state = draft.key();
        let candidates = allowed_actions(&draft, universe, &cfg.heuristics, blocked);
        if candidates.is_empty() {
            let bonus = cfg.rewards.incorrect_reward;
            if let Some(last) = trajectory.last() {
                q_update(q, &last.state, last.action, bonus as f64, &last.next, true, p);
            }
            return Ok(EpisodeRecord {
                index,
                trajectory,
                algorithm: draft,
                verdict: EpisodeVerdict::Aborted,
                violated: None,
                runtime_sum: ledger.runtime_sum(),
                bonus,
            });
        }
        let action = policy.select(&state, &candidates, q, rng);
        let reward = runtime_reward(action, handler, &draft, &cfg.rewards);
        draft.push(action).expect("draft is open");
        let next = draft.key();
        q_update(q, &state, action, reward as f64, &next, draft.is_complete(), p);
        ledger.record(state.clone(), action, reward);
        trajectory.push(Transition {
            state,
            action,
            reward,
            next,
        });
    }

    let judgement = judge(&draft)?;
    let bonus = bonus_reward(judgement.correct, &ledger, &cfg.rewards);
    let last = trajectory
        .last()
        .expect("a complete algorithm has at least two actions");
    q_update(q, &last.state, last.action, bonus as f64, &last.next, true, p);
    if !judgement.correct {
        record_incorrect(draft.key(), blocked);
    }
    Ok(EpisodeRecord {
        index,
        trajectory,
        algorithm: draft,
        verdict: if judgement.correct {
            EpisodeVerdict::Correct
        } else {
            EpisodeVerdict::Incorrect
        },
        violated: judgement.property,
        runtime_sum: ledger.runtime_sum(),
        bonus,
    })
}
