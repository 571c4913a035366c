//! Runtime and bonus rewards.

use serde::{Deserialize, Serialize};

use crate::protocol::{Action, AlgorithmDraft, HandlerId, LogicKind, MessageType, StateKey, ThresholdKind};

/// Reward schedule. Defaults reproduce the published table; every entry can be
/// overridden from the `[rewards]` config section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub send_self: i64,
    pub send_neighbours: i64,
    pub send_all: i64,
    pub deliver: i64,
    pub stop: i64,

    pub threshold_zero: i64,
    pub threshold_one: i64,
    pub threshold_f_plus_one: i64,
    pub threshold_half_n_plus_f: i64,
    pub threshold_n_minus_f: i64,

    /// Reward per type index when a SEND introduces a new type: `typeK` costs `K * type_step`.
    pub type_step: i64,

    pub broadcast_handler: i64,
    pub receive_handler: i64,

    pub correct_bonus_base: i64,
    pub incorrect_reward: i64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            send_self: -1,
            send_neighbours: -2,
            send_all: -3,
            deliver: -1,
            stop: 0,
            threshold_zero: 0,
            threshold_one: -1,
            threshold_f_plus_one: -2,
            threshold_half_n_plus_f: -3,
            threshold_n_minus_f: -4,
            type_step: -1,
            broadcast_handler: 0,
            receive_handler: -1,
            correct_bonus_base: 100,
            incorrect_reward: -1,
        }
    }
}

impl RewardConfig {
    pub fn logic_reward(&self, kind: LogicKind) -> i64 {
        match kind {
            LogicKind::SendSelf => self.send_self,
            LogicKind::SendNeighbours => self.send_neighbours,
            LogicKind::SendAll => self.send_all,
            LogicKind::Deliver => self.deliver,
            LogicKind::Stop => self.stop,
        }
    }

    pub fn threshold_reward(&self, kind: ThresholdKind) -> i64 {
        match kind {
            ThresholdKind::Zero => self.threshold_zero,
            ThresholdKind::One => self.threshold_one,
            ThresholdKind::FPlusOne => self.threshold_f_plus_one,
            ThresholdKind::HalfNPlusF => self.threshold_half_n_plus_f,
            ThresholdKind::NMinusF => self.threshold_n_minus_f,
        }
    }

    pub fn type_intro_reward(&self, t: MessageType) -> i64 {
        self.type_step * i64::from(t.0)
    }

    pub fn handler_reward(&self, h: HandlerId) -> i64 {
        match h {
            HandlerId::Broadcast => self.broadcast_handler,
            HandlerId::Receive => self.receive_handler,
        }
    }
}

/// Reward for appending `action` to `handler` of `draft_so_far`.
pub fn runtime_reward(action: Action, handler: HandlerId, draft_so_far: &AlgorithmDraft, cfg: &RewardConfig) -> i64 {
    let introduces = action
        .sent_type()
        .filter(|&t| !draft_so_far.sends_type(t))
        .map_or(0, |t| cfg.type_intro_reward(t));
    cfg.logic_reward(action.logic().kind())
        + cfg.threshold_reward(action.condition().threshold())
        + introduces
        + cfg.handler_reward(handler)
}

pub fn bonus_reward(correct: bool, ledger: &EpisodeLedger, cfg: &RewardConfig) -> i64 {
    if correct {
        cfg.correct_bonus_base + ledger.runtime_sum()
    } else {
        cfg.incorrect_reward
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerStep {
    pub state: StateKey,
    pub action: Action,
    pub reward: i64,
}

/// Runtime rewards collected during one episode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeLedger {
    steps: Vec<LedgerStep>,
    runtime_sum: i64,
}

impl EpisodeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, state: StateKey, action: Action, reward: i64) {
        self.runtime_sum += reward;
        self.steps.push(LedgerStep { state, action, reward });
    }

    pub fn runtime_sum(&self) -> i64 {
        self.runtime_sum
    }

    pub fn steps(&self) -> &[LedgerStep] {
        &self.steps
    }
}
