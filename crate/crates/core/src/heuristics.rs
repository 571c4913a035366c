//! Generation heuristics GH1-GH10: state-dependent filters over the action universe.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::protocol::{Action, AlgorithmDraft, HandlerId, LogicKind, MessageType, StateKey, ThresholdKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Heuristic {
    /// No repeated actions anywhere in the algorithm (STOP exempt).
    #[serde(rename = "GH1")]
    NoRepeatedActions,
    /// Per-handler allowed logic kinds.
    #[serde(rename = "GH2")]
    HandlerLogics,
    /// Per-handler allowed condition thresholds.
    #[serde(rename = "GH3")]
    HandlerThresholds,
    /// One SEND per (sent type, condition).
    #[serde(rename = "GH4")]
    OneSendPerTypeAndCondition,
    /// RB-Broadcast only sends the configured type.
    #[serde(rename = "GH5")]
    BroadcastSendType,
    /// Minimum and maximum handler size, STOP included.
    #[serde(rename = "GH6")]
    HandlerSize,
    /// Only wait on types the algorithm already sends.
    #[serde(rename = "GH7")]
    WaitOnSentTypes,
    /// The algorithm must contain a DELIVER.
    #[serde(rename = "GH8")]
    RequireDeliver,
    /// Never re-generate an algorithm the oracle rejected.
    #[serde(rename = "GH9")]
    BlockIncorrect,
    /// Cap on the number of message types.
    #[serde(rename = "GH10")]
    MaxTypes,
}

impl Heuristic {
    pub const ALL: [Heuristic; 10] = [
        Heuristic::NoRepeatedActions,
        Heuristic::HandlerLogics,
        Heuristic::HandlerThresholds,
        Heuristic::OneSendPerTypeAndCondition,
        Heuristic::BroadcastSendType,
        Heuristic::HandlerSize,
        Heuristic::WaitOnSentTypes,
        Heuristic::RequireDeliver,
        Heuristic::BlockIncorrect,
        Heuristic::MaxTypes,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Heuristic::NoRepeatedActions => "GH1",
            Heuristic::HandlerLogics => "GH2",
            Heuristic::HandlerThresholds => "GH3",
            Heuristic::OneSendPerTypeAndCondition => "GH4",
            Heuristic::BroadcastSendType => "GH5",
            Heuristic::HandlerSize => "GH6",
            Heuristic::WaitOnSentTypes => "GH7",
            Heuristic::RequireDeliver => "GH8",
            Heuristic::BlockIncorrect => "GH9",
            Heuristic::MaxTypes => "GH10",
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicConfig {
    pub disabled: BTreeSet<Heuristic>,
    pub broadcast_logics: BTreeSet<LogicKind>,
    pub receive_logics: BTreeSet<LogicKind>,
    pub broadcast_thresholds: BTreeSet<ThresholdKind>,
    pub receive_thresholds: BTreeSet<ThresholdKind>,
    pub min_actions: usize,
    pub max_actions: usize,
    pub broadcast_send_type: u8,
    pub max_types: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            disabled: BTreeSet::new(),
            broadcast_logics: LogicKind::ALL
                .into_iter()
                .filter(|&k| k != LogicKind::Deliver)
                .collect(),
            receive_logics: LogicKind::ALL.into_iter().collect(),
            broadcast_thresholds: [ThresholdKind::Zero].into_iter().collect(),
            receive_thresholds: ThresholdKind::ALL.into_iter().collect(),
            min_actions: 2,
            max_actions: 4,
            broadcast_send_type: 0,
            max_types: 2,
        }
    }
}

impl HeuristicConfig {
    pub fn with_disabled(h: Heuristic) -> Self {
        let mut cfg = Self::default();
        cfg.disabled.insert(h);
        cfg
    }

    pub fn is_enabled(&self, h: Heuristic) -> bool {
        !self.disabled.contains(&h)
    }

    /// Returns the name of the first offending field.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.min_actions < 1 {
            return Err(("min_actions", "must be at least 1".into()));
        }
        if self.max_actions < self.min_actions {
            return Err(("max_actions", format!("must be >= min_actions ({})", self.min_actions)));
        }
        if self.max_types < 1 {
            return Err(("max_types", "must be at least 1".into()));
        }
        Ok(())
    }

    fn logics(&self, h: HandlerId) -> &BTreeSet<LogicKind> {
        match h {
            HandlerId::Broadcast => &self.broadcast_logics,
            HandlerId::Receive => &self.receive_logics,
        }
    }

    fn thresholds(&self, h: HandlerId) -> &BTreeSet<ThresholdKind> {
        match h {
            HandlerId::Broadcast => &self.broadcast_thresholds,
            HandlerId::Receive => &self.receive_thresholds,
        }
    }
}

/// Terminal state keys of algorithms the oracle rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockedStateRegistry {
    keys: HashSet<StateKey>,
}

impl BlockedStateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, key: &StateKey) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &StateKey> {
        self.keys.iter()
    }
}

impl Serialize for BlockedStateRegistry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let sorted: BTreeSet<&StateKey> = self.keys.iter().collect();
        sorted.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockedStateRegistry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Self {
            keys: Vec::<StateKey>::deserialize(d)?.into_iter().collect(),
        })
    }
}

/// Blocks `key`; inserting the same key again is a no-op.
pub fn record_incorrect(key: StateKey, blocked: &mut BlockedStateRegistry) {
    blocked.keys.insert(key);
}

/// The actions of `universe` that pass every enabled heuristic for the handler
/// under construction, in universe order. Empty when the draft is finished.
pub fn allowed_actions(
    draft: &AlgorithmDraft,
    universe: &[Action],
    cfg: &HeuristicConfig,
    blocked: &BlockedStateRegistry,
) -> Vec<Action> {
    let Some(handler) = draft.current_handler() else {
        return Vec::new();
    };
    let gate = Gate {
        draft,
        handler,
        size: draft.handler(handler).len(),
        cfg,
        blocked,
    };
    universe.iter().copied().filter(|&a| gate.admits(a)).collect()
}

struct Gate<'a> {
    draft: &'a AlgorithmDraft,
    handler: HandlerId,
    /// actions already in the open handler; none of them is STOP
    size: usize,
    cfg: &'a HeuristicConfig,
    blocked: &'a BlockedStateRegistry,
}

impl Gate<'_> {
    fn admits(&self, a: Action) -> bool {
        Heuristic::ALL
            .into_iter()
            .filter(|&h| self.cfg.is_enabled(h))
            .all(|h| self.passes(h, a))
    }

    fn passes(&self, h: Heuristic, a: Action) -> bool {
        let cfg = self.cfg;
        match h {
            Heuristic::NoRepeatedActions => a.is_stop() || !self.draft.contains(a),
            Heuristic::HandlerLogics => cfg.logics(self.handler).contains(&a.logic().kind()),
            Heuristic::HandlerThresholds => cfg.thresholds(self.handler).contains(&a.condition().threshold()),
            Heuristic::OneSendPerTypeAndCondition => match a.sent_type() {
                None => true,
                Some(t) => !self
                    .draft
                    .actions()
                    .any(|(_, b)| b.sent_type() == Some(t) && b.condition() == a.condition()),
            },
            Heuristic::BroadcastSendType => {
                self.handler != HandlerId::Broadcast
                    || a.sent_type().is_none_or(|t| t == MessageType(cfg.broadcast_send_type))
            }
            Heuristic::HandlerSize => {
                if a.is_stop() {
                    self.size + 1 >= cfg.min_actions
                } else {
                    self.size + 2 <= cfg.max_actions
                }
            }
            Heuristic::WaitOnSentTypes => a.condition().waits_on().is_none_or(|t| self.draft.sends_type(t)),
            Heuristic::RequireDeliver => {
                !(self.handler == HandlerId::Receive && a.is_stop()) || self.draft.has_deliver()
            }
            Heuristic::BlockIncorrect => {
                if self.handler != HandlerId::Receive || !a.is_stop() || self.blocked.is_empty() {
                    return true;
                }
                let mut closed = self.draft.clone();
                closed.push(Action::STOP).expect("draft is open");
                !self.blocked.contains(&closed.key())
            }
            Heuristic::MaxTypes => a
                .sent_type()
                .is_none_or(|t| self.draft.sends_type(t) || t.index() < cfg.max_types),
        }
    }
}
