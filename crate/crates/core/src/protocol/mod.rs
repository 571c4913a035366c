//! The algorithm description language: message types, conditions, actions,
//! the two event handlers and the drafts the learner builds out of them.

mod metrics;
mod text;

pub use metrics::{efficiency_metrics, EfficiencyMetrics};
pub use text::{parse_algorithm, render_pseudocode, ParseError};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("STOP can only be guarded by the zero-threshold condition")]
    GuardedStop,
    #[error("cannot add an action to a finished algorithm")]
    DraftFinished,
    #[error("handler {0} is not closed by STOP")]
    HandlerNotClosed(HandlerId),
    #[error("action follows STOP in handler {0}")]
    ActionAfterStop(HandlerId),
    #[error("algorithm is incomplete")]
    Incomplete,
}

/// Process count and fault bound of one system model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub f: usize,
}

impl SystemParams {
    pub fn new(n: usize, f: usize) -> Result<Self, ProtocolError> {
        if n < 3 {
            return Err(ProtocolError::InvalidParams(format!("n = {n}, need n >= 3")));
        }
        if f >= n {
            return Err(ProtocolError::InvalidParams(format!("f = {f} must be below n = {n}")));
        }
        Ok(Self { n, f })
    }

    /// Largest crash fault bound, floor((n-1)/2).
    pub fn crash_bound(n: usize) -> usize {
        n.saturating_sub(1) / 2
    }

    /// Largest Byzantine fault bound, floor((n-1)/3).
    pub fn byzantine_bound(n: usize) -> usize {
        n.saturating_sub(1) / 3
    }
}

/// Protocol step tag; `MessageType(0)` is `type0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageType(pub u8);

impl MessageType {
    pub const TYPE0: MessageType = MessageType(0);
    pub const TYPE1: MessageType = MessageType(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Zero,
    One,
    FPlusOne,
    HalfNPlusF,
    NMinusF,
}

impl ThresholdKind {
    pub const ALL: [ThresholdKind; 5] = [
        ThresholdKind::Zero,
        ThresholdKind::One,
        ThresholdKind::FPlusOne,
        ThresholdKind::HalfNPlusF,
        ThresholdKind::NMinusF,
    ];

    /// Textual form used in pseudocode: `0`, `1`, `F+1`, `(N+F)/2`, `N-F`.
    pub fn symbol(self) -> &'static str {
        match self {
            ThresholdKind::Zero => "0",
            ThresholdKind::One => "1",
            ThresholdKind::FPlusOne => "F+1",
            ThresholdKind::HalfNPlusF => "(N+F)/2",
            ThresholdKind::NMinusF => "N-F",
        }
    }

    fn code(self) -> &'static str {
        match self {
            ThresholdKind::Zero => "zero",
            ThresholdKind::One => "one",
            ThresholdKind::FPlusOne => "f+1",
            ThresholdKind::HalfNPlusF => "half",
            ThresholdKind::NMinusF => "n-f",
        }
    }

    fn from_code(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == s)
    }
}

/// Minimum number of distinct senders that satisfies a threshold.
///
/// `(N+F)/2` rounds up, so N=100, F=33 needs 67 senders.
pub fn threshold_count(kind: ThresholdKind, params: SystemParams) -> usize {
    let SystemParams { n, f } = params;
    match kind {
        ThresholdKind::Zero => 0,
        ThresholdKind::One => 1,
        ThresholdKind::FPlusOne => f + 1,
        ThresholdKind::HalfNPlusF => (n + f).div_ceil(2),
        ThresholdKind::NMinusF => n - f,
    }
}

/// "received ⟨type,m⟩ from `threshold` distinct parties".
///
/// The zero threshold waits for nothing, so its message type is normalised to
/// `type0`; two zero conditions are therefore always equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    threshold: ThresholdKind,
    msg_type: MessageType,
}

impl Condition {
    pub const ZERO: Condition = Condition {
        threshold: ThresholdKind::Zero,
        msg_type: MessageType::TYPE0,
    };

    pub fn new(threshold: ThresholdKind, msg_type: MessageType) -> Self {
        match threshold {
            ThresholdKind::Zero => Self::ZERO,
            _ => Self { threshold, msg_type },
        }
    }

    pub fn threshold(self) -> ThresholdKind {
        self.threshold
    }

    pub fn msg_type(self) -> MessageType {
        self.msg_type
    }

    /// The message type this condition waits on, `None` for the tautology.
    pub fn waits_on(self) -> Option<MessageType> {
        (self.threshold != ThresholdKind::Zero).then_some(self.msg_type)
    }

    pub fn is_zero(self) -> bool {
        self.threshold == ThresholdKind::Zero
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fanout {
    All,
    Neighbours,
    Myself,
}

impl Fanout {
    pub const ALL: [Fanout; 3] = [Fanout::All, Fanout::Neighbours, Fanout::Myself];

    pub fn recipients(self, n: usize) -> usize {
        match self {
            Fanout::All => n,
            Fanout::Neighbours => n - 1,
            Fanout::Myself => 1,
        }
    }

    fn code(self) -> &'static str {
        match self {
            Fanout::All => "all",
            Fanout::Neighbours => "nbrs",
            Fanout::Myself => "self",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Logic {
    Send { to: Fanout, msg_type: MessageType },
    Deliver,
    Stop,
}

impl Logic {
    pub fn kind(self) -> LogicKind {
        match self {
            Logic::Send { to: Fanout::All, .. } => LogicKind::SendAll,
            Logic::Send {
                to: Fanout::Neighbours, ..
            } => LogicKind::SendNeighbours,
            Logic::Send { to: Fanout::Myself, .. } => LogicKind::SendSelf,
            Logic::Deliver => LogicKind::Deliver,
            Logic::Stop => LogicKind::Stop,
        }
    }

    pub fn sent_type(self) -> Option<MessageType> {
        match self {
            Logic::Send { msg_type, .. } => Some(msg_type),
            _ => None,
        }
    }
}

/// Logic without its message type; rewards and per-handler filters key on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicKind {
    SendAll,
    SendNeighbours,
    SendSelf,
    Deliver,
    Stop,
}

impl LogicKind {
    pub const ALL: [LogicKind; 5] = [
        LogicKind::SendAll,
        LogicKind::SendNeighbours,
        LogicKind::SendSelf,
        LogicKind::Deliver,
        LogicKind::Stop,
    ];
}

/// One condition-guarded instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    logic: Logic,
    condition: Condition,
}

impl Action {
    pub const STOP: Action = Action {
        logic: Logic::Stop,
        condition: Condition::ZERO,
    };

    pub fn new(logic: Logic, condition: Condition) -> Result<Self, ProtocolError> {
        if logic == Logic::Stop && !condition.is_zero() {
            return Err(ProtocolError::GuardedStop);
        }
        Ok(Self { logic, condition })
    }

    pub fn send(to: Fanout, msg_type: MessageType, condition: Condition) -> Self {
        Self {
            logic: Logic::Send { to, msg_type },
            condition,
        }
    }

    pub fn deliver(condition: Condition) -> Self {
        Self {
            logic: Logic::Deliver,
            condition,
        }
    }

    pub fn logic(self) -> Logic {
        self.logic
    }

    pub fn condition(self) -> Condition {
        self.condition
    }

    pub fn is_stop(self) -> bool {
        self.logic == Logic::Stop
    }

    pub fn is_deliver(self) -> bool {
        self.logic == Logic::Deliver
    }

    pub fn sent_type(self) -> Option<MessageType> {
        self.logic.sent_type()
    }
}

/// Compact code used in state keys and checkpoints, e.g. `all:t1@one:t0`,
/// `deliver@half:t1`, `stop`.
impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.logic {
            Logic::Send { to, msg_type } => write!(f, "{}:t{}", to.code(), msg_type.0)?,
            Logic::Deliver => f.write_str("deliver")?,
            Logic::Stop => return f.write_str("stop"),
        }
        match self.condition.waits_on() {
            None => f.write_str("@zero"),
            Some(t) => write!(f, "@{}:t{}", self.condition.threshold.code(), t.0),
        }
    }
}

impl std::str::FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stop" {
            return Ok(Action::STOP);
        }
        let bad = || format!("malformed action code `{s}`");
        let (logic, cond) = s.split_once('@').ok_or_else(bad)?;
        let parse_type = |t: &str| -> Result<MessageType, String> {
            t.strip_prefix('t')
                .and_then(|d| d.parse::<u8>().ok())
                .map(MessageType)
                .ok_or_else(bad)
        };
        let logic = if logic == "deliver" {
            Logic::Deliver
        } else {
            let (to, ty) = logic.split_once(':').ok_or_else(bad)?;
            let to = Fanout::ALL.into_iter().find(|f| f.code() == to).ok_or_else(bad)?;
            Logic::Send {
                to,
                msg_type: parse_type(ty)?,
            }
        };
        let condition = if cond == "zero" {
            Condition::ZERO
        } else {
            let (k, ty) = cond.split_once(':').ok_or_else(bad)?;
            let k = ThresholdKind::from_code(k).ok_or_else(bad)?;
            Condition::new(k, parse_type(ty)?)
        };
        Action::new(logic, condition).map_err(|e| e.to_string())
    }
}

/// The full deduplicated action universe for `max_types` message types.
///
/// Ordering: sends grouped by fanout then sent type, then DELIVER, then STOP;
/// within each logic the conditions run zero first, then by threshold and type.
pub fn enumerate_actions(max_types: usize) -> Vec<Action> {
    let types: Vec<MessageType> = (0..max_types as u8).map(MessageType).collect();
    let mut conditions = vec![Condition::ZERO];
    for k in &ThresholdKind::ALL[1..] {
        for &t in &types {
            conditions.push(Condition::new(*k, t));
        }
    }

    let mut actions = Vec::with_capacity(3 * types.len() * conditions.len() + conditions.len() + 1);
    for to in Fanout::ALL {
        for &t in &types {
            for &c in &conditions {
                actions.push(Action::send(to, t, c));
            }
        }
    }
    for &c in &conditions {
        actions.push(Action::deliver(c));
    }
    actions.push(Action::STOP);
    actions
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandlerId {
    Broadcast,
    Receive,
}

impl fmt::Display for HandlerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HandlerId::Broadcast => "RB-Broadcast",
            HandlerId::Receive => "receive",
        })
    }
}

/// Which handler is under construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[default]
    Broadcast,
    Receive,
    Done,
}

impl Phase {
    pub fn handler(self) -> Option<HandlerId> {
        match self {
            Phase::Broadcast => Some(HandlerId::Broadcast),
            Phase::Receive => Some(HandlerId::Receive),
            Phase::Done => None,
        }
    }

    fn code(self) -> char {
        match self {
            Phase::Broadcast => 'B',
            Phase::Receive => 'R',
            Phase::Done => 'D',
        }
    }
}

/// A partial or complete two-handler algorithm.
///
/// Actions are appended to the handler of the current phase; STOP closes that
/// handler and advances the phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AlgorithmDraft {
    broadcast: Vec<Action>,
    receive: Vec<Action>,
    phase: Phase,
}

impl AlgorithmDraft {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a complete algorithm from two STOP-terminated handlers.
    pub fn from_handlers(broadcast: Vec<Action>, receive: Vec<Action>) -> Result<Self, ProtocolError> {
        let mut draft = Self::new();
        for (handler, actions) in [(HandlerId::Broadcast, broadcast), (HandlerId::Receive, receive)] {
            match actions.iter().position(|a| a.is_stop()) {
                None => return Err(ProtocolError::HandlerNotClosed(handler)),
                Some(i) if i + 1 != actions.len() => return Err(ProtocolError::ActionAfterStop(handler)),
                Some(_) => {}
            }
            for a in actions {
                draft.push(a)?;
            }
        }
        Ok(draft)
    }

    pub fn push(&mut self, action: Action) -> Result<(), ProtocolError> {
        let handler = match self.phase {
            Phase::Broadcast => &mut self.broadcast,
            Phase::Receive => &mut self.receive,
            Phase::Done => return Err(ProtocolError::DraftFinished),
        };
        handler.push(action);
        if action.is_stop() {
            self.phase = match self.phase {
                Phase::Broadcast => Phase::Receive,
                _ => Phase::Done,
            };
        }
        Ok(())
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_complete(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn current_handler(&self) -> Option<HandlerId> {
        self.phase.handler()
    }

    pub fn handler(&self, h: HandlerId) -> &[Action] {
        match h {
            HandlerId::Broadcast => &self.broadcast,
            HandlerId::Receive => &self.receive,
        }
    }

    pub fn broadcast_actions(&self) -> &[Action] {
        &self.broadcast
    }

    pub fn receive_actions(&self) -> &[Action] {
        &self.receive
    }

    /// Every action with the handler it belongs to.
    pub fn actions(&self) -> impl Iterator<Item = (HandlerId, Action)> + '_ {
        self.broadcast
            .iter()
            .map(|&a| (HandlerId::Broadcast, a))
            .chain(self.receive.iter().map(|&a| (HandlerId::Receive, a)))
    }

    pub fn contains(&self, action: Action) -> bool {
        self.broadcast.contains(&action) || self.receive.contains(&action)
    }

    /// Message types sent by at least one SEND action.
    pub fn sent_types(&self) -> impl Iterator<Item = MessageType> + '_ {
        self.actions().filter_map(|(_, a)| a.sent_type())
    }

    pub fn sends_type(&self, t: MessageType) -> bool {
        self.sent_types().any(|s| s == t)
    }

    pub fn has_deliver(&self) -> bool {
        self.actions().any(|(_, a)| a.is_deliver())
    }

    pub fn key(&self) -> StateKey {
        canonical_key(self)
    }
}

/// Order-insensitive fingerprint of a draft: the multiset of actions in each
/// handler plus the phase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateKey {
    broadcast: Vec<Action>,
    receive: Vec<Action>,
    phase: Phase,
}

pub fn canonical_key(draft: &AlgorithmDraft) -> StateKey {
    let mut broadcast = draft.broadcast.clone();
    let mut receive = draft.receive.clone();
    broadcast.sort_unstable();
    receive.sort_unstable();
    StateKey {
        broadcast,
        receive,
        phase: draft.phase,
    }
}

impl StateKey {
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_terminal(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Rebuilds a draft with each handler in canonical (sorted) order.
    ///
    /// STOP sorts last, so the rebuilt handlers are well formed.
    pub fn to_draft(&self) -> AlgorithmDraft {
        AlgorithmDraft {
            broadcast: self.broadcast.clone(),
            receive: self.receive.clone(),
            phase: self.phase,
        }
    }
}

/// `R|all:t0@zero,stop|deliver@zero` style text.
impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Action]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        write!(
            f,
            "{}|{}|{}",
            self.phase.code(),
            join(&self.broadcast),
            join(&self.receive)
        )
    }
}

impl std::str::FromStr for StateKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('|');
        let (Some(phase), Some(b), Some(r), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(format!("malformed state key `{s}`"));
        };
        let phase = match phase {
            "B" => Phase::Broadcast,
            "R" => Phase::Receive,
            "D" => Phase::Done,
            other => return Err(format!("unknown phase `{other}` in state key")),
        };
        let list = |p: &str| -> Result<Vec<Action>, String> {
            if p.is_empty() {
                return Ok(Vec::new());
            }
            let mut v = p.split(',').map(str::parse).collect::<Result<Vec<Action>, _>>()?;
            v.sort_unstable();
            Ok(v)
        };
        Ok(StateKey {
            broadcast: list(b)?,
            receive: list(r)?,
            phase,
        })
    }
}

impl Serialize for StateKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The algorithms reported by the original experiments, used as a golden corpus.
pub mod reference {
    use super::*;

    fn c(k: ThresholdKind, t: u8) -> Condition {
        Condition::new(k, MessageType(t))
    }

    /// No-Failure: send to all, deliver on the first message.
    pub fn algorithm1() -> AlgorithmDraft {
        AlgorithmDraft::from_handlers(
            vec![
                Action::send(Fanout::All, MessageType::TYPE0, Condition::ZERO),
                Action::STOP,
            ],
            vec![Action::deliver(Condition::ZERO), Action::STOP],
        )
        .expect("well formed")
    }

    /// Crash-Failure: self-send, then relay to neighbours and deliver.
    pub fn algorithm2() -> AlgorithmDraft {
        AlgorithmDraft::from_handlers(
            vec![
                Action::send(Fanout::Myself, MessageType::TYPE0, Condition::ZERO),
                Action::STOP,
            ],
            vec![
                Action::send(Fanout::Neighbours, MessageType::TYPE1, Condition::ZERO),
                Action::deliver(Condition::ZERO),
                Action::STOP,
            ],
        )
        .expect("well formed")
    }

    /// Byzantine-Failure: echo on one init, amplify on F+1 echoes, deliver on (N+F)/2.
    pub fn algorithm3() -> AlgorithmDraft {
        AlgorithmDraft::from_handlers(
            vec![
                Action::send(Fanout::All, MessageType::TYPE0, Condition::ZERO),
                Action::STOP,
            ],
            vec![
                Action::send(Fanout::All, MessageType::TYPE1, c(ThresholdKind::One, 0)),
                Action::deliver(c(ThresholdKind::HalfNPlusF, 1)),
                Action::send(Fanout::All, MessageType::TYPE1, c(ThresholdKind::FPlusOne, 1)),
                Action::STOP,
            ],
        )
        .expect("well formed")
    }

    /// Byzantine-tolerant variant learned when crash tolerance drops to floor((N-1)/3).
    pub fn algorithm4() -> AlgorithmDraft {
        AlgorithmDraft::from_handlers(
            vec![
                Action::send(Fanout::Neighbours, MessageType::TYPE0, Condition::ZERO),
                Action::STOP,
            ],
            vec![
                Action::send(Fanout::Neighbours, MessageType::TYPE1, c(ThresholdKind::One, 0)),
                Action::send(Fanout::Neighbours, MessageType::TYPE1, c(ThresholdKind::FPlusOne, 1)),
                Action::deliver(c(ThresholdKind::FPlusOne, 1)),
                Action::STOP,
            ],
        )
        .expect("well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn p(n: usize, f: usize) -> SystemParams {
        SystemParams::new(n, f).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_count(ThresholdKind::HalfNPlusF, p(100, 33)), 67);
        assert_eq!(threshold_count(ThresholdKind::Zero, p(7, 2)), 0);
        assert_eq!(threshold_count(ThresholdKind::FPlusOne, p(4, 1)), 2);
        assert_eq!(threshold_count(ThresholdKind::HalfNPlusF, p(4, 1)), 3);
        assert_eq!(threshold_count(ThresholdKind::NMinusF, p(4, 1)), 3);
    }

    #[test]
    fn thresholds_are_ordered_within_byzantine_bound() {
        for n in 3..=10 {
            for f in 0..=SystemParams::byzantine_bound(n) {
                let sp = p(n, f);
                let counts: Vec<usize> = ThresholdKind::ALL.iter().map(|&k| threshold_count(k, sp)).collect();
                assert!(counts.windows(2).all(|w| w[0] <= w[1]), "n={n} f={f}: {counts:?}");
                assert!(counts[0] < counts[1]);
                assert!(threshold_count(ThresholdKind::NMinusF, sp) > f);
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(2, 0).is_err());
        assert!(SystemParams::new(3, 3).is_err());
        assert!(SystemParams::new(3, 2).is_ok());
    }

    #[test]
    fn zero_conditions_ignore_type() {
        assert_eq!(
            Condition::new(ThresholdKind::Zero, MessageType::TYPE1),
            Condition::new(ThresholdKind::Zero, MessageType::TYPE0)
        );
        assert_ne!(
            Condition::new(ThresholdKind::One, MessageType::TYPE1),
            Condition::new(ThresholdKind::One, MessageType::TYPE0)
        );
    }

    #[test]
    fn stop_rejects_non_zero_guard() {
        let guard = Condition::new(ThresholdKind::One, MessageType::TYPE0);
        assert_eq!(Action::new(Logic::Stop, guard), Err(ProtocolError::GuardedStop));
    }

    /// Independent brute force: every (logic, condition) pair of the cartesian
    /// product, keeping only legal ones, deduplicated through a set.
    fn brute_force_universe(max_types: u8) -> HashSet<Action> {
        let mut set = HashSet::new();
        let mut logics = vec![Logic::Deliver, Logic::Stop];
        for t in 0..max_types {
            for to in Fanout::ALL {
                logics.push(Logic::Send {
                    to,
                    msg_type: MessageType(t),
                });
            }
        }
        for logic in logics {
            for k in ThresholdKind::ALL {
                for t in 0..max_types {
                    if let Ok(a) = Action::new(logic, Condition::new(k, MessageType(t))) {
                        set.insert(a);
                    }
                }
            }
        }
        set
    }

    #[test]
    fn universe_for_two_types() {
        let actions = enumerate_actions(2);
        assert_eq!(actions.len(), 64);
        let distinct: HashSet<_> = actions.iter().copied().collect();
        assert_eq!(distinct.len(), 64);
        assert_eq!(distinct, brute_force_universe(2));
        assert_eq!(actions.iter().filter(|a| a.is_stop()).count(), 1);
        assert_eq!(actions.iter().filter(|a| a.is_deliver()).count(), 9);
        assert_eq!(actions.iter().filter(|a| a.sent_type().is_some()).count(), 54);
    }

    #[test]
    fn universe_for_one_type() {
        let actions = enumerate_actions(1);
        let oracle = brute_force_universe(1);
        assert_eq!(oracle.len(), 21);
        assert_eq!(actions.len(), oracle.len());
        assert_eq!(actions.iter().copied().collect::<HashSet<_>>(), oracle);
    }

    #[test]
    fn universe_is_stable() {
        assert_eq!(enumerate_actions(2), enumerate_actions(2));
    }

    #[test]
    fn empty_key() {
        let key = canonical_key(&AlgorithmDraft::new());
        assert_eq!(key.phase(), Phase::Broadcast);
        assert_eq!(key.to_string(), "B||");
    }

    #[test]
    fn key_ignores_intra_handler_order() {
        let a = Action::deliver(Condition::ZERO);
        let b = Action::send(Fanout::All, MessageType::TYPE1, Condition::ZERO);
        let mut d1 = AlgorithmDraft::new();
        let mut d2 = AlgorithmDraft::new();
        for d in [&mut d1, &mut d2] {
            d.push(Action::send(Fanout::All, MessageType::TYPE0, Condition::ZERO))
                .unwrap();
            d.push(Action::STOP).unwrap();
        }
        d1.push(a).unwrap();
        d1.push(b).unwrap();
        d2.push(b).unwrap();
        d2.push(a).unwrap();
        assert_eq!(canonical_key(&d1), canonical_key(&d2));
    }

    #[test]
    fn key_distinguishes_handlers() {
        let a = Action::send(Fanout::All, MessageType::TYPE0, Condition::ZERO);
        let mut in_broadcast = AlgorithmDraft::new();
        in_broadcast.push(a).unwrap();
        in_broadcast.push(Action::STOP).unwrap();
        let mut in_receive = AlgorithmDraft::new();
        in_receive.push(Action::STOP).unwrap();
        in_receive.push(a).unwrap();
        assert_ne!(canonical_key(&in_broadcast), canonical_key(&in_receive));
    }

    #[test]
    fn draft_rejects_push_after_done() {
        let mut d = reference::algorithm1();
        assert!(d.is_complete());
        assert_eq!(d.push(Action::STOP), Err(ProtocolError::DraftFinished));
    }

    #[test]
    fn from_handlers_requires_closing_stop() {
        let a = Action::deliver(Condition::ZERO);
        assert_eq!(
            AlgorithmDraft::from_handlers(vec![Action::STOP], vec![a]),
            Err(ProtocolError::HandlerNotClosed(HandlerId::Receive))
        );
        assert_eq!(
            AlgorithmDraft::from_handlers(vec![Action::STOP, a, Action::STOP], vec![Action::STOP]),
            Err(ProtocolError::ActionAfterStop(HandlerId::Broadcast))
        );
    }

    #[test]
    fn action_codes_round_trip() {
        for a in enumerate_actions(3) {
            assert_eq!(a.to_string().parse::<Action>(), Ok(a));
        }
        assert!("all:t0@one".parse::<Action>().is_err());
        assert!("stop@one:t0".parse::<Action>().is_err());
    }

    #[test]
    fn key_text_round_trip() {
        for alg in [reference::algorithm1(), reference::algorithm3(), AlgorithmDraft::new()] {
            let key = alg.key();
            assert_eq!(key.to_string().parse::<StateKey>(), Ok(key));
        }
    }

    #[test]
    fn key_to_draft_preserves_key() {
        let key = reference::algorithm3().key();
        let draft = key.to_draft();
        assert!(draft.is_complete());
        assert_eq!(draft.key(), key);
    }
}
