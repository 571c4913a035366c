use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::scenario::{fmt_set, Adversary, Content, Scenario};
use super::state::{Envelope, GlobalState, Machine};
use super::OracleError;
use crate::protocol::{Action, AlgorithmDraft, HandlerId, Logic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    /// RB-Broadcast at the initiator and the adversary's injection.
    Setup,
    Deliver(Envelope),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiredAction {
    pub process: u8,
    pub action: Action,
    pub content: Content,
    /// Destinations of a SEND; empty for DELIVER.
    pub recipients: Vec<u8>,
}

/// A crash in the middle of a SEND: only `sent_to` got the message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CrashPoint {
    pub process: u8,
    pub handler: HandlerId,
    pub action_index: usize,
    pub action: Action,
    pub content: Content,
    pub sent_to: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub event: Event,
    pub crash: Option<CrashPoint>,
    pub fired: Vec<FiredAction>,
}

/// Ordered transitions from the initial state to a violating terminal state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<Step>,
}

/// Re-executes `trace` and returns the state it ends in.
///
/// Fails if a step does not match any successor the transition relation offers.
pub fn replay(
    alg: &AlgorithmDraft,
    sc: &Scenario,
    fault_handlers: &BTreeSet<HandlerId>,
    trace: &Trace,
) -> Result<GlobalState, OracleError> {
    let m = Machine::new(alg, sc, fault_handlers)?;
    let mut state: Option<GlobalState> = None;
    for (i, step) in trace.steps.iter().enumerate() {
        let branches = match (step.event, &state) {
            (Event::Setup, None) => m.initial(),
            (Event::Deliver(env), Some(st)) => {
                let idx = st
                    .in_flight()
                    .iter()
                    .position(|e| *e == env)
                    .ok_or_else(|| OracleError::Replay(format!("step {}: {env} is not in flight", i + 1)))?;
                m.deliver(st, idx)
            }
            _ => return Err(OracleError::Replay(format!("step {}: unexpected event", i + 1))),
        };
        let next = branches
            .into_iter()
            .find(|b| b.step == *step)
            .ok_or_else(|| OracleError::Replay(format!("step {}: no matching successor", i + 1)))?;
        state = Some(next.state);
    }
    state.ok_or_else(|| OracleError::Replay("empty trace".into()))
}

fn describe_action(a: &FiredAction) -> String {
    match a.action.logic() {
        Logic::Send { msg_type, .. } => {
            format!("SEND <{msg_type},{}> to {}", a.content, fmt_set(&a.recipients))
        }
        Logic::Deliver => format!("DELIVER({})", a.content),
        Logic::Stop => "STOP".into(),
    }
}

pub(crate) fn write_trace(f: &mut fmt::Formatter<'_>, sc: &Scenario, trace: &Trace) -> fmt::Result {
    for (i, step) in trace.steps.iter().enumerate() {
        match step.event {
            Event::Setup => {
                writeln!(f, "{:>3}. setup", i + 1)?;
                if sc.mode != super::FailureMode::Byzantine || sc.initiator_correct() {
                    writeln!(f, "       p{}: RB-Broadcast(m)", sc.initiator)?;
                }
                if let Adversary::ByzantineInject {
                    msg_type,
                    content,
                    targets,
                } = &sc.adversary
                {
                    writeln!(
                        f,
                        "       {} inject <{msg_type},{content}> to {}",
                        fmt_set(&sc.faulty),
                        fmt_set(targets)
                    )?;
                }
            }
            Event::Deliver(env) => writeln!(f, "{:>3}. deliver {env}", i + 1)?,
        }
        for a in &step.fired {
            writeln!(f, "       p{}: {}", a.process, describe_action(a))?;
        }
        if let Some(c) = &step.crash {
            writeln!(
                f,
                "       p{} crashes during {} action {} after sending <{},{}> to {}",
                c.process,
                c.handler,
                c.action_index + 1,
                c.action.sent_type().expect("crashes happen inside sends"),
                c.content,
                fmt_set(&c.sent_to)
            )?;
        }
    }
    Ok(())
}
