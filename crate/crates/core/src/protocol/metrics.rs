use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{threshold_count, AlgorithmDraft, Fanout, HandlerId, Logic, MessageType, ProtocolError, SystemParams};

/// Cost of a complete algorithm at a given system size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EfficiencyMetrics {
    /// Worst-case number of messages sent in one execution.
    pub messages_worst_case: usize,
    /// Distinct message types that travel between processes.
    pub comm_steps: usize,
    /// Messages a process must receive before DELIVER fires; 0 if it never delivers.
    pub deliver_cost: usize,
}

pub fn efficiency_metrics(alg: &AlgorithmDraft, params: SystemParams) -> Result<EfficiencyMetrics, ProtocolError> {
    if !alg.is_complete() {
        return Err(ProtocolError::Incomplete);
    }

    let mut messages = 0;
    for (handler, multiplicity) in [(HandlerId::Broadcast, 1), (HandlerId::Receive, params.n)] {
        // The not-already-sent guard is shared per sent type, so each type costs
        // one fanout per executing process; the widest fanout is the worst case.
        let mut widest: BTreeMap<MessageType, usize> = BTreeMap::new();
        for a in alg.handler(handler) {
            if let Logic::Send { to, msg_type } = a.logic() {
                let w = widest.entry(msg_type).or_default();
                *w = (*w).max(to.recipients(params.n));
            }
        }
        messages += widest.values().sum::<usize>() * multiplicity;
    }

    let comm_steps = alg
        .actions()
        .filter_map(|(_, a)| match a.logic() {
            Logic::Send { to, msg_type } if to != Fanout::Myself => Some(msg_type),
            _ => None,
        })
        .collect::<BTreeSet<_>>()
        .len();

    let deliver_cost = alg
        .actions()
        .filter(|(_, a)| a.is_deliver())
        .map(|(_, a)| threshold_count(a.condition().threshold(), params).max(1))
        .min()
        .unwrap_or(0);

    Ok(EfficiencyMetrics {
        messages_worst_case: messages,
        comm_steps,
        deliver_cost,
    })
}
