use std::collections::{BTreeSet, HashSet};

use super::scenario::{Adversary, Content, Scenario};
use super::state::{GlobalState, Machine};
use super::trace::{Step, Trace};
use super::{OracleConfig, OracleError, Property, Violation};
use crate::protocol::{AlgorithmDraft, MessageType};

/// Result of exhausting one scenario.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub violation: Option<Violation>,
    /// States expanded (after memoisation).
    pub states: usize,
}

/// Depth-first search over every delivery order of `sc`, checking the enabled
/// properties at each terminal state. The first violation found is returned.
pub fn explore(alg: &AlgorithmDraft, sc: &Scenario, cfg: &OracleConfig) -> Result<Exploration, OracleError> {
    let machine = Machine::new(alg, sc, &cfg.fault_handlers)?;
    let mut ex = Explorer {
        machine,
        cfg,
        broadcast_types: alg.broadcast_actions().iter().filter_map(|a| a.sent_type()).collect(),
        visited: HashSet::new(),
        states: 0,
        path: Vec::new(),
    };
    let mut found = None;
    for b in ex.machine.initial() {
        ex.path.push(b.step);
        if let Some(hit) = ex.dfs(b.state)? {
            found = Some(hit);
            break;
        }
        ex.path.pop();
    }
    let violation = found.map(|(property, terminal)| Violation {
        property,
        scenario: sc.clone(),
        trace: Trace {
            steps: std::mem::take(&mut ex.path),
        },
        terminal,
    });
    Ok(Exploration {
        violation,
        states: ex.states,
    })
}

struct Explorer<'a> {
    machine: Machine<'a>,
    cfg: &'a OracleConfig,
    broadcast_types: BTreeSet<MessageType>,
    visited: HashSet<GlobalState>,
    states: usize,
    path: Vec<Step>,
}

impl Explorer<'_> {
    fn dfs(&mut self, st: GlobalState) -> Result<Option<(Property, GlobalState)>, OracleError> {
        if self.cfg.memoize && !self.visited.insert(st.clone()) {
            return Ok(None);
        }
        self.states += 1;
        if self.states > self.cfg.max_states {
            return Err(OracleError::StateBudget {
                scenario: self.machine.scenario().to_string(),
                limit: self.cfg.max_states,
            });
        }
        if st.is_terminal() {
            return Ok(self.check(&st).map(|p| (p, st)));
        }
        for idx in self.choices(&st) {
            for b in self.machine.deliver(&st, idx) {
                self.path.push(b.step);
                if let Some(hit) = self.dfs(b.state)? {
                    return Ok(Some(hit));
                }
                self.path.pop();
            }
        }
        Ok(None)
    }

    /// Deliveries to explore from `st`.
    ///
    /// A delivery to a process that cannot fork commutes with every other
    /// transition and stays enabled until taken, so exploring it alone keeps
    /// every reachable terminal state.
    fn choices(&self, st: &GlobalState) -> Vec<usize> {
        let flight = st.in_flight();
        if self.cfg.reduction {
            if let Some(i) = flight.iter().position(|e| !self.machine.branches_at(st, e.to)) {
                return vec![i];
            }
        }
        (0..flight.len())
            .filter(|&i| i == 0 || flight[i] != flight[i - 1])
            .collect()
    }

    fn check(&self, st: &GlobalState) -> Option<Property> {
        let sc = self.machine.scenario();
        let enabled = |p| self.cfg.properties.contains(&p);
        let correct: Vec<u8> = sc.correct().collect();

        if enabled(Property::Validity) && sc.initiator_correct() && !st.process(sc.initiator).delivered(Content::Legit)
        {
            return Some(Property::Validity);
        }
        if enabled(Property::Agreement) {
            for c in Content::ALL {
                let n = correct.iter().filter(|&&p| st.process(p).delivered(c)).count();
                if n > 0 && n < correct.len() {
                    return Some(Property::Agreement);
                }
            }
        }
        if enabled(Property::Integrity) {
            for c in Content::ALL {
                if correct.iter().any(|&p| st.process(p).delivered(c)) && !self.broadcast_by_allowed_party(c) {
                    return Some(Property::Integrity);
                }
            }
        }
        None
    }

    /// Whether some process entitled to originate `c` exists in this scenario.
    ///
    /// A faulty initiator may broadcast anything. A forged message of a type the
    /// RB-Broadcast handler sends is indistinguishable from the forger
    /// broadcasting that content itself.
    fn broadcast_by_allowed_party(&self, c: Content) -> bool {
        let sc = self.machine.scenario();
        if !sc.initiator_correct() {
            return true;
        }
        if c == Content::Legit {
            return true;
        }
        match &sc.adversary {
            Adversary::ByzantineInject { msg_type, content, .. } => {
                *content == c && self.broadcast_types.contains(msg_type)
            }
            _ => false,
        }
    }
}
