use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::scenario::{fmt_set, Adversary, Content, Scenario};
use super::trace::{CrashPoint, Event, FiredAction, Step};
use super::{FailureMode, OracleError};
use crate::protocol::{threshold_count, Action, AlgorithmDraft, Fanout, HandlerId, Logic, MessageType};

/// Largest supported system size; sender sets are `u16` bitmaps.
pub const MAX_PROCESSES: usize = 16;
/// Largest supported number of message types.
pub const MAX_TYPES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Envelope {
    pub from: u8,
    pub to: u8,
    pub msg_type: MessageType,
    pub content: Content,
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{},{}> from p{} to p{}",
            self.msg_type, self.content, self.from, self.to
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcessState {
    /// Distinct senders per (type, content).
    received: [[u16; 2]; MAX_TYPES],
    /// "Not already sent" guards, bit `type * 2 + content`.
    sent: u8,
    /// "Not already delivered" guards, bit per content.
    delivered: u8,
    crashed: bool,
}

impl ProcessState {
    pub fn senders(&self, t: MessageType, c: Content) -> usize {
        self.received[t.index()][c.index()].count_ones() as usize
    }

    pub fn has_sent(&self, t: MessageType, c: Content) -> bool {
        self.sent & guard_bit(t, c) != 0
    }

    pub fn delivered(&self, c: Content) -> bool {
        self.delivered & (1 << c.index()) != 0
    }

    pub fn crashed(&self) -> bool {
        self.crashed
    }

    /// Number of (sender, type, content) entries in the ledger.
    pub fn ledger_size(&self) -> usize {
        self.received.iter().flatten().map(|s| s.count_ones() as usize).sum()
    }
}

fn guard_bit(t: MessageType, c: Content) -> u8 {
    1 << (t.index() * 2 + c.index())
}

/// Snapshot of every process plus the in-flight multiset (kept sorted, so
/// structural equality is the memoisation fingerprint).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalState {
    procs: Vec<ProcessState>,
    in_flight: Vec<Envelope>,
}

impl GlobalState {
    fn new(n: usize) -> Self {
        Self {
            procs: vec![ProcessState::default(); n],
            in_flight: Vec::new(),
        }
    }

    pub fn process(&self, p: u8) -> &ProcessState {
        &self.procs[p as usize]
    }

    pub fn in_flight(&self) -> &[Envelope] {
        &self.in_flight
    }

    pub fn is_terminal(&self) -> bool {
        self.in_flight.is_empty()
    }
}

/// One successor of a transition.
pub struct Branch {
    pub state: GlobalState,
    pub step: Step,
}

/// Transition relation of one (algorithm, scenario) pair.
pub struct Machine<'a> {
    alg: &'a AlgorithmDraft,
    sc: &'a Scenario,
    crash_handlers: BTreeSet<HandlerId>,
}

impl<'a> Machine<'a> {
    pub fn new(
        alg: &'a AlgorithmDraft,
        sc: &'a Scenario,
        fault_handlers: &BTreeSet<HandlerId>,
    ) -> Result<Self, OracleError> {
        if !alg.is_complete() {
            return Err(OracleError::Incomplete);
        }
        if sc.params.n > MAX_PROCESSES {
            return Err(OracleError::Unsupported(format!(
                "N = {} exceeds the supported maximum of {MAX_PROCESSES}",
                sc.params.n
            )));
        }
        let too_wide = alg
            .actions()
            .flat_map(|(_, a)| a.sent_type().into_iter().chain(a.condition().waits_on()))
            .any(|t| t.index() >= MAX_TYPES);
        if too_wide {
            return Err(OracleError::Unsupported(format!("more than {MAX_TYPES} message types")));
        }
        let crash_handlers = if sc.adversary == Adversary::CrashDuringSend {
            fault_handlers.clone()
        } else {
            BTreeSet::new()
        };
        Ok(Self {
            alg,
            sc,
            crash_handlers,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        self.sc
    }

    fn is_byzantine(&self, p: u8) -> bool {
        self.sc.mode == FailureMode::Byzantine && self.sc.is_faulty(p)
    }

    fn may_crash(&self, st: &GlobalState, p: u8, h: HandlerId) -> bool {
        self.sc.is_faulty(p) && !st.procs[p as usize].crashed && self.crash_handlers.contains(&h)
    }

    /// True if delivering to `p` can fork (a crash-faulty process that may still crash).
    pub fn branches_at(&self, st: &GlobalState, p: u8) -> bool {
        self.may_crash(st, p, HandlerId::Receive)
    }

    /// The initiator's RB-Broadcast plus any Byzantine injection.
    pub fn initial(&self) -> Vec<Branch> {
        let mut st = GlobalState::new(self.sc.params.n);
        if let Adversary::ByzantineInject {
            msg_type,
            content,
            targets,
        } = &self.sc.adversary
        {
            for &from in &self.sc.faulty {
                for &to in targets {
                    st.in_flight.push(Envelope {
                        from,
                        to,
                        msg_type: *msg_type,
                        content: *content,
                    });
                }
            }
        }
        let event = Event::Setup;
        let p = self.sc.initiator;
        if self.is_byzantine(p) {
            st.in_flight.sort_unstable();
            return vec![Branch {
                state: st,
                step: Step {
                    event,
                    crash: None,
                    fired: Vec::new(),
                },
            }];
        }
        self.run_handler(st, p, HandlerId::Broadcast, Content::Legit, event)
    }

    /// Every successor of delivering `st.in_flight[idx]`.
    pub fn deliver(&self, st: &GlobalState, idx: usize) -> Vec<Branch> {
        let mut next = st.clone();
        let env = next.in_flight.remove(idx);
        let event = Event::Deliver(env);
        let dest = &mut next.procs[env.to as usize];
        if dest.crashed || self.is_byzantine(env.to) {
            return vec![Branch {
                state: next,
                step: Step {
                    event,
                    crash: None,
                    fired: Vec::new(),
                },
            }];
        }
        dest.received[env.msg_type.index()][env.content.index()] |= 1 << env.from;
        self.run_handler(next, env.to, HandlerId::Receive, env.content, event)
    }

    fn condition_holds(&self, ps: &ProcessState, a: Action, c: Content) -> bool {
        match a.condition().waits_on() {
            None => true,
            Some(t) => ps.senders(t, c) >= threshold_count(a.condition().threshold(), self.sc.params),
        }
    }

    fn recipients(&self, p: u8, to: Fanout) -> Vec<u8> {
        match to {
            Fanout::All => (0..self.sc.params.n as u8).collect(),
            Fanout::Neighbours => (0..self.sc.params.n as u8).filter(|&q| q != p).collect(),
            Fanout::Myself => vec![p],
        }
    }

    /// Evaluates handler `h` of process `p` for content `c` in stored action order.
    ///
    /// A single pass suffices: firing never raises a local sender count, so no
    /// earlier action can become enabled by a later one.
    fn run_handler(&self, mut st: GlobalState, p: u8, h: HandlerId, c: Content, event: Event) -> Vec<Branch> {
        let can_crash = self.may_crash(&st, p, h);
        let mut fired = Vec::new();
        let mut out = Vec::new();
        for (index, &a) in self.alg.handler(h).iter().enumerate() {
            let ps = &st.procs[p as usize];
            if !self.condition_holds(ps, a, c) {
                continue;
            }
            match a.logic() {
                Logic::Stop => {}
                Logic::Deliver => {
                    if !ps.delivered(c) {
                        st.procs[p as usize].delivered |= 1 << c.index();
                        fired.push(FiredAction {
                            process: p,
                            action: a,
                            content: c,
                            recipients: Vec::new(),
                        });
                    }
                }
                Logic::Send { to, msg_type } => {
                    if ps.has_sent(msg_type, c) {
                        continue;
                    }
                    st.procs[p as usize].sent |= guard_bit(msg_type, c);
                    let rcpt = self.recipients(p, to);
                    if can_crash {
                        for mask in 0..(1u32 << rcpt.len()) - 1 {
                            let subset: Vec<u8> = rcpt
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, &q)| q)
                                .collect();
                            let mut crashed = st.clone();
                            push_all(&mut crashed, p, &subset, msg_type, c);
                            crashed.procs[p as usize].crashed = true;
                            crashed.in_flight.sort_unstable();
                            out.push(Branch {
                                state: crashed,
                                step: Step {
                                    event,
                                    crash: Some(CrashPoint {
                                        process: p,
                                        handler: h,
                                        action_index: index,
                                        action: a,
                                        content: c,
                                        sent_to: subset,
                                    }),
                                    fired: fired.clone(),
                                },
                            });
                        }
                    }
                    push_all(&mut st, p, &rcpt, msg_type, c);
                    fired.push(FiredAction {
                        process: p,
                        action: a,
                        content: c,
                        recipients: rcpt,
                    });
                }
            }
        }
        st.in_flight.sort_unstable();
        // the no-crash branch goes first so traces prefer the plain execution
        out.insert(
            0,
            Branch {
                state: st,
                step: Step {
                    event,
                    crash: None,
                    fired,
                },
            },
        );
        out
    }
}

fn push_all(st: &mut GlobalState, from: u8, to: &[u8], msg_type: MessageType, content: Content) {
    st.in_flight.extend(to.iter().map(|&to| Envelope {
        from,
        to,
        msg_type,
        content,
    }));
}

impl fmt::Display for GlobalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, ps) in self.procs.iter().enumerate() {
            let delivered: Vec<String> = Content::ALL
                .into_iter()
                .filter(|&c| ps.delivered(c))
                .map(|c| c.to_string())
                .collect();
            write!(f, "p{p}: delivered {{{}}}", delivered.join(", "))?;
            if ps.crashed {
                f.write_str(", crashed")?;
            }
            writeln!(f)?;
        }
        if !self.in_flight.is_empty() {
            let pending: Vec<u8> = self.in_flight.iter().map(|e| e.to).collect();
            writeln!(f, "in flight to {}", fmt_set(&pending))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{reference, SystemParams};

    fn fault_free(n: usize) -> Scenario {
        Scenario {
            mode: FailureMode::NoFailure,
            params: SystemParams::new(n, 0).unwrap(),
            initiator: 0,
            faulty: Vec::new(),
            adversary: Adversary::NoAdversary,
        }
    }

    fn handlers() -> BTreeSet<HandlerId> {
        [HandlerId::Broadcast, HandlerId::Receive].into_iter().collect()
    }

    #[test]
    fn algorithm1_single_delivery() {
        let alg = reference::algorithm1();
        let sc = fault_free(3);
        let m = Machine::new(&alg, &sc, &handlers()).unwrap();
        let init = m.initial();
        assert_eq!(init.len(), 1);
        let st = &init[0].state;
        assert_eq!(st.in_flight().len(), 3);
        let idx = st.in_flight().iter().position(|e| e.to == 1).unwrap();
        let next = m.deliver(st, idx);
        assert_eq!(next.len(), 1);
        let after = &next[0].state;
        assert!(after.process(1).delivered(Content::Legit));
        assert_eq!(after.in_flight().len(), 2);
    }

    #[test]
    fn second_copy_does_not_redeliver() {
        let alg = reference::algorithm1();
        let sc = fault_free(3);
        let m = Machine::new(&alg, &sc, &handlers()).unwrap();
        let mut st = m.initial().remove(0).state;
        st.in_flight.push(Envelope {
            from: 2,
            to: 1,
            msg_type: MessageType::TYPE0,
            content: Content::Legit,
        });
        st.in_flight.sort_unstable();
        let first = st.in_flight().iter().position(|e| e.to == 1).unwrap();
        let st = m.deliver(&st, first).remove(0).state;
        let second = st.in_flight().iter().position(|e| e.to == 1).unwrap();
        let branch = m.deliver(&st, second).remove(0);
        assert_eq!(branch.state.process(1).ledger_size(), 2);
        assert!(branch.step.fired.is_empty());
    }

    #[test]
    fn crashed_process_absorbs() {
        let alg = reference::algorithm1();
        let sc = Scenario {
            mode: FailureMode::Crash,
            params: SystemParams::new(3, 1).unwrap(),
            initiator: 0,
            faulty: vec![0],
            adversary: Adversary::CrashDuringSend,
        };
        let m = Machine::new(&alg, &sc, &handlers()).unwrap();
        let init = m.initial();
        // full send plus the 7 strict subsets of three recipients
        assert_eq!(init.len(), 8);
        let partial = init
            .iter()
            .find(|b| b.state.in_flight().len() == 1 && b.state.in_flight()[0].to == 0)
            .unwrap();
        let after = m.deliver(&partial.state, 0).remove(0).state;
        assert!(after.in_flight().is_empty());
        assert_eq!(after.process(0), partial.state.process(0));
    }

    #[test]
    fn rejects_oversized_systems() {
        let alg = reference::algorithm1();
        let sc = fault_free(17);
        assert!(matches!(
            Machine::new(&alg, &sc, &handlers()),
            Err(OracleError::Unsupported(_))
        ));
    }
}
