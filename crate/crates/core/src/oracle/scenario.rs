use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FailureMode, OracleConfig, OracleError};
use crate::protocol::{AlgorithmDraft, HandlerId, MessageType, SystemParams};

/// The two payloads a single broadcast instance can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Content {
    /// The initiator's payload `m`.
    Legit,
    /// A forged payload `m'`.
    Malicious,
}

impl Content {
    pub const ALL: [Content; 2] = [Content::Legit, Content::Malicious];

    pub fn index(self) -> usize {
        match self {
            Content::Legit => 0,
            Content::Malicious => 1,
        }
    }
}

impl fmt::Display for Content {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Content::Legit => "m",
            Content::Malicious => "m'",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    NoAdversary,
    /// Faulty processes follow the algorithm and may halt part-way through any send.
    CrashDuringSend,
    /// Every faulty process sends `<msg_type, content>` once to each target and
    /// otherwise stays silent.
    ByzantineInject {
        msg_type: MessageType,
        content: Content,
        targets: Vec<u8>,
    },
}

/// One fault configuration explored exhaustively.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub mode: FailureMode,
    pub params: SystemParams,
    pub initiator: u8,
    /// Sorted process ids.
    pub faulty: Vec<u8>,
    pub adversary: Adversary,
}

impl Scenario {
    pub fn is_faulty(&self, p: u8) -> bool {
        self.faulty.contains(&p)
    }

    pub fn initiator_correct(&self) -> bool {
        !self.is_faulty(self.initiator)
    }

    pub fn correct(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.params.n as u8).filter(|&p| !self.is_faulty(p))
    }

    /// The same scenario with every process id `p` renamed to `perm[p]`.
    pub fn relabel(&self, perm: &[u8]) -> Scenario {
        let map = |p: u8| perm[p as usize];
        let mut faulty: Vec<u8> = self.faulty.iter().map(|&p| map(p)).collect();
        faulty.sort_unstable();
        let adversary = match &self.adversary {
            Adversary::ByzantineInject {
                msg_type,
                content,
                targets,
            } => {
                let mut targets: Vec<u8> = targets.iter().map(|&p| map(p)).collect();
                targets.sort_unstable();
                Adversary::ByzantineInject {
                    msg_type: *msg_type,
                    content: *content,
                    targets,
                }
            }
            other => other.clone(),
        };
        Scenario {
            mode: self.mode,
            params: self.params,
            initiator: map(self.initiator),
            faulty,
            adversary,
        }
    }
}

pub(crate) fn fmt_set(ids: &[u8]) -> String {
    let names: Vec<String> = ids.iter().map(|p| format!("p{p}")).collect();
    format!("{{{}}}", names.join(", "))
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, N={}, F={}, initiator p{} ({})",
            self.mode,
            self.params.n,
            self.params.f,
            self.initiator,
            if self.initiator_correct() { "correct" } else { "faulty" }
        )?;
        if !self.faulty.is_empty() {
            write!(f, ", faulty {}", fmt_set(&self.faulty))?;
        }
        match &self.adversary {
            Adversary::NoAdversary => Ok(()),
            Adversary::CrashDuringSend => f.write_str(", crash during send"),
            Adversary::ByzantineInject {
                msg_type,
                content,
                targets,
            } => write!(f, ", inject <{msg_type},{content}> to {}", fmt_set(targets)),
        }
    }
}

/// Types a Byzantine process may forge: every type the algorithm sends or waits on.
fn alphabet(alg: &AlgorithmDraft) -> Vec<MessageType> {
    let mut types: BTreeSet<MessageType> = alg.sent_types().collect();
    types.extend(alg.actions().filter_map(|(_, a)| a.condition().waits_on()));
    if types.is_empty() {
        types.insert(MessageType::TYPE0);
    }
    types.into_iter().collect()
}

/// Faulty sets for the faulty-initiator and faulty-relayer models.
fn fault_models(p: SystemParams, cfg: &OracleConfig) -> Vec<Vec<u8>> {
    let (n, f) = (p.n as u8, p.f as u8);
    let mut models = Vec::new();
    if cfg.fault_handlers.contains(&HandlerId::Broadcast) {
        let mut faulty = vec![0];
        faulty.extend(n - (f - 1)..n);
        models.push(faulty);
    }
    if cfg.fault_handlers.contains(&HandlerId::Receive) {
        models.push((n - f..n).collect());
    }
    models
}

/// Every scenario of every configured mode, cheapest mode first.
pub fn build_scenarios(alg: &AlgorithmDraft, cfg: &OracleConfig) -> Result<Vec<Scenario>, OracleError> {
    let mut out = Vec::new();
    for mode in cfg.ordered_modes() {
        let params = cfg.params(mode)?;
        let fault_free = Scenario {
            mode,
            params,
            initiator: 0,
            faulty: Vec::new(),
            adversary: Adversary::NoAdversary,
        };
        if mode == FailureMode::NoFailure || params.f == 0 {
            out.push(fault_free);
            continue;
        }
        for faulty in fault_models(params, cfg) {
            match mode {
                FailureMode::NoFailure => unreachable!(),
                FailureMode::Crash => out.push(Scenario {
                    faulty,
                    adversary: Adversary::CrashDuringSend,
                    ..fault_free.clone()
                }),
                FailureMode::Byzantine => {
                    let correct: Vec<u8> = (0..params.n as u8).filter(|p| !faulty.contains(p)).collect();
                    for msg_type in alphabet(alg) {
                        for content in Content::ALL {
                            for k in 0..=correct.len() {
                                out.push(Scenario {
                                    faulty: faulty.clone(),
                                    adversary: Adversary::ByzantineInject {
                                        msg_type,
                                        content,
                                        targets: correct[..k].to_vec(),
                                    },
                                    ..fault_free.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
