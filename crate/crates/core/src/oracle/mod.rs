//! Exhaustive fault-injecting checker for RB-Validity, RB-Agreement and
//! RB-Integrity over fixed-size systems.

mod explore;
mod scenario;
mod state;
mod trace;

pub use explore::{explore, Exploration};
pub use scenario::{build_scenarios, Adversary, Content, Scenario};
pub use state::{Branch, Envelope, GlobalState, Machine, ProcessState, MAX_PROCESSES, MAX_TYPES};
pub use trace::{replay, CrashPoint, Event, FiredAction, Step, Trace};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{AlgorithmDraft, HandlerId, SystemParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("invalid value for `{key}`: {message}")]
    InvalidConfig { key: String, message: String },
    #[error("algorithm is incomplete")]
    Incomplete,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("state budget of {limit} exceeded while exploring scenario [{scenario}]")]
    StateBudget { scenario: String, limit: usize },
    #[error("replay failed: {0}")]
    Replay(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    NoFailure,
    Crash,
    Byzantine,
}

impl FailureMode {
    pub fn key(self) -> &'static str {
        match self {
            FailureMode::NoFailure => "no_failure",
            FailureMode::Crash => "crash",
            FailureMode::Byzantine => "byzantine",
        }
    }
}

impl fmt::Display for FailureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureMode::NoFailure => "No-Failure",
            FailureMode::Crash => "Crash-Failure",
            FailureMode::Byzantine => "Byzantine-Failure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Validity,
    Agreement,
    Integrity,
}

impl Property {
    pub const ALL: [Property; 3] = [Property::Validity, Property::Agreement, Property::Integrity];
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Validity => "RB-Validity",
            Property::Agreement => "RB-Agreement",
            Property::Integrity => "RB-Integrity",
        })
    }
}

/// Fault-tolerance ratio bounding F for a given N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ratio {
    /// F <= floor((N-1)/2)
    Half,
    /// F <= floor((N-1)/3)
    Third,
}

impl Ratio {
    pub fn bound(self, n: usize) -> usize {
        match self {
            Ratio::Half => SystemParams::crash_bound(n),
            Ratio::Third => SystemParams::byzantine_bound(n),
        }
    }
}

/// Per-mode system size. Unset fields take the mode's defaults; F defaults to
/// the largest value the ratio allows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeParams {
    pub n: Option<usize>,
    pub f: Option<usize>,
    pub ratio: Option<Ratio>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub modes: Vec<FailureMode>,
    pub no_failure: ModeParams,
    pub crash: ModeParams,
    pub byzantine: ModeParams,
    /// Handlers in which faulty processes may misbehave.
    pub fault_handlers: BTreeSet<HandlerId>,
    pub properties: BTreeSet<Property>,
    /// Expanded-state budget per scenario.
    pub max_states: usize,
    pub memoize: bool,
    pub reduction: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            modes: vec![FailureMode::NoFailure, FailureMode::Crash, FailureMode::Byzantine],
            no_failure: ModeParams::default(),
            crash: ModeParams::default(),
            byzantine: ModeParams::default(),
            fault_handlers: [HandlerId::Broadcast, HandlerId::Receive].into_iter().collect(),
            properties: Property::ALL.into_iter().collect(),
            max_states: 2_000_000,
            memoize: true,
            reduction: true,
        }
    }
}

impl OracleConfig {
    pub fn with_modes(modes: &[FailureMode]) -> Self {
        Self {
            modes: modes.to_vec(),
            ..Self::default()
        }
    }

    /// Configured modes, deduplicated, cheapest first.
    pub fn ordered_modes(&self) -> Vec<FailureMode> {
        let set: BTreeSet<FailureMode> = self.modes.iter().copied().collect();
        set.into_iter().collect()
    }

    pub fn mode_params(&self, mode: FailureMode) -> &ModeParams {
        match mode {
            FailureMode::NoFailure => &self.no_failure,
            FailureMode::Crash => &self.crash,
            FailureMode::Byzantine => &self.byzantine,
        }
    }

    pub fn mode_params_mut(&mut self, mode: FailureMode) -> &mut ModeParams {
        match mode {
            FailureMode::NoFailure => &mut self.no_failure,
            FailureMode::Crash => &mut self.crash,
            FailureMode::Byzantine => &mut self.byzantine,
        }
    }

    /// Resolved N and F for `mode`.
    pub fn params(&self, mode: FailureMode) -> Result<SystemParams, OracleError> {
        let mp = self.mode_params(mode);
        let key = |field: &str| format!("validation.{}.{field}", mode.key());
        let invalid = |field: &str, message: String| OracleError::InvalidConfig {
            key: key(field),
            message,
        };
        let n = mp.n.unwrap_or(match mode {
            FailureMode::Byzantine => 4,
            _ => 3,
        });
        if !(3..=MAX_PROCESSES).contains(&n) {
            return Err(invalid("n", format!("{n} is outside 3..={MAX_PROCESSES}")));
        }
        let f = match mode {
            FailureMode::NoFailure => match mp.f {
                None | Some(0) => 0,
                Some(f) => {
                    return Err(invalid(
                        "f",
                        format!("{f}, but the fault-free mode has no faulty process"),
                    ))
                }
            },
            _ => {
                let ratio = mp.ratio.unwrap_or(if mode == FailureMode::Crash {
                    Ratio::Half
                } else {
                    Ratio::Third
                });
                let bound = ratio.bound(n);
                match mp.f {
                    None => bound,
                    Some(f) if f <= bound => f,
                    Some(f) => {
                        return Err(invalid(
                            "f",
                            format!("{f} exceeds the {ratio:?} ratio bound {bound} at N = {n}"),
                        ))
                    }
                }
            }
        };
        SystemParams::new(n, f).map_err(|e| invalid("n", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.modes.is_empty() {
            return Err(OracleError::InvalidConfig {
                key: "validation.modes".into(),
                message: "at least one failure mode is required".into(),
            });
        }
        if self.max_states == 0 {
            return Err(OracleError::InvalidConfig {
                key: "validation.max_states".into(),
                message: "must be positive".into(),
            });
        }
        for mode in [FailureMode::NoFailure, FailureMode::Crash, FailureMode::Byzantine] {
            self.params(mode)?;
        }
        Ok(())
    }
}

/// A property violation with a replayable counterexample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub property: Property,
    pub scenario: Scenario,
    pub trace: Trace,
    pub terminal: GlobalState,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "violation of {}", self.property)?;
        writeln!(f, "scenario: {}", self.scenario)?;
        writeln!(f, "trace:")?;
        trace::write_trace(f, &self.scenario, &self.trace)?;
        writeln!(f, "final state:")?;
        write!(f, "{}", self.terminal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Violation(Box<Violation>),
}

impl Verdict {
    pub fn is_correct(&self) -> bool {
        matches!(self, Verdict::Correct)
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Verdict::Correct => None,
            Verdict::Violation(v) => Some(v),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Correct => f.write_str("Correct"),
            Verdict::Violation(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationSummary {
    pub verdict: Verdict,
    pub scenarios: usize,
    pub states: usize,
}

/// Explores every scenario in order and stops at the first violation.
pub fn validate(alg: &AlgorithmDraft, cfg: &OracleConfig) -> Result<Verdict, OracleError> {
    validate_summary(alg, cfg).map(|s| s.verdict)
}

pub fn validate_summary(alg: &AlgorithmDraft, cfg: &OracleConfig) -> Result<ValidationSummary, OracleError> {
    if !alg.is_complete() {
        return Err(OracleError::Incomplete);
    }
    let mut summary = ValidationSummary {
        verdict: Verdict::Correct,
        scenarios: 0,
        states: 0,
    };
    for sc in build_scenarios(alg, cfg)? {
        let ex = explore(alg, &sc, cfg)?;
        summary.scenarios += 1;
        summary.states += ex.states;
        if let Some(v) = ex.violation {
            summary.verdict = Verdict::Violation(Box::new(v));
            break;
        }
    }
    Ok(summary)
}
