//! Synthesis of reliable broadcast algorithms: a tabular Q-learner proposes
//! two-handler algorithms and an exhaustive model checker accepts or rejects them.

pub mod config;
pub mod harness;
pub mod heuristics;
pub mod learner;
pub mod oracle;
pub mod protocol;
pub mod reward;
