use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PolicyParams;
use crate::protocol::{Action, StateKey};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub q: f64,
    pub visits: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateEntry {
    pub total_visits: u64,
    pub actions: HashMap<Action, ActionValue>,
}

/// Tabular action values keyed by canonical state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    states: HashMap<StateKey, StateEntry>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, s: &StateKey) -> Option<&StateEntry> {
        self.states.get(s)
    }

    pub fn get(&self, s: &StateKey, a: Action) -> ActionValue {
        self.states
            .get(s)
            .and_then(|e| e.actions.get(&a))
            .copied()
            .unwrap_or_default()
    }

    pub fn total_visits(&self, s: &StateKey) -> u64 {
        self.states.get(s).map_or(0, |e| e.total_visits)
    }

    /// Largest known action value at `s`; 0 for an unknown state.
    pub fn max_q(&self, s: &StateKey) -> f64 {
        self.states
            .get(s)
            .and_then(|e| e.actions.values().map(|v| v.q).reduce(f64::max))
            .unwrap_or(0.0)
    }
}

/// Upper-confidence choice among `candidates`; unvisited actions win outright
/// and exact ties are broken with `rng`.
pub fn ucb_select<R: Rng + ?Sized>(
    s: &StateKey,
    candidates: &[Action],
    q: &QTable,
    p: &PolicyParams,
    rng: &mut R,
) -> Action {
    assert!(!candidates.is_empty(), "ucb_select needs at least one candidate");
    let ln_total = ((q.total_visits(s) + 1) as f64).ln();
    let mut best: Vec<Action> = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    for &a in candidates {
        let v = q.get(s, a);
        let score = if v.visits == 0 {
            f64::INFINITY
        } else {
            v.q + p.ucb_c * (ln_total / v.visits as f64).sqrt()
        };
        if score > best_score {
            best_score = score;
            best.clear();
            best.push(a);
        } else if score == best_score {
            best.push(a);
        }
    }
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    }
}

/// One Q-learning backup of `(s, a)` towards `r + gamma * max_q(s_next)`.
pub fn q_update(q: &mut QTable, s: &StateKey, a: Action, r: f64, s_next: &StateKey, terminal: bool, p: &PolicyParams) {
    let future = if terminal { 0.0 } else { p.gamma * q.max_q(s_next) };
    let entry = q.states.entry(s.clone()).or_default();
    entry.total_visits += 1;
    let v = entry.actions.entry(a).or_default();
    v.q += p.alpha * (r + future - v.q);
    v.visits += 1;
}

#[derive(Serialize, Deserialize)]
struct StoredAction {
    action: String,
    q: f64,
    visits: u64,
}

#[derive(Serialize, Deserialize)]
struct StoredState {
    state: StateKey,
    total_visits: u64,
    actions: Vec<StoredAction>,
}

/// Stored as a list sorted by state key and action code, so equal tables
/// serialise to identical bytes.
impl Serialize for QTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let sorted: BTreeMap<&StateKey, &StateEntry> = self.states.iter().collect();
        let stored: Vec<StoredState> = sorted
            .into_iter()
            .map(|(k, e)| {
                let actions: BTreeMap<&Action, &ActionValue> = e.actions.iter().collect();
                StoredState {
                    state: k.clone(),
                    total_visits: e.total_visits,
                    actions: actions
                        .into_iter()
                        .map(|(a, v)| StoredAction {
                            action: a.to_string(),
                            q: v.q,
                            visits: v.visits,
                        })
                        .collect(),
                }
            })
            .collect();
        stored.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let stored = Vec::<StoredState>::deserialize(d)?;
        let mut states = HashMap::with_capacity(stored.len());
        for st in stored {
            let mut actions = HashMap::with_capacity(st.actions.len());
            for a in st.actions {
                let action: Action = a.action.parse().map_err(serde::de::Error::custom)?;
                actions.insert(
                    action,
                    ActionValue {
                        q: a.q,
                        visits: a.visits,
                    },
                );
            }
            states.insert(
                st.state,
                StateEntry {
                    total_visits: st.total_visits,
                    actions,
                },
            );
        }
        Ok(Self { states })
    }
}
