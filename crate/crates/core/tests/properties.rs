//! Property tests for the algorithm model, rewards and heuristic gate.

mod common;

use proptest::prelude::*;

use rbsynth::heuristics::{allowed_actions, BlockedStateRegistry, Heuristic, HeuristicConfig};
use rbsynth::protocol::{
    enumerate_actions, parse_algorithm, render_pseudocode, threshold_count, Action, AlgorithmDraft, HandlerId,
    LogicKind, MessageType, StateKey, SystemParams, ThresholdKind,
};
use rbsynth::reward::{bonus_reward, runtime_reward, EpisodeLedger, RewardConfig};

/// Handlers with their actions sorted, plus the phase.
fn sorted(d: &AlgorithmDraft) -> (Vec<Action>, Vec<Action>, rbsynth::protocol::Phase) {
    let mut b = d.broadcast_actions().to_vec();
    let mut r = d.receive_actions().to_vec();
    b.sort_unstable();
    r.sort_unstable();
    (b, r, d.phase())
}

fn complete(seed: u64) -> Option<AlgorithmDraft> {
    common::admissible(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn state_keys_round_trip(seed in any::<u64>()) {
        for d in common::walk(seed, &HeuristicConfig::default()) {
            let key = d.key();
            let text = key.to_string();
            let back: StateKey = text.parse().unwrap();
            prop_assert_eq!(&back, &key);
            let canon = key.to_draft();
            prop_assert_eq!(canon.key(), key.clone());
            prop_assert_eq!(sorted(&canon), sorted(&d));
            prop_assert_eq!(key.phase(), d.phase());
            prop_assert_eq!(key.is_terminal(), d.is_complete());
        }
    }

    #[test]
    fn equal_keys_iff_equal_drafts(a in any::<u64>(), b in any::<u64>()) {
        let wa = common::walk(a, &HeuristicConfig::default());
        let wb = common::walk(b, &HeuristicConfig::default());
        for x in &wa {
            for y in &wb {
                prop_assert_eq!(x.key() == y.key(), sorted(x) == sorted(y));
            }
        }
    }

    #[test]
    fn rendering_round_trips(seed in any::<u64>()) {
        let Some(d) = complete(seed) else { return Ok(()) };
        let text = render_pseudocode(&d).unwrap();
        prop_assert_eq!(parse_algorithm(&text).unwrap(), d);
    }

    #[test]
    fn walks_satisfy_every_heuristic(seed in any::<u64>()) {
        let Some(d) = complete(seed) else { return Ok(()) };
        let b = d.broadcast_actions();
        let r = d.receive_actions();
        for h in [b, r] {
            prop_assert!((2..=4).contains(&h.len()), "{}", d.key());
            prop_assert!(h.last().unwrap().is_stop());
            prop_assert_eq!(h.iter().filter(|a| a.is_stop()).count(), 1);
        }
        prop_assert!(r.iter().any(|a| a.is_deliver()));
        prop_assert!(!b.iter().any(|a| a.is_deliver()));
        prop_assert!(b.iter().filter_map(|a| a.sent_type()).all(|t| t == MessageType(0)));
        prop_assert!(b.iter().all(|a| a.condition().threshold() == ThresholdKind::Zero));
        prop_assert!(d.sent_types().collect::<std::collections::BTreeSet<_>>().len() <= 2);

        let all: Vec<Action> = d.actions().map(|(_, a)| a).filter(|a| !a.is_stop()).collect();
        for (i, a) in all.iter().enumerate() {
            prop_assert!(!all[..i].contains(a), "repeated {a:?}");
            if let Some(t) = a.condition().waits_on() {
                prop_assert!(all[..i].iter().any(|x| x.sent_type() == Some(t)), "waits on unsent {t}");
            }
            if let Some(t) = a.sent_type() {
                prop_assert!(
                    !all[..i].iter().any(|x| x.sent_type() == Some(t) && x.condition() == a.condition()),
                    "second send of {t} under one condition"
                );
            }
        }
    }

    #[test]
    fn disabling_a_heuristic_never_shrinks_the_allowed_set(seed in any::<u64>(), cap in 0usize..4) {
        let universe = enumerate_actions(4);
        let walk = common::walk(seed, &HeuristicConfig { max_types: 4, ..HeuristicConfig::default() });
        let blocked = BlockedStateRegistry::new();
        for d in walk.iter().filter(|d| !d.is_complete()).take(cap + 1) {
            let base = allowed_actions(d, &universe, &HeuristicConfig::default(), &blocked);
            prop_assert!(base.iter().all(|a| universe.contains(a)));
            for h in Heuristic::ALL {
                let wider = allowed_actions(d, &universe, &HeuristicConfig::with_disabled(h), &blocked);
                prop_assert!(base.iter().all(|a| wider.contains(a)), "disabling {h} removed an action");
                // stable order: the narrower list is a subsequence of the wider one
                let mut it = wider.iter();
                prop_assert!(base.iter().all(|a| it.any(|b| b == a)));
            }
        }
    }

    #[test]
    fn type_introduction_is_charged_once_per_type(picks in prop::collection::vec(0usize..1000, 1..10)) {
        let universe = enumerate_actions(4);
        let cfg = RewardConfig::default();
        let non_stop: Vec<Action> = universe.iter().copied().filter(|a| !a.is_stop()).collect();
        let mut d = AlgorithmDraft::new();
        let mut charged = [0i64; 4];
        for p in picks {
            let a = non_stop[p % non_stop.len()];
            let h = d.current_handler().unwrap();
            let r = runtime_reward(a, h, &d, &cfg);
            prop_assert_eq!(r, runtime_reward(a, h, &d, &cfg));
            let base = cfg.logic_reward(a.logic().kind()) + cfg.threshold_reward(a.condition().threshold()) + cfg.handler_reward(h);
            let intro = r - base;
            if intro != 0 {
                let t = a.sent_type().expect("only sends introduce types");
                prop_assert_eq!(intro, -(t.index() as i64));
                charged[t.index()] += 1;
            }
            d.push(a).unwrap();
        }
        prop_assert!(charged.iter().all(|&c| c <= 1), "{charged:?}");
    }

    #[test]
    fn bonus_tracks_the_runtime_sum(rewards in prop::collection::vec(-12i64..=0, 0..10)) {
        let cfg = RewardConfig::default();
        let mut ledger = EpisodeLedger::new();
        let key = AlgorithmDraft::new().key();
        for &r in &rewards {
            ledger.record(key.clone(), Action::STOP, r);
        }
        let sum: i64 = rewards.iter().sum();
        prop_assert_eq!(ledger.runtime_sum(), sum);
        prop_assert_eq!(bonus_reward(true, &ledger, &cfg), 100 + sum);
        prop_assert_eq!(bonus_reward(false, &ledger, &cfg), -1);
    }
}

#[test]
fn thresholds_are_ordered_for_byzantine_sizes() {
    for n in 3..=10 {
        for f in 0..=(n - 1) / 3 {
            let p = SystemParams::new(n, f).unwrap();
            let c: Vec<usize> = ThresholdKind::ALL.iter().map(|&k| threshold_count(k, p)).collect();
            assert!(c.windows(2).all(|w| w[0] <= w[1]), "N={n} F={f}: {c:?}");
            assert!(c[4] > f);
        }
    }
}

#[test]
fn handler_logic_defaults() {
    let cfg = HeuristicConfig::default();
    assert!(!cfg.broadcast_logics.contains(&LogicKind::Deliver));
    assert_eq!(cfg.receive_logics.len(), LogicKind::ALL.len());
    let d = AlgorithmDraft::new();
    assert_eq!(d.current_handler(), Some(HandlerId::Broadcast));
    let allowed = allowed_actions(&d, &enumerate_actions(2), &cfg, &BlockedStateRegistry::new());
    assert_eq!(allowed.len(), 3);
}
