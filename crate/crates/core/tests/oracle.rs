//! Cross-checks of the exhaustive oracle: the search optimisations against the
//! plain search, symmetry, replayable counterexamples and message bounds.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbsynth::config::RunConfig;
use rbsynth::oracle::{
    build_scenarios, explore, replay, validate, Adversary, Content, FailureMode, GlobalState, Machine, ModeParams,
    OracleConfig, OracleError, Scenario,
};
use rbsynth::protocol::{reference, AlgorithmDraft};

fn config(mode: FailureMode, n: usize, f: usize) -> OracleConfig {
    let mut cfg = OracleConfig::with_modes(&[mode]);
    *cfg.mode_params_mut(mode) = ModeParams {
        n: Some(n),
        f: Some(f),
        ratio: None,
    };
    cfg
}

fn small_configs() -> Vec<OracleConfig> {
    vec![
        config(FailureMode::NoFailure, 3, 0),
        config(FailureMode::Crash, 3, 1),
        config(FailureMode::Byzantine, 4, 1),
    ]
}

/// Violation found (if any) for each scenario, in scenario order; `None` if a
/// scenario runs out of state budget.
fn per_scenario(alg: &AlgorithmDraft, cfg: &OracleConfig) -> Option<Vec<bool>> {
    let mut out = Vec::new();
    for sc in build_scenarios(alg, cfg).unwrap() {
        match explore(alg, &sc, cfg) {
            Ok(ex) => out.push(ex.violation.is_some()),
            Err(OracleError::StateBudget { .. }) => return None,
            Err(e) => panic!("{e}"),
        }
    }
    Some(out)
}

#[test]
fn optimisations_never_change_a_verdict() {
    let corpus = common::admissible_corpus(0, 40);
    let (mut compared, mut total) = (0, 0);
    for base in small_configs() {
        for alg in &corpus {
            let expected = per_scenario(alg, &base).expect("optimised search fits the budget");
            for (memoize, reduction) in [(false, false), (true, false), (false, true)] {
                let cfg = OracleConfig {
                    memoize,
                    reduction,
                    max_states: 200_000,
                    ..base.clone()
                };
                total += 1;
                // without memoisation some runs are too large to finish
                let Some(got) = per_scenario(alg, &cfg) else { continue };
                compared += 1;
                assert_eq!(
                    got,
                    expected,
                    "memoize={memoize} reduction={reduction} {:?}\n{}",
                    base.modes,
                    alg.key()
                );
            }
        }
    }
    assert!(
        compared * 10 >= total * 8,
        "only {compared} of {total} comparisons finished"
    );
}

#[test]
fn memoisation_expands_fewer_states() {
    let alg = reference::algorithm2();
    let cfg = config(FailureMode::Crash, 3, 1);
    let scs = build_scenarios(&alg, &cfg).unwrap();
    let sc = scs.last().unwrap();
    let unreduced = OracleConfig {
        reduction: false,
        ..cfg
    };
    let plain = explore(
        &alg,
        sc,
        &OracleConfig {
            memoize: false,
            ..unreduced.clone()
        },
    )
    .unwrap();
    let memo = explore(&alg, sc, &unreduced).unwrap();
    assert!(memo.states < plain.states, "{} vs {}", memo.states, plain.states);
}

fn rotate(n: usize, by: usize) -> Vec<u8> {
    (0..n).map(|p| ((p + by) % n) as u8).collect()
}

#[test]
fn process_names_do_not_matter() {
    let mut corpus = common::admissible_corpus(500, 25);
    corpus.extend([
        reference::algorithm1(),
        reference::algorithm2(),
        reference::algorithm3(),
        reference::algorithm4(),
    ]);
    for cfg in small_configs() {
        for alg in &corpus {
            for sc in build_scenarios(alg, &cfg).unwrap() {
                let n = sc.params.n;
                let expected = explore(alg, &sc, &cfg).unwrap().violation.map(|v| v.property);
                let reversed: Vec<u8> = (0..n as u8).rev().collect();
                for perm in [rotate(n, 1), rotate(n, n - 1), reversed] {
                    let moved = sc.relabel(&perm);
                    let got = explore(alg, &moved, &cfg).unwrap().violation.map(|v| v.property);
                    assert_eq!(got, expected, "{sc} relabelled by {perm:?}\n{}", alg.key());
                }
            }
        }
    }
}

#[test]
fn counterexamples_replay_to_their_final_state() {
    let mut checked = 0;
    for cfg in small_configs() {
        for alg in common::admissible_corpus(1000, 60) {
            let Some(v) = validate(&alg, &cfg).unwrap().violation().cloned() else {
                continue;
            };
            let end = replay(&alg, &v.scenario, &cfg.fault_handlers, &v.trace).unwrap();
            assert_eq!(end, v.terminal, "{}", alg.key());
            assert!(end.is_terminal());
            checked += 1;
        }
    }
    assert!(checked > 50, "only {checked} counterexamples");
}

#[test]
fn tampered_traces_are_rejected() {
    let alg = reference::algorithm1();
    let cfg = config(FailureMode::Crash, 3, 1);
    let v = validate(&alg, &cfg).unwrap().violation().cloned().unwrap();
    let mut trace = v.trace.clone();
    trace.steps.swap(0, 1);
    assert!(replay(&alg, &v.scenario, &cfg.fault_handlers, &trace).is_err());
    trace.steps.clear();
    assert!(replay(&alg, &v.scenario, &cfg.fault_handlers, &trace).is_err());
}

/// Runs one random execution to completion, returning the messages sent by
/// processes (not injected by the adversary) and the final state.
fn random_run(m: &Machine<'_>, rng: &mut ChaCha8Rng) -> (usize, GlobalState) {
    let pick = |rng: &mut ChaCha8Rng, mut b: Vec<rbsynth::oracle::Branch>| {
        let i = rng.gen_range(0..b.len());
        b.swap_remove(i)
    };
    let first = pick(rng, m.initial());
    let mut sent: usize = first.step.fired.iter().map(|a| a.recipients.len()).sum();
    sent += first.step.crash.iter().map(|c| c.sent_to.len()).sum::<usize>();
    let mut st = first.state;
    while !st.is_terminal() {
        let idx = rng.gen_range(0..st.in_flight().len());
        let b = pick(rng, m.deliver(&st, idx));
        sent += b.step.fired.iter().map(|a| a.recipients.len()).sum::<usize>();
        sent += b.step.crash.iter().map(|c| c.sent_to.len()).sum::<usize>();
        st = b.state;
    }
    (sent, st)
}

#[test]
fn message_production_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for cfg in small_configs() {
        for alg in common::admissible_corpus(2000, 30) {
            let types = alg.sent_types().map(|t| t.index() + 1).max().unwrap_or(0);
            for sc in build_scenarios(&alg, &cfg).unwrap() {
                let n = sc.params.n;
                let m = Machine::new(&alg, &sc, &cfg.fault_handlers).unwrap();
                for _ in 0..5 {
                    let (sent, st) = random_run(&m, &mut rng);
                    assert!(sent <= n * types * 2 * n, "{sent} messages in {sc}\n{}", alg.key());
                    for p in 0..n as u8 {
                        assert!(st.process(p).ledger_size() <= n * types.max(1) * 2);
                    }
                }
            }
        }
    }
}

#[test]
fn injected_messages_match_the_scenario() {
    let alg = reference::algorithm3();
    let cfg = config(FailureMode::Byzantine, 4, 1);
    for sc in build_scenarios(&alg, &cfg).unwrap() {
        let Adversary::ByzantineInject { targets, .. } = &sc.adversary else {
            panic!("{sc}");
        };
        let m = Machine::new(&alg, &sc, &cfg.fault_handlers).unwrap();
        for b in m.initial() {
            let injected = b.state.in_flight().iter().filter(|e| sc.is_faulty(e.from)).count();
            assert_eq!(injected, sc.faulty.len() * targets.len(), "{sc}");
        }
    }
}

fn byzantine_correct(alg: &AlgorithmDraft, n: usize, f: usize) -> bool {
    validate(alg, &config(FailureMode::Byzantine, n, f))
        .unwrap()
        .is_correct()
}

/// Correct algorithms found by walking the admissible space under the
/// Byzantine-only check.
fn byzantine_corpus(target: usize) -> Vec<AlgorithmDraft> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for seed in 0..200_000u64 {
        let Some(alg) = common::admissible(seed) else { continue };
        if seen.insert(alg.key()) && byzantine_correct(&alg, 4, 1) {
            out.push(alg);
            if out.len() == target {
                break;
            }
        }
    }
    out
}

#[test]
fn byzantine_tolerance_implies_crash_tolerance() {
    let corpus = byzantine_corpus(25);
    assert!(!corpus.is_empty());
    let crash = config(FailureMode::Crash, 4, 1);
    for alg in &corpus {
        let v = validate(alg, &crash).unwrap();
        assert!(v.is_correct(), "{}\n{v}", alg.key());
    }
}

#[test]
fn byzantine_preset_rejects_almost_every_random_algorithm() {
    let cfg = RunConfig::preset("byzantine").unwrap().validation;
    assert!(validate(&reference::algorithm3(), &cfg).unwrap().is_correct());
    let corpus = common::admissible_corpus(10_000, 1000);
    let accepted = corpus
        .iter()
        .filter(|a| validate(a, &cfg).unwrap().is_correct())
        .count();
    assert!(accepted * 20 <= corpus.len(), "{accepted} of {} accepted", corpus.len());
}

/// Every initiator, every faulty set of size F and, for Byzantine mode, every
/// injection type, content and target subset.
fn all_placements(alg: &AlgorithmDraft, cfg: &OracleConfig) -> Vec<Scenario> {
    let reps = build_scenarios(alg, cfg).unwrap();
    let base = &reps[0];
    let n = base.params.n as u8;
    let f = base.params.f as u32;
    let mut types: Vec<_> = reps
        .iter()
        .filter_map(|s| match &s.adversary {
            Adversary::ByzantineInject { msg_type, .. } => Some(*msg_type),
            _ => None,
        })
        .collect();
    types.dedup();
    let mut out = Vec::new();
    for initiator in 0..n {
        for mask in 0u32..1 << n {
            if mask.count_ones() != f {
                continue;
            }
            let faulty: Vec<u8> = (0..n).filter(|p| mask & (1 << p) != 0).collect();
            let correct: Vec<u8> = (0..n).filter(|p| mask & (1 << p) == 0).collect();
            let sc = Scenario {
                initiator,
                faulty: faulty.clone(),
                ..base.clone()
            };
            if base.mode != FailureMode::Byzantine {
                out.push(sc);
                continue;
            }
            for &msg_type in &types {
                for content in Content::ALL {
                    for tmask in 0u32..1 << correct.len() {
                        let targets = correct
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| tmask & (1 << i) != 0)
                            .map(|(_, &p)| p)
                            .collect();
                        out.push(Scenario {
                            adversary: Adversary::ByzantineInject {
                                msg_type,
                                content,
                                targets,
                            },
                            ..sc.clone()
                        });
                    }
                }
            }
        }
    }
    out
}

#[test]
fn representative_scenarios_stand_for_every_fault_placement() {
    let mut corpus = common::admissible_corpus(3000, 20);
    corpus.extend([
        reference::algorithm2(),
        reference::algorithm3(),
        reference::algorithm4(),
    ]);
    for cfg in [
        config(FailureMode::Crash, 3, 1),
        config(FailureMode::Crash, 4, 1),
        config(FailureMode::Byzantine, 4, 1),
    ] {
        for alg in &corpus {
            let expected = validate(alg, &cfg).unwrap().is_correct();
            let all = all_placements(alg, &cfg);
            assert!(all.len() >= build_scenarios(alg, &cfg).unwrap().len());
            let exhaustive = all.iter().all(|sc| explore(alg, sc, &cfg).unwrap().violation.is_none());
            assert_eq!(exhaustive, expected, "{:?}\n{}", cfg.modes, alg.key());
        }
    }
}
