//! Calls the C ABI the way a C caller would: raw pointers, status codes and
//! explicit frees.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use rbsynth_ffi::*;

fn last_error() -> String {
    let p = rbs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Takes ownership of a string returned by the library.
unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    rbs_string_free(s);
    out
}

unsafe fn reference(i: u32) -> *mut RbsAlgorithm {
    let mut alg = ptr::null_mut();
    assert_eq!(rbs_algorithm_reference(i, &mut alg), RbsStatus::Ok);
    alg
}

unsafe fn preset(name: &str) -> *mut RbsConfig {
    let name = CString::new(name).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(rbs_config_preset(name.as_ptr(), &mut cfg), RbsStatus::Ok);
    cfg
}

unsafe fn verdict(alg: *const RbsAlgorithm, cfg: *const RbsConfig) -> *mut RbsVerdict {
    let mut v = ptr::null_mut();
    assert_eq!(rbs_validate(alg, cfg, &mut v), RbsStatus::Ok, "{}", last_error());
    v
}

#[test]
fn action_and_threshold_counts() {
    assert_eq!(rbs_action_count(2), 64);
    // three send variants and DELIVER under five conditions, plus STOP
    assert_eq!(rbs_action_count(1), 3 * 5 + 5 + 1);
    let mut c = 0;
    let expected = [0, 1, 2, 3, 3];
    for (kind, want) in expected.into_iter().enumerate() {
        assert_eq!(unsafe { rbs_threshold_count(kind as u32, 4, 1, &mut c) }, RbsStatus::Ok);
        assert_eq!(c, want, "kind {kind}");
    }
    assert_eq!(
        unsafe { rbs_threshold_count(9, 4, 1, &mut c) },
        RbsStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { rbs_threshold_count(0, 4, 4, &mut c) },
        RbsStatus::InvalidArgument
    );
    assert!(last_error().contains("below"), "{}", last_error());
}

#[test]
fn render_parse_round_trip() {
    unsafe {
        for i in 1..=4 {
            let alg = reference(i);
            let mut text = ptr::null_mut();
            assert_eq!(rbs_algorithm_render(alg, &mut text), RbsStatus::Ok);
            let rendered = take(text);

            let c = CString::new(rendered.clone()).unwrap();
            let mut back = ptr::null_mut();
            assert_eq!(rbs_algorithm_parse(c.as_ptr(), &mut back), RbsStatus::Ok);
            let (mut k1, mut k2) = (ptr::null_mut(), ptr::null_mut());
            assert_eq!(rbs_algorithm_key(alg, &mut k1), RbsStatus::Ok);
            assert_eq!(rbs_algorithm_key(back, &mut k2), RbsStatus::Ok);
            assert_eq!(take(k1), take(k2), "algorithm {i}");
            rbs_algorithm_free(alg);
            rbs_algorithm_free(back);
        }
        let mut alg = ptr::null_mut();
        assert_eq!(rbs_algorithm_reference(5, &mut alg), RbsStatus::InvalidArgument);
        assert!(alg.is_null());
    }
}

#[test]
fn metrics_of_the_reference_algorithms() {
    unsafe {
        let mut m = RbsMetrics::default();
        let alg = reference(3);
        assert_eq!(rbs_algorithm_metrics(alg, 4, 1, &mut m), RbsStatus::Ok);
        assert_eq!((m.messages_worst_case, m.comm_steps, m.deliver_cost), (20, 2, 3));
        assert_eq!(rbs_algorithm_metrics(alg, 2, 0, &mut m), RbsStatus::InvalidArgument);
        rbs_algorithm_free(alg);

        let alg = reference(2);
        assert_eq!(rbs_algorithm_metrics(alg, 3, 1, &mut m), RbsStatus::Ok);
        assert_eq!((m.messages_worst_case, m.comm_steps, m.deliver_cost), (7, 1, 1));
        rbs_algorithm_free(alg);
    }
}

#[test]
fn verdicts_through_handles() {
    unsafe {
        let crash = preset("crash");
        let alg1 = reference(1);
        let v = verdict(alg1, crash);
        assert!(!rbs_verdict_is_correct(v));
        assert_eq!(rbs_verdict_property(v), RBS_PROPERTY_AGREEMENT);
        assert!(rbs_verdict_scenarios(v) >= 1);
        assert!(rbs_verdict_states(v) >= 1);
        let mut text = ptr::null_mut();
        assert_eq!(rbs_verdict_describe(v, &mut text), RbsStatus::Ok);
        let text = take(text);
        assert!(text.contains("violation of") && text.contains("trace:"), "{text}");
        rbs_verdict_free(v);

        let byz = preset("byzantine");
        let alg3 = reference(3);
        let v = verdict(alg3, byz);
        assert!(rbs_verdict_is_correct(v));
        assert_eq!(rbs_verdict_property(v), RBS_PROPERTY_NONE);
        rbs_verdict_free(v);

        let alg2 = reference(2);
        let v = verdict(alg2, byz);
        assert_eq!(rbs_verdict_property(v), RBS_PROPERTY_INTEGRITY);
        rbs_verdict_free(v);

        for p in [alg1, alg2, alg3] {
            rbs_algorithm_free(p);
        }
        rbs_config_free(crash);
        rbs_config_free(byz);
    }
}

#[test]
fn configs_from_text_and_files() {
    unsafe {
        let text = CString::new("[validation]\nmodes = [\"no_failure\"]\n").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(rbs_config_parse(text.as_ptr(), &mut cfg), RbsStatus::Ok);
        let alg = reference(1);
        let v = verdict(alg, cfg);
        assert!(rbs_verdict_is_correct(v));
        rbs_verdict_free(v);
        rbs_config_free(cfg);

        let bad = CString::new("[generation]\nepisodez = 1\n").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(rbs_config_parse(bad.as_ptr(), &mut cfg), RbsStatus::ConfigError);
        assert!(cfg.is_null());
        assert!(last_error().contains("generation.episodez"), "{}", last_error());

        let missing = CString::new("/nonexistent/run.cfg").unwrap();
        assert_eq!(rbs_config_load(missing.as_ptr(), &mut cfg), RbsStatus::Io);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.cfg");
        std::fs::write(&path, "[validation]\nmodes = [\"byzantine\"]\nmax_states = 1\n").unwrap();
        let path = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(rbs_config_load(path.as_ptr(), &mut cfg), RbsStatus::Ok);
        let alg3 = reference(3);
        let mut v = ptr::null_mut();
        assert_eq!(rbs_validate(alg3, cfg, &mut v), RbsStatus::StateBudget);
        assert!(v.is_null());
        rbs_config_free(cfg);
        rbs_algorithm_free(alg);
        rbs_algorithm_free(alg3);

        let unknown = CString::new("sometimes").unwrap();
        assert_eq!(rbs_config_preset(unknown.as_ptr(), &mut cfg), RbsStatus::ConfigError);
    }
}

#[test]
fn bad_pointers_and_text() {
    unsafe {
        let mut alg = ptr::null_mut();
        assert_eq!(rbs_algorithm_parse(ptr::null(), &mut alg), RbsStatus::NullPointer);
        let garbage = CString::new("when RB-Broadcast(m) do:\n    SHOUT;\n").unwrap();
        assert_eq!(rbs_algorithm_parse(garbage.as_ptr(), &mut alg), RbsStatus::ParseError);
        assert!(!last_error().is_empty());
        let bytes = [0xffu8, 0xfe, 0];
        assert_eq!(
            rbs_algorithm_parse(bytes.as_ptr().cast(), &mut alg),
            RbsStatus::InvalidUtf8
        );

        let real = reference(1);
        assert_eq!(rbs_algorithm_render(real, ptr::null_mut()), RbsStatus::NullPointer);
        let mut s = ptr::null_mut();
        assert_eq!(rbs_algorithm_render(ptr::null(), &mut s), RbsStatus::NullPointer);
        let mut v = ptr::null_mut();
        assert_eq!(rbs_validate(real, ptr::null(), &mut v), RbsStatus::NullPointer);

        assert!(!rbs_verdict_is_correct(ptr::null()));
        assert_eq!(rbs_verdict_property(ptr::null()), RBS_PROPERTY_NONE);
        assert_eq!(rbs_verdict_scenarios(ptr::null()), 0);

        // freeing null is a no-op
        rbs_algorithm_free(ptr::null_mut());
        rbs_config_free(ptr::null_mut());
        rbs_verdict_free(ptr::null_mut());
        rbs_string_free(ptr::null_mut());
        rbs_algorithm_free(real);

        // a successful call clears the previous error
        let mut c = 0;
        assert_eq!(rbs_threshold_count(0, 3, 0, &mut c), RbsStatus::Ok);
        assert!(rbs_last_error().is_null());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rbsynth.h")).unwrap();
    for name in [
        "rbs_last_error",
        "rbs_algorithm_parse",
        "rbs_algorithm_metrics",
        "rbs_validate",
        "rbs_verdict_property",
        "RBS_STATUS_STATE_BUDGET",
        "RBS_PROPERTY_INTEGRITY",
        "typedef struct RbsVerdict RbsVerdict",
    ] {
        assert!(header.contains(name), "{name} missing from the header");
    }
}
