use std::ffi::{CStr, CString};
use std::ptr;

use uavpath::d3qn::NetworkParams;
use uavpath::mdp::{EncoderKind, FeatureLayout};
use uavpath::ScenarioConfig;
use uavpath_ffi::*;

fn last_error() -> String {
    let p = uavpath_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn config_json(c: &ScenarioConfig) -> CString {
    CString::new(c.to_json().unwrap()).unwrap()
}

fn new_world(c: &ScenarioConfig, seed: u64) -> *mut UavpathWorld {
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { uavpath_world_new(config_json(c).as_ptr(), seed, &mut w) }, UavpathStatus::Ok);
    w
}

#[test]
fn hovering_t1_times_out_at_deadline() {
    let c = ScenarioConfig::small_map();
    let w = new_world(&c, 3);
    let mut n = 0;
    unsafe {
        assert_eq!(uavpath_world_uav_count(w, &mut n), UavpathStatus::Ok);
        let mut actions = vec![0usize; n];
        let mut done = false;
        while !done {
            assert_eq!(uavpath_world_fill_t2_actions(w, actions.as_mut_ptr(), n), UavpathStatus::Ok);
            actions[0] = 0;
            assert_eq!(uavpath_world_step(w, actions.as_ptr(), n), UavpathStatus::Ok);
            assert_eq!(uavpath_world_all_t1_done(w, &mut done), UavpathStatus::Ok);
        }
        let mut t = 0;
        uavpath_world_time(w, &mut t);
        let mut m = UavpathMission::Ongoing;
        uavpath_world_mission_status(w, 0, &mut m);
        // a hovering T1 can still be hit by a T2
        assert!(m == UavpathMission::Timeout && t == c.deadline_steps || m == UavpathMission::Collision);
        let mut s = std::mem::MaybeUninit::<UavpathUavState>::uninit();
        assert_eq!(uavpath_world_uav_state(w, 0, s.as_mut_ptr()), UavpathStatus::Ok);
        let s = s.assume_init();
        assert_eq!(s.role, UavpathRole::T1);
        assert_eq!(s.path_length, 0.0);
        uavpath_world_free(w);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut w = ptr::null_mut();
        let bad = CString::new("{not json").unwrap();
        assert_eq!(uavpath_world_new(bad.as_ptr(), 0, &mut w), UavpathStatus::Config);
        assert!(w.is_null());
        assert!(last_error().contains("format"));

        assert_eq!(uavpath_world_new(ptr::null(), 0, &mut w), UavpathStatus::NullPointer);
        assert!(last_error().contains("config_json"));

        let w = new_world(&ScenarioConfig::small_map(), 0);
        let mut n = 0;
        assert_eq!(uavpath_world_action_count(w, 999, &mut n), UavpathStatus::InvalidArgument);
        let short = [0usize; 2];
        assert_eq!(uavpath_world_step(w, short.as_ptr(), 2), UavpathStatus::Contract);
        assert!(last_error().contains("expected"));
        uavpath_world_free(w);

        let missing = CString::new("/nonexistent/policy.d3qn").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(uavpath_policy_load(missing.as_ptr(), &mut p), UavpathStatus::Io);
    }
}

#[test]
fn policy_round_trip_and_greedy_action() {
    let c = ScenarioConfig::small_map();
    let width = FeatureLayout::new(EncoderKind::T1, &c).len;
    let net = NetworkParams::zeros(width, &[8], 19).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.d3qn");
    net.save(&path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(uavpath_policy_load(cpath.as_ptr(), &mut p), UavpathStatus::Ok);
        let (mut wi, mut na) = (0, 0);
        uavpath_policy_shape(p, &mut wi, &mut na);
        assert_eq!((wi, na), (width, 19));
        let x = vec![0.5; width];
        let mut q = vec![1.0; na];
        assert_eq!(uavpath_policy_forward(p, x.as_ptr(), wi, q.as_mut_ptr(), na), UavpathStatus::Ok);
        assert!(q.iter().all(|&v| v == 0.0));
        assert_eq!(uavpath_policy_forward(p, x.as_ptr(), wi - 1, q.as_mut_ptr(), na), UavpathStatus::Contract);

        let w = new_world(&c, 1);
        let mut a = 99;
        assert_eq!(uavpath_policy_greedy_action(p, w, 0, &mut a), UavpathStatus::Ok);
        // all-zero network: ties resolve to the first action
        assert_eq!(a, 0);
        assert_eq!(uavpath_policy_greedy_action(p, w, 1, &mut a), UavpathStatus::InvalidArgument);

        let mut m = std::mem::MaybeUninit::<UavpathMetrics>::uninit();
        let json = config_json(&c);
        assert_eq!(uavpath_evaluate(json.as_ptr(), p, ptr::null(), 3, 5, m.as_mut_ptr()), UavpathStatus::Ok);
        let m = m.assume_init();
        assert_eq!((m.episodes, m.missions, m.sr), (3, 3, 0.0));
        uavpath_world_free(w);
        uavpath_policy_free(p);
    }
}

#[test]
fn free_accepts_null() {
    unsafe {
        uavpath_world_free(ptr::null_mut());
        uavpath_policy_free(ptr::null_mut());
        uavpath_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(uavpath_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_abi() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/uavpath.h")).unwrap();
    for sym in [
        "uavpath_world_new",
        "uavpath_world_step",
        "uavpath_world_free",
        "uavpath_policy_load",
        "uavpath_policy_greedy_action",
        "uavpath_evaluate",
        "uavpath_last_error",
        "typedef struct UavpathWorld UavpathWorld;",
        "UAVPATH_STATUS_PANIC = 6",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libuavpath_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let status = std::process::Command::new("cc")
        .arg(format!("{manifest}/tests/c/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("t="));
}
