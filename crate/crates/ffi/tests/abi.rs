use std::ffi::{CStr, CString};
use std::ptr;

use metric_bandits_ffi::*;

const INSTANCE: &str = r#"{
  "metric": {"kind": "finite_explicit", "matrix": [[0.0, 1.0], [1.0, 0.0]]},
  "payoff": {"kind": "explicit_finite", "values": [0.9, 0.1]},
  "rewards": {"kind": "bernoulli"},
  "seed": 0
}"#;

fn last_error() -> String {
    let p = mb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn formulas_match_the_library() {
    assert_eq!(mb_standard_radius(1, 0), 2.0);
    assert_eq!(mb_index(0.5, 0.25), 1.0);
    assert_eq!(mb_naive_delta(4096, 2.0), 0.125);
    let mut r = 0.0;
    assert_eq!(
        unsafe { mb_chernoff_radius(4.0, 16, 1.0, &mut r) },
        MbStatus::Ok
    );
    assert_eq!(r, 0.75);
    assert_eq!(
        unsafe { mb_max_reward_one_radius(8.0, 0, 0.0, &mut r) },
        MbStatus::Ok
    );
    assert_eq!(r, 8.0 + 8f64.sqrt());
}

#[test]
fn domain_errors_set_the_message() {
    let mut r = 0.0;
    assert_eq!(
        unsafe { mb_max_reward_one_radius(8.0, 1, 1.5, &mut r) },
        MbStatus::InvalidArgument
    );
    assert!(last_error().contains("outside [0, 1]"));
    assert_eq!(
        unsafe { mb_chernoff_radius(1.0, 1, 0.0, ptr::null_mut()) },
        MbStatus::NullPointer
    );
}

#[test]
fn replicate_and_read_the_curve() {
    let json = CString::new(INSTANCE).unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { mb_instance_from_json(json.as_ptr(), &mut inst) },
        MbStatus::Ok
    );
    assert_eq!(unsafe { mb_instance_mu_star(inst) }, 0.9);

    let alg = CString::new(r#"{"kind": "zooming"}"#).unwrap();
    let seeds = [1u64, 2, 3];
    let mut curve = ptr::null_mut();
    let st = unsafe {
        mb_replicate(
            inst,
            alg.as_ptr(),
            4000,
            seeds.as_ptr(),
            seeds.len(),
            &mut curve,
        )
    };
    assert_eq!(st, MbStatus::Ok);
    let n = unsafe { mb_curve_len(curve) };
    assert!(n >= 10);
    let (mut t, mut mean, mut se) = (0u64, 0.0, 0.0);
    assert_eq!(
        unsafe { mb_curve_point(curve, n - 1, &mut t, &mut mean, &mut se) },
        MbStatus::Ok
    );
    assert_eq!(t, 4000);
    assert!(mean > 0.0 && se >= 0.0);
    assert_eq!(
        unsafe { mb_curve_point(curve, n, &mut t, &mut mean, &mut se) },
        MbStatus::OutOfRange
    );
    let mut gamma = 0.0;
    assert_eq!(
        unsafe { mb_curve_fit_exponent(curve, 0.2, &mut gamma) },
        MbStatus::Ok
    );
    assert!(gamma.is_finite());
    unsafe {
        mb_curve_free(curve);
        mb_instance_free(inst);
        mb_curve_free(ptr::null_mut());
        mb_instance_free(ptr::null_mut());
    }
}

#[test]
fn bad_json_is_reported() {
    let json = CString::new("{\"metric\": 3}").unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { mb_instance_from_json(json.as_ptr(), &mut inst) },
        MbStatus::InvalidJson
    );
    assert!(inst.is_null());
    assert!(last_error().starts_with("instance:"));
    assert_eq!(
        unsafe { mb_instance_from_json(ptr::null(), &mut inst) },
        MbStatus::NullPointer
    );
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(mb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/metric_bandits.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "mb_replicate",
        "mb_curve_point",
        "MbStatus",
        "MbCurve",
        "MB_STATUS_OK",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ return mb_standard_radius(1, 0) > 0 ? 0 : 1; }}\n"))
        .unwrap();
    let Ok(status) = std::process::Command::new("cc")
        .args(["-std=c99", "-fsyntax-only"])
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler found, skipping the compile step");
        return;
    };
    assert!(status.success());
}
