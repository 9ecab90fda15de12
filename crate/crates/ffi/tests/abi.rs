use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use kgen_ffi::*;

fn fixture(name: &str) -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name);
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = kgen_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn open_table1() -> *mut KgenSession {
    let mut session = ptr::null_mut();
    let status =
        unsafe { kgen_session_open(fixture("table1.csv").as_ptr(), fixture("table1.toml").as_ptr(), 0, &mut session) };
    assert_eq!(status, KgenStatus::Ok);
    assert!(!session.is_null());
    session
}

#[test]
fn session_reports_shape() {
    let session = open_table1();
    unsafe {
        assert_eq!(kgen_session_qi_count(session), 3);
        assert_eq!(kgen_session_row_count(session), 4);
        let heights: Vec<u32> = (0..3).map(|i| kgen_session_height(session, i)).collect();
        assert_eq!(heights, [5, 1, 5]);
        assert_eq!(kgen_session_height(session, 3), 0);
        kgen_session_free(session);
    }
}

#[test]
fn exhaustive_run_round_trip() {
    let session = open_table1();
    let dir = tempfile::tempdir().unwrap();
    let out_path = CString::new(dir.path().join("out.csv").to_str().unwrap()).unwrap();
    unsafe {
        let mut result = ptr::null_mut();
        assert_eq!(kgen_session_run(session, KgenAlgorithm::Exhaustive, 0.0, 1, &mut result), KgenStatus::Ok);

        let mut len = 0usize;
        assert_eq!(kgen_result_levels(result, ptr::null_mut(), 0, &mut len), KgenStatus::BufferTooSmall);
        assert_eq!(len, 3);
        assert!(last_error().contains("3 needed"));
        let mut levels = [0u32; 3];
        assert_eq!(kgen_result_levels(result, levels.as_mut_ptr(), levels.len(), &mut len), KgenStatus::Ok);
        // lowest precision on the fixture: "0-49", raw gender, "8****"
        assert_eq!(levels, [3, 0, 4]);

        let heights = [5u32, 1, 5];
        let mut p = 0.0;
        assert_eq!(kgen_precision(levels.as_ptr(), heights.as_ptr(), 3, &mut p), KgenStatus::Ok);
        assert!((kgen_result_precision(result) - p).abs() < 1e-12);
        assert_eq!(kgen_result_suppression(result), 0.0);
        assert!(kgen_result_evaluations(result) > 0);

        assert_eq!(kgen_result_write_csv(session, result, out_path.as_ptr()), KgenStatus::Ok);
        kgen_result_free(result);
        kgen_session_free(session);
    }
    let text = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert!(text.contains("0-49,F,8****"), "{text}");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn every_algorithm_runs() {
    let session = open_table1();
    for algorithm in [KgenAlgorithm::Exhaustive, KgenAlgorithm::Ola, KgenAlgorithm::Kgen, KgenAlgorithm::Random] {
        unsafe {
            let mut result = ptr::null_mut();
            assert_eq!(kgen_session_run(session, algorithm, 0.0, 7, &mut result), KgenStatus::Ok, "{algorithm:?}");
            assert!(kgen_result_precision(result).is_finite());
            kgen_result_free(result);
        }
    }
    unsafe { kgen_session_free(session) };
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut session = ptr::null_mut();
        assert_eq!(kgen_session_open(ptr::null(), ptr::null(), 0, &mut session), KgenStatus::NullPointer);
        assert!(session.is_null());
        assert!(last_error().contains("null"));

        let missing = CString::new("/nonexistent/data.csv").unwrap();
        assert_eq!(kgen_session_open(missing.as_ptr(), fixture("table1.toml").as_ptr(), 0, &mut session), KgenStatus::Io);

        let mut result = ptr::null_mut();
        assert_eq!(kgen_session_run(ptr::null(), KgenAlgorithm::Ola, 0.0, 0, &mut result), KgenStatus::NullPointer);
        let session = open_table1();
        assert_eq!(kgen_session_run(session, KgenAlgorithm::Ola, 1.5, 0, &mut result), KgenStatus::InvalidArgument);
        assert!(result.is_null());
        assert!(last_error().contains("1.5"));

        let mut len = 0;
        assert_eq!(kgen_result_levels(ptr::null(), ptr::null_mut(), 0, &mut len), KgenStatus::NullPointer);
        assert!(kgen_result_precision(ptr::null()).is_nan());
        assert!(kgen_result_suppression(ptr::null()).is_nan());
        assert_eq!(kgen_result_evaluations(ptr::null()), 0);
        assert_eq!(kgen_session_qi_count(ptr::null()), 0);

        let mut p = 0.0;
        let levels = [2u32];
        let heights = [1u32];
        assert_ne!(kgen_precision(levels.as_ptr(), heights.as_ptr(), 1, &mut p), KgenStatus::Ok);

        kgen_result_free(ptr::null_mut());
        kgen_session_free(ptr::null_mut());
        kgen_session_free(session);
    }
}

#[test]
fn success_clears_last_error() {
    unsafe {
        let mut session = ptr::null_mut();
        kgen_session_open(ptr::null(), ptr::null(), 0, &mut session);
        assert!(!kgen_last_error().is_null());
        let session = open_table1();
        assert!(kgen_last_error().is_null());
        kgen_session_free(session);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/kgen.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for needle in [
        "KGEN_H",
        "typedef struct KgenSession KgenSession;",
        "typedef struct KgenResult KgenResult;",
        "KGEN_STATUS_OK = 0",
        "KGEN_STATUS_BUFFER_TOO_SMALL",
        "KGEN_ALGORITHM_KGEN",
        "kgen_session_open(",
        "kgen_session_run(",
        "kgen_result_levels(",
        "kgen_result_write_csv(",
        "kgen_precision(",
        "kgen_last_error(",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"kgen.h\"\n\
         int probe(KgenSession *s) {\n\
           KgenResult *r = 0;\n\
           KgenStatus st = kgen_session_run(s, KGEN_ALGORITHM_OLA, 0.0, 1, &r);\n\
           size_t len = 0;\n\
           if (st == KGEN_STATUS_OK) st = kgen_result_levels(r, 0, 0, &len);\n\
           kgen_result_free(r);\n\
           return (int)st + (int)len;\n\
         }\n",
    )
    .unwrap();
    let out = Command::new(cc)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    let found = Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success());
    if found {
        Ok("cc")
    } else {
        Err(())
    }
}
