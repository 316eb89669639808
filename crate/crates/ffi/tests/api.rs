use choquard_ffi::*;
use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(choquard_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn default_model(fraction: f64) -> *mut ChoquardModel {
    let mut m = ptr::null_mut();
    let st = unsafe { choquard_model_new_fraction(3, 2.0, 1.0, fraction, 3.0, &mut m) };
    assert_eq!(st, ChoquardStatus::Ok, "{}", last_error());
    m
}

#[test]
fn constants_and_regime() {
    let m = default_model(1.0);
    let mut c = ChoquardConstants::default();
    let mut regime = 0;
    let mut a = 0.0;
    unsafe {
        assert_eq!(choquard_model_constants(m, &mut c), ChoquardStatus::Ok);
        assert_eq!(choquard_model_regime(m, &mut regime), ChoquardStatus::Ok);
        assert_eq!(choquard_model_mass(m, &mut a), ChoquardStatus::Ok);
        choquard_model_free(m);
    }
    assert!((c.a0 - 34.2609).abs() < 1e-3, "{}", c.a0);
    assert!((a - c.a0).abs() < 1e-12);
    assert_eq!(regime, 2);
}

#[test]
fn invalid_input_sets_status_and_message() {
    let mut m = ptr::null_mut();
    let st = unsafe { choquard_model_new(3, 2.0, 1.0, 1.0, 4.0, &mut m) };
    assert_eq!(st, ChoquardStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains('q'), "{}", last_error());
    let st = unsafe { choquard_model_new(3, 2.0, 1.0, 1.0, 3.0, ptr::null_mut()) };
    assert_eq!(st, ChoquardStatus::NullPointer);
    let st = unsafe { choquard_model_constants(ptr::null(), &mut ChoquardConstants::default()) };
    assert_eq!(st, ChoquardStatus::NullPointer);
    unsafe {
        choquard_model_free(ptr::null_mut());
        choquard_solution_free(ptr::null_mut());
    }
}

#[test]
fn omega3_is_refused() {
    let m = default_model(1.2);
    let mut sol = ptr::null_mut();
    let st = unsafe { choquard_solve_ground(m, &mut sol) };
    assert_eq!(st, ChoquardStatus::Regime);
    assert!(sol.is_null());
    unsafe { choquard_model_free(m) };
}

#[test]
fn solve_profile_save_load() {
    let m = default_model(0.75);
    let mut g = ptr::null_mut();
    let mut e = ptr::null_mut();
    unsafe {
        assert_eq!(
            choquard_solve_ground(m, &mut g),
            ChoquardStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(
            choquard_solve_excited(m, g, &mut e),
            ChoquardStatus::Ok,
            "{}",
            last_error()
        );
    }
    let (mut sg, mut se) = (ChoquardSummary::default(), ChoquardSummary::default());
    unsafe {
        choquard_solution_summary(g, &mut sg);
        choquard_solution_summary(e, &mut se);
    }
    assert_eq!((sg.branch, se.branch), (0, 1));
    assert!(sg.converged && se.converged);
    assert!(sg.energy < 0.0 && se.energy > 0.0);
    assert!((sg.tau_plus - 1.0).abs() < 1e-4 && (se.tau_minus - 1.0).abs() < 1e-4);

    let mut r = vec![0.0; sg.nodes];
    let mut u = vec![0.0; sg.nodes];
    let short =
        unsafe { choquard_solution_profile(g, r.as_mut_ptr(), u.as_mut_ptr(), sg.nodes - 1) };
    assert_eq!(short, ChoquardStatus::InvalidArgument);
    unsafe {
        assert_eq!(
            choquard_solution_profile(g, r.as_mut_ptr(), u.as_mut_ptr(), sg.nodes),
            ChoquardStatus::Ok
        )
    };
    assert!(r.windows(2).all(|w| w[0] < w[1]));
    assert!(u.iter().all(|&v| v > 0.0));

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("ground").to_str().unwrap()).unwrap();
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(
            choquard_solution_save(g, path.as_ptr()),
            ChoquardStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(
            choquard_solution_load(path.as_ptr(), &mut back),
            ChoquardStatus::Ok,
            "{}",
            last_error()
        );
    }
    let mut sb = ChoquardSummary::default();
    unsafe { choquard_solution_summary(back, &mut sb) };
    assert_eq!(sb.energy, sg.energy);
    assert_eq!(sb.lambda, sg.lambda);

    let missing = CString::new(dir.path().join("nothing").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { choquard_solution_load(missing.as_ptr(), &mut none) },
        ChoquardStatus::MissingArtifact
    );
    unsafe {
        choquard_solution_free(back);
        choquard_solution_free(e);
        choquard_solution_free(g);
        choquard_model_free(m);
    }
}

fn static_lib() -> Option<PathBuf> {
    let target = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target");
    let dir = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or(target);
    ["debug", "release"]
        .iter()
        .map(|p| dir.join(p).join("libchoquard_ffi.a"))
        .find(|p| p.exists())
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include/choquard.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "choquard_model_new",
        "choquard_solve_ground",
        "choquard_last_error",
        "CHOQUARD_STATUS_REGIME",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Some(lib) = static_lib() else {
        panic!("libchoquard_ffi.a not found; build the ffi crate first");
    };
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "{stdout}{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with(env!("CARGO_PKG_VERSION")));
    assert_eq!(lines[1], "2 1");
}
