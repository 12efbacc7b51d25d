use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ecodrive_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 512];
    unsafe {
        eco_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn band_through_the_abi() {
    unsafe {
        let mut v = ptr::null_mut();
        assert_eq!(eco_vehicle_new_reference(10.0, &mut v), EcoStatus::Ok);
        let mut band = std::mem::zeroed::<EcoBand>();
        assert_eq!(
            eco_optimal_band(v, 0.0, 0.0, 7.0, f64::INFINITY, 0.5, true, &mut band),
            EcoStatus::Ok
        );
        assert!((band.va - 6.1).abs() <= 0.1 && (band.vb - 7.94).abs() <= 0.1);
        assert_eq!(band.kind, EcoBandKind::Oscillating);

        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(
            eco_equilibrium_speeds(v, 0.0, 0.0, &mut lo, &mut hi),
            EcoStatus::Ok
        );
        assert_eq!(lo, 0.0);
        assert!((hi - (0.17f64 / 6e-4).sqrt()).abs() < 1e-9);

        let mut acc = 0.0;
        assert_eq!(eco_acceleration(v, 0.0, 0.0, 7.0, 1, &mut acc), EcoStatus::Ok);
        assert!((acc - (0.17 - 6e-4 * 49.0)).abs() < 1e-12);

        assert_eq!(
            eco_optimal_band(v, 0.0, 0.0, 40.0, f64::INFINITY, 0.5, false, &mut band),
            EcoStatus::Infeasible
        );
        assert!(!last_error().is_empty());
        eco_vehicle_free(v);
    }
}

#[test]
fn null_and_bad_arguments() {
    unsafe {
        let mut band = std::mem::zeroed::<EcoBand>();
        assert_eq!(
            eco_optimal_band(ptr::null(), 0.0, 0.0, 7.0, f64::INFINITY, 0.5, false, &mut band),
            EcoStatus::NullPointer
        );
        assert!(last_error().contains("vehicle"));
        let mut v = ptr::null_mut();
        assert_eq!(
            eco_vehicle_new_reference(-1.0, &mut v),
            EcoStatus::InvalidArgument
        );
        assert!(v.is_null());
        let missing = CString::new("/nonexistent/params.json").unwrap();
        assert_eq!(eco_vehicle_load(missing.as_ptr(), &mut v), EcoStatus::Io);
        eco_vehicle_free(ptr::null_mut());
        eco_race_free(ptr::null_mut());
        eco_scenario_free(ptr::null_mut());
        assert_eq!(eco_race_telemetry_len(ptr::null()), 0);
    }
}

#[test]
fn truncated_error_message() {
    unsafe {
        let mut s = ptr::null_mut();
        let name = CString::new("nowhere").unwrap();
        assert_eq!(
            eco_scenario_fixture(name.as_ptr(), &mut s),
            EcoStatus::InvalidArgument
        );
        let mut buf = [1 as c_char; 8];
        let full = eco_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(full > 7);
        assert_eq!(buf[7], 0);
        assert_eq!(eco_last_error_message(ptr::null_mut(), 0), full);
    }
}

#[test]
fn race_through_the_abi() {
    unsafe {
        let mut s = ptr::null_mut();
        let name = CString::new("flat16500").unwrap();
        assert_eq!(eco_scenario_fixture(name.as_ptr(), &mut s), EcoStatus::Ok);
        for kv in ["length=2000", "duration=285.7"] {
            let kv = CString::new(kv).unwrap();
            assert_eq!(eco_scenario_set(s, kv.as_ptr()), EcoStatus::Ok);
        }
        let bad = CString::new("alpha=-5").unwrap();
        assert_eq!(eco_scenario_set(s, bad.as_ptr()), EcoStatus::InvalidArgument);

        let mut r = ptr::null_mut();
        assert_eq!(eco_race_run(s, &mut r), EcoStatus::Ok);
        let mut summary = std::mem::zeroed::<EcoRaceSummary>();
        assert_eq!(eco_race_summary(r, &mut summary), EcoStatus::Ok);
        assert!((summary.avg_speed_mps - 7.0).abs() < 0.1);
        assert!(summary.min_switch_gap_s > 10.0 / summary.max_planned_cost_w);

        let n = eco_race_telemetry_len(r);
        let mut row = std::mem::zeroed::<EcoTelemetryRow>();
        assert_eq!(eco_race_telemetry_row(r, n - 1, &mut row), EcoStatus::Ok);
        assert_eq!(row.energy, summary.total_energy_j);
        assert_eq!(row.switches, summary.switches);
        assert_eq!(eco_race_telemetry_row(r, n, &mut row), EcoStatus::OutOfRange);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(eco_race_write_report(r, s, path.as_ptr()), EcoStatus::Ok);
        assert!(dir.path().join("summary.json").exists());

        eco_race_free(r);
        eco_scenario_free(s);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(eco_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Builds and runs `examples/smoke.c` against the static library when a C compiler is present.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libecodrive_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("examples/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("band 6.1"), "{text}");
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
