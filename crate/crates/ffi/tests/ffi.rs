use std::ffi::{CStr, CString};
use std::ptr;

use cdsurf_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { cds_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn offset_curvatures_through_handles() {
    unsafe {
        let mut base = ptr::null_mut();
        assert_eq!(cds_surface_graph(1.0, 1.0, &mut base), CdsStatus::Ok);
        let mut off = ptr::null_mut();
        assert_eq!(cds_surface_offset(base, 1.0, &mut off), CdsStatus::Ok);
        cds_surface_free(base);
        let (mut k1, mut k2) = (0.0, 0.0);
        assert_eq!(cds_principal_curvatures(off, 0.0, 0.0, &mut k1, &mut k2), CdsStatus::Ok);
        assert!((k1 - 0.5).abs() < 1e-9 && (k2 - 0.5).abs() < 1e-9);
        assert_eq!(cds_offset_curvature_law(1.0, 1.0), 0.5);
        let mut x = [0.0; 3];
        assert_eq!(cds_surface_eval(off, 0.0, 0.0, x.as_mut_ptr()), CdsStatus::Ok);
        assert!((x[2] - 1.0).abs() < 1e-15);
        cds_surface_free(off);
    }
}

#[test]
fn foot_point_and_geodesic() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(cds_surface_sphere(1.0, &mut s), CdsStatus::Ok);
        let q = [0.0, 2.0, 0.0];
        let mut fp = CdsFootPoint::default();
        assert_eq!(cds_foot_point(s, q.as_ptr(), 1e-10, &mut fp), CdsStatus::Ok);
        assert!((fp.distance - 1.0).abs() < 1e-10 && (fp.x[1] - 1.0).abs() < 1e-10 && fp.ties == 0);

        let mut c = ptr::null_mut();
        let status = cds_geodesic(s, std::f64::consts::FRAC_PI_2, 0.0, 0.0, 1.0, 1.0, 1e-10, &mut c);
        assert_eq!(status, CdsStatus::Ok);
        assert!(cds_curve_len(c) > 100 && !cds_curve_truncated(c));
        let mut node = CdsCurveNode::default();
        assert_eq!(cds_curve_node(c, cds_curve_len(c) - 1, &mut node), CdsStatus::Ok);
        assert!((node.t - 1.0).abs() < 1e-15 && (node.u2 - 1.0).abs() < 1e-8);
        assert_eq!(cds_curve_node(c, 1 << 20, &mut node), CdsStatus::InvalidArgument);
        let mut k = f64::NAN;
        assert_eq!(cds_curve_max_geodesic_curvature(s, c, &mut k), CdsStatus::Ok);
        assert!(k < 1e-6);
        cds_curve_free(c);
        cds_surface_free(s);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(cds_surface_sphere(-1.0, &mut s), CdsStatus::InvalidArgument);
        assert!(s.is_null());
        assert!(last_error().contains("radius"));
        assert_eq!(cds_surface_graph(1.0, 1.0, ptr::null_mut()), CdsStatus::NullPointer);
        let mut k1 = 0.0;
        assert_eq!(cds_principal_curvatures(ptr::null(), 0.0, 0.0, &mut k1, &mut k1), CdsStatus::NullPointer);
        assert_eq!(cds_surface_capped_cylinder(1.0, &mut s), CdsStatus::Ok);
        let mut x = [0.0; 3];
        assert_eq!(cds_surface_eval(s, 0.0, 100.0, x.as_mut_ptr()), CdsStatus::OutOfDomain);
        cds_surface_free(s);
        cds_surface_free(ptr::null_mut());
        assert_eq!(cds_curve_len(ptr::null()), 0);
    }
}

#[test]
fn experiments_through_handles() {
    unsafe {
        let name = CString::new("capped-cylinder").unwrap();
        let mut rep = ptr::null_mut();
        assert_eq!(cds_experiment_run(name.as_ptr(), 42, 1.0, &mut rep), CdsStatus::Ok);
        assert!(cds_report_all_pass(rep));
        let n = cds_report_row_count(rep);
        assert!(n > 3);
        let label = CStr::from_ptr(cds_report_row_label(rep, 0)).to_str().unwrap();
        assert_eq!(label, "theta_star");
        let mut row = CdsReportRow::default();
        assert_eq!(cds_report_row(rep, 0, &mut row), CdsStatus::Ok);
        assert!((row.measured - std::f64::consts::FRAC_PI_2).abs() < 1e-10 && row.pass);
        assert!(cds_report_row_label(rep, n).is_null());

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("c.csv").to_str().unwrap()).unwrap();
        assert_eq!(cds_report_write_csv(rep, path.as_ptr()), CdsStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
        assert!(text.starts_with("label,measured,target,tolerance,pass\ntheta_star,"));
        let bad = CString::new(dir.path().join("missing/c.csv").to_str().unwrap()).unwrap();
        assert_eq!(cds_report_write_csv(rep, bad.as_ptr()), CdsStatus::Io);
        cds_report_free(rep);

        let bogus = CString::new("bogus").unwrap();
        assert_eq!(cds_experiment_run(bogus.as_ptr(), 42, f64::NAN, &mut rep), CdsStatus::UnknownExperiment);
        assert!(last_error().contains("bogus"));
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cdsurf.h")).unwrap();
    for sym in [
        "CdsStatus",
        "typedef struct CdsSurface CdsSurface",
        "cds_surface_graph",
        "cds_surface_offset",
        "cds_foot_point",
        "cds_geodesic",
        "cds_experiment_run",
        "cds_report_free",
        "cds_last_error",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, "#include \"cdsurf.h\"\nint main(void) { CdsSurface *s = 0; return (int)cds_surface_sphere(1.0, &s); }\n").unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
