use std::fs;
use std::process::Command;

use cdsurf::cli::parse_csv;

fn cdsurf(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cdsurf")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn passing_experiment_writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let (code, _) = cdsurf(&["run", "--experiment", "offset-curvature", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(out.join("offset-curvature.csv")).unwrap();
    assert!(text.starts_with("label,measured,target,tolerance,pass\n"));
    let rep = parse_csv("offset-curvature", &text).unwrap();
    let row = rep.row("a=1;r=1").unwrap();
    assert!((row.measured - 0.5).abs() < 1e-9 && row.pass && row.tolerance == 1e-6);
}

#[test]
fn capped_cylinder_with_r_reports_theta_star() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = cdsurf(&["run", "--experiment", "capped-cylinder", "--r", "1.0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let rep = parse_csv("c", &fs::read_to_string(dir.path().join("capped-cylinder.csv")).unwrap()).unwrap();
    let row = rep.row("theta_star").unwrap();
    assert!((row.measured - std::f64::consts::FRAC_PI_2).abs() < 1e-10 && row.pass);

    let (code, _) = cdsurf(&["run", "--experiment", "capped-cylinder", "--r", "1.2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("capped-cylinder.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("theta_star,1.2365") && l.ends_with(",1e-03,true")));
}

#[test]
fn failing_rows_exit_one_and_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, stdout) = cdsurf(&["run", "--experiment", "ellipse-foliation", "--out", d, "--plot"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("drho_ratio_max_dev"));
    let svg = fs::read_to_string(dir.path().join("ellipse-foliation.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), 4);
    assert!(svg.find("stroke=\"red\"").unwrap() < svg.find("stroke=\"green\"").unwrap());

    let mut args = vec!["run", "--experiment", "ellipse-foliation", "--out", d];
    let overrides = ["k=0.5;drho_ratio_max_dev=5", "k=1;drho_ratio_max_dev=5", "k=1.5;drho_ratio_max_dev=5"];
    for o in &overrides {
        args.extend(["--tol", o]);
    }
    assert_eq!(cdsurf(&args).0, 0);
}

#[test]
fn usage_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(cdsurf(&["run", "--experiment", "nope", "--out", d]).0, 2);
    assert_eq!(cdsurf(&["run", "--bogus-flag"]).0, 2);
    assert_eq!(cdsurf(&["run", "--experiment", "capped-cylinder", "--r", "0.5", "--out", d]).0, 2);
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    assert_eq!(cdsurf(&["run", "--experiment", "offset-curvature", "--out", file.to_str().unwrap()]).0, 3);
}

#[test]
fn all_experiments_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let (code, _) = cdsurf(&["run", "--experiment", "all", "--seed", "7", "--plot", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code, 1, "ellipse-foliation carries a failing row");
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.iter().filter(|n| n.to_string_lossy().ends_with(".csv")).count(), 8);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?} differs");
    }
}
