use std::process::{Command, Output};

use serde_json::Value;

fn fbpool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbpool")).args(args).output().expect("spawn fbpool")
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

#[test]
fn slice_reports_closed_form() {
    let o = fbpool(&["slice", "--f", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["energy"].as_f64(), Some(10.0));
    assert_eq!(v["a"].as_f64(), Some(0.0));

    let o = fbpool(&["slice", "--f", "0.5", "--oracle-n", "400"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    let (c, r) = (v["closed_form"]["energy"].as_f64().unwrap(), v["oracle"]["energy"].as_f64().unwrap());
    assert_eq!(c, 2.0);
    assert!(r >= c && r - c < 1e-2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fbpool(&["bogus"]).status.code(), Some(2));
    assert_eq!(fbpool(&["slice", "--f", "1", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(fbpool(&["verify", "--N-list", "2", "--tol", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(fbpool(&["energy", "--field", "/nonexistent/u.dump"]).status.code(), Some(2));
    assert_eq!(fbpool(&["--help"]).status.code(), Some(0));
}

#[test]
fn solve_energy_fb_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = fbpool(&["solve", "--N", "2", "--hy", "0.0625", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json_out(&o);
    for f in ["u.dump", "summary.json", "energy_history.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let history = std::fs::read_to_string(out.join("energy_history.csv")).unwrap();
    assert_eq!(history.lines().count() as u64, summary["iterations"].as_u64().unwrap() + 1);

    let dump = out.join("u.dump");
    let o = fbpool(&["energy", "--field", dump.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let e = json_out(&o);
    let total = e["total"].as_f64().unwrap();
    assert!((total - summary["final_energy"]["total"].as_f64().unwrap()).abs() < 1e-9 * total);

    let half = |sub: &str| json_out(&fbpool(&["energy", "--field", dump.to_str().unwrap(), sub]))["total"].as_f64().unwrap();
    let (left, right) = (half("--sub=-6,0,-1,1"), half("--sub=0,6,-1,1"));
    assert!((left + right - total).abs() < 1e-9 * total);

    let fb_dir = dir.path().join("fb");
    let o = fbpool(&["fb", "--field", dump.to_str().unwrap(), "--out", fb_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let fb = json_out(&o);
    assert!(fb["length"].as_f64().unwrap() > 0.0);
    assert!(fb["reflection_mismatch"].as_f64().unwrap() < 1e-9);
    let contours = std::fs::read_to_string(fb_dir.join("contours.csv")).unwrap();
    assert!(contours.starts_with("phase,line,closed,x,y,label"));
}

#[test]
fn verify_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = fbpool(&[
            "verify", "--N-list", "2,3", "--hy", "0.0625", "--regions", "4", "--audit-balls", "4",
            "--expect-subcritical", "--out", p.to_str().unwrap(),
        ]);
        (o, std::fs::read(&p).unwrap())
    };
    let (o1, a) = run("a.json");
    let (o2, b) = run("b.json");
    assert_eq!(a, b);
    assert_eq!(o1.status.code(), o2.status.code());
    let code = o1.status.code().unwrap();
    assert!(code == 0 || code == 1);

    let report: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["passed"].as_bool(), Some(code == 0));
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "energy_chain"));
    let stderr = String::from_utf8_lossy(&o1.stderr);
    let lines = stderr.lines().filter(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")).count();
    assert_eq!(lines, checks.len());
}

#[test]
fn radial_decay() {
    let o = fbpool(&["radial", "--N-list", "10,100,1000,10000"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_out(&o)["passed"].as_bool(), Some(true));
}
