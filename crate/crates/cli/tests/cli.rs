use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mfid(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfid")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_bundled_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfid(&["list-scenarios"], dir.path());
    assert!(o.status.success());
    for name in ["param-pulse", "compare-pulse", "state-prbs"] {
        assert!(stdout(&o).contains(name));
    }
}

#[test]
fn runs_a_bundled_scenario_into_the_default_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfid(&["run", "param-pulse"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("normalized"));
    let report = dir.path().join("out/param-pulse/report.json");
    let text = fs::read_to_string(report).unwrap();
    assert!(text.contains("\"scenario\": \"param-pulse\""));
    // timing goes to stderr only
    assert!(stderr(&o).contains("µs/tick"));
    assert!(!text.contains("µs"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str| fs::read(dir.path().join(sub).join("report.csv")).unwrap();
    for sub in ["a", "b"] {
        let o = mfid(&["run", "compare-pulse", "--seed", "9", "--format", "csv", "--out-dir", sub], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(read("a"), read("b"));
    for f in ["estimates.csv", "plot.csv", "trajectory.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "name = \"x\"\n[sampling]\nts = 1.0\nbogus = 3\n").unwrap();
    for cmd in ["validate", "run"] {
        let o = mfid(&[cmd, path.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("sampling"), "{}", stderr(&o));
    }
    let o = mfid(&["run", "no-such-scenario"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_log_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("log.csv"), "t,u,y\n0,0,1\n1,0,1\n2.2,0,1\n").unwrap();
    let cfg = "name = \"log\"\n[plant]\nkind = \"csv\"\npath = \"log.csv\"\n[sampling]\nts = 1.0\n\
               [[estimators]]\nkind = \"batch\"\nhorizon = 2.0\n";
    fs::write(dir.path().join("log.toml"), cfg).unwrap();
    let o = mfid(&["run", "log.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn no_estimate_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let src = "name = \"short\"\n[plant]\nkind = \"rc\"\ncm = 10.0\ncs = 50.0\nrms = 2.0\nrsr = 5.0\ntr = 20.0\n\
               [input]\nkind = \"pulse\"\namplitude = 1.5\nperiod = 1200.0\nduty = 0.5\n\
               [sampling]\nts = 2.0\nduration = 1000.0\n\
               [[estimators]]\nkind = \"normalized\"\nhorizon = 2000.0\naverage = 2000.0\n";
    fs::write(dir.path().join("short.toml"), src).unwrap();
    let o = mfid(&["validate", "short.toml"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mfid(&["run", "short.toml", "--out-dir", "o"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stdout(&o).contains("no valid estimate"));
}
