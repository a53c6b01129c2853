use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slownav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slownav")).args(args).output().unwrap()
}

fn with_out<'a>(sub: &'a str, out: &'a Path, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![sub, "--out", out.to_str().unwrap()];
    v.extend_from_slice(extra);
    v
}

#[test]
fn phases_match_single_run() {
    let phased = tempfile::tempdir().unwrap();
    let whole = tempfile::tempdir().unwrap();
    let first = slownav(&with_out("gen-data", phased.path(), &["--config", "smoke"]));
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    for sub in ["select-sv", "train-sfa", "train-lspi", "eval-policy", "report"] {
        let o = slownav(&with_out(sub, phased.path(), &[]));
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = slownav(&with_out("run", whole.path(), &["--config", "smoke"]));
    assert!(o.status.success());
    let read = |d: &Path| fs::read_to_string(d.join("summary.json")).unwrap();
    assert_eq!(read(phased.path()), read(whole.path()));
}

#[test]
fn eval_policy_accepts_external_weights() {
    let dir = tempfile::tempdir().unwrap();
    assert!(slownav(&with_out("run", dir.path(), &["--config", "smoke"])).status.success());
    let copy = dir.path().join("copy.json");
    fs::copy(dir.path().join("qweights.json"), &copy).unwrap();
    let o = slownav(&with_out("eval-policy", dir.path(), &["--weights", copy.to_str().unwrap()]));
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("C = "));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(slownav(&["--help"]).status.code(), Some(0));
    assert_eq!(slownav(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(slownav(&with_out("run", dir.path(), &["--config", "nonexistent-preset"])).status.code(), Some(1));
    assert_eq!(slownav(&with_out("run", dir.path(), &["--config", "smoke", "--set", "sfa.n_filters=500"])).status.code(), Some(1));
    assert_eq!(slownav(&with_out("train-sfa", dir.path(), &["--config", "smoke"])).status.code(), Some(1));
    let o = slownav(&with_out("run", dir.path(), &["--config", "smoke", "--set", "rl.gamma"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("KEY=VALUE"));
}
