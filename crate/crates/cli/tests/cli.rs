use std::path::PathBuf;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asian-retro")).args(args).output().unwrap()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn price_succeeds_and_writes_csv() {
    let csv = tmp("price.csv");
    let out = cli(&["price", "--samples", "200", "--method", "ue-free", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ue-free:"));
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("label,price,std_error,ci_low,ci_high,acceptance_rate,samples,seed\nue-free,"));
}

#[test]
fn config_file_and_overrides() {
    let cfg = tmp("hybrid.cfg");
    std::fs::write(&cfg, "preset = asian\nmethod = hybrid\nlevels = 3\n").unwrap();
    let out = cli(&["price", "--config", cfg.to_str().unwrap(), "--samples", "100", "--set", "control=none"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_configuration_exits_with_two() {
    let cfg = tmp("bad.cfg");
    std::fs::write(&cfg, "method = exact\nvol = -1\n").unwrap();
    assert_eq!(cli(&["price", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let unknown = tmp("unknown.cfg");
    std::fs::write(&unknown, "colour = blue\n").unwrap();
    let out = cli(&["price", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert_eq!(cli(&["price", "--method", "euler"]).status.code(), Some(2));
    assert_eq!(cli(&["table", "9"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn histogram_to_stdout() {
    let out = cli(&["histogram", "--samples", "500", "--bins", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("bin_center,exact,lognormal"));
}
