use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn eventjet(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventjet"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("binary runs")
}

const DECAY: &str = r#"
[model]
kind = "decay"
rate = 1.0

[event]
kind = "expr"
direction = "falling"
expr = { add = [{ state = 0 }, { const = -LEVEL }] }

[[box]]
name = "x"
half_width = 0.1

[run]
x0 = [2.0]
t_max = 10.0
order = 6
"#;

fn decay_config(dir: &Path, level: f64) -> PathBuf {
    let path = dir.join(format!("decay_{level}.toml"));
    std::fs::write(&path, DECAY.replace("LEVEL", &format!("{level:?}"))).unwrap();
    path
}

#[test]
fn expand_prints_trigger_time_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let out = eventjet(&["expand"], &decay_config(dir.path(), 1.0));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("component,exponents,coefficient\n"));
    // t_event = ln 2 + ln(1 + δ/2): the linear coefficient is 1/2
    let linear: f64 = text
        .lines()
        .find(|l| l.starts_with("t_event,1,"))
        .and_then(|l| l.rsplit(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((linear - 0.5).abs() < 1e-12, "{linear}");
}

#[test]
fn moments_and_radius_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = decay_config(dir.path(), 1.0);
    let out_dir = dir.path().join("out");
    for cmd in ["moments", "radius"] {
        let out = eventjet(&["--out", out_dir.to_str().unwrap(), "--format", "json", cmd], &cfg);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let moments: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("moments.json")).unwrap()).unwrap();
    assert!(moments.get("physical").is_some());
    assert!(out_dir.join("radius.json").exists());
}

#[test]
fn nominal_miss_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    // the decay never falls through a level above its start
    let out = eventjet(&["expand"], &decay_config(dir.path(), 5.0));
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nkind = \"decay\"\n").unwrap();
    assert_eq!(eventjet(&["expand"], &bad).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(eventjet(&["expand"], &missing).status.code(), Some(2));
}

#[test]
fn compare_is_byte_identical_and_seed_sensitive() {
    let cfg = configs().join("decay.toml");
    let run = |seed: &str| eventjet(&["--seed", seed, "compare", "--samples", "2000"], &cfg);
    let (a, b, c) = (run("4"), run("4"), run("5"));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_stops_on_the_bracketing_step() {
    let out = eventjet(&["simulate"], &configs().join("decay.toml"));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let x: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let n = x.len();
    assert!(x[n - 2] > 1.0 && x[n - 1] <= 1.0, "{:?}", &x[n - 2..]);
    let note = String::from_utf8(out.stderr).unwrap();
    let t: f64 = note.trim().trim_start_matches("event at t = ").trim_end_matches(" s").parse().unwrap();
    assert!((t - 2f64.ln()).abs() < 1e-9, "{note}");
}
