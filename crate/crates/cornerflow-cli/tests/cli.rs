use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cornerflow"))
}

fn run(args: &[&str]) -> Output {
    bin().arg("--quiet").args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const NEAR_TIP: &str = r#"
gamma0 = 1.0
t_final = 1.0
dt = "auto"
output_stride = 2
tracked_particles = [0, 7]
seed = 3

[domain]
kind = "exterior"
map = "exterior_segment"

[patch]
shape = "disk"
center = [1.2, 0.15]
size = 0.15
h = 0.03
omega0 = { uniform = -1.0 }
"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn simulate_is_deterministic_across_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", NEAR_TIP);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = run(&["--threads", "1", "simulate", "--config", s(&cfg), "--out", s(&a)]);
    let ob = run(&["--threads", "2", "simulate", "--config", s(&cfg), "--out", s(&b)]);
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stdout));
    assert_eq!(ob.status.code(), Some(0));
    assert_eq!(oa.stdout, ob.stdout);
    let fa = files(&a);
    assert_eq!(fa, files(&b));
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    for want in ["diagnostics.csv", "summary.json", "trace_0.csv", "trace_7.csv", "snapshot_00000.json"] {
        assert!(names.contains(&want), "{names:?}");
    }
    let diag = String::from_utf8(fa.iter().find(|f| f.0 == "diagnostics.csv").unwrap().1.clone()).unwrap();
    assert!(diag.starts_with("t,total_circ,l1,linf,support_radius,min_gap,gamma,lyap_max\n"));
}

#[test]
fn validation_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", NEAR_TIP);
    let out = tmp.path().join("run");
    assert_eq!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(0));

    let o = run(&["probe-map", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["beta"], 2.0);
    assert_eq!(v["corner_fits"].as_array().unwrap().len(), 2);
    assert!(tmp.path().join("probe_map.json").exists());

    let o = run(&["kernel-test", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().all(|c| c["pass"] == true && c["check_name"].is_string()));

    let snaps: Vec<_> = files(&out).into_iter().filter(|f| f.0.starts_with("snapshot_")).collect();
    let last = out.join(&snaps.last().unwrap().0);
    let o = run(&[
        "validate-lyapunov",
        "--config",
        s(&cfg),
        "--snapshot",
        s(&last),
        "--trace",
        s(&out.join("trace_7.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().any(|c| c["check"] == "trace_7_gronwall"));
}

#[test]
fn twin_run_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", NEAR_TIP);
    let o = run(&["twin-run", "--config", s(&cfg), "--perturb", "identical"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,gap_l2,fitted_rate"));
    for l in lines {
        assert_eq!(l.split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.0);
    }
    let o = run(&["twin-run", "--config", s(&cfg), "--perturb", "jitter:1e-6", "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(tmp.path().join("twin_run.csv")).unwrap(), o.stdout);
}

#[test]
fn errors_are_machine_readable() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", &NEAR_TIP.replace("size = 0.15", "size = 0.15\nfoo = 1"));
    let o = run(&["simulate", "--config", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["error"], "Parse");

    let touching = write_config(tmp.path(), "t.toml", &NEAR_TIP.replace("center = [1.2, 0.15]", "center = [0.9, 0.1]"));
    let v: serde_json::Value = serde_json::from_slice(&run(&["simulate", "--config", s(&touching)]).stdout).unwrap();
    assert_eq!(v["error"], "Validation");

    let cfg = write_config(tmp.path(), "run.toml", NEAR_TIP);
    let o = run(&["twin-run", "--config", s(&cfg), "--perturb", "shuffle"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(run(&["simulate", "--config", s(&tmp.path().join("missing.toml"))]).status.code() == Some(1));
}

#[test]
fn reversed_signs_are_noted_not_failed() {
    let tmp = tempfile::tempdir().unwrap();
    let text = NEAR_TIP.replace("uniform = -1.0", "uniform = 1.0").replace("gamma0 = 1.0", "gamma0 = 3.0");
    let cfg = write_config(tmp.path(), "rev.toml", &text);
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["sign_conditions_met"], false);
    assert_eq!(v["notes"][0], "sign conditions not met");
}
