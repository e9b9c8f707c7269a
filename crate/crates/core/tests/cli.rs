use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const EXE: &str = env!("CARGO_BIN_EXE_metric-bandits");

const TWO_POINTS: &str = r#"schema_version = 1
horizon = 100

[seeds]
count = 2

[metric]
kind = "finite_explicit"
matrix = [[0.0, 1.0], [1.0, 0.0]]

[payoff]
kind = "explicit_finite"
values = [0.9, 0.1]

[algorithm]
kind = "ucb1"
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(EXE)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("METRIC_BANDITS_THREADS")
        .env_remove("METRIC_BANDITS_SEED_BASE")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_curve_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two.toml", TWO_POINTS);
    let out = dir.path().join("out");
    let o = cli(&["run"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,mean_regret,stderr,replications");
    assert!(lines.len() > 10);
    assert!(lines[1..]
        .iter()
        .all(|l| l.split(',').count() == 4 && l.ends_with(",2")));
    assert!(lines.last().unwrap().starts_with("100,"));
    assert!(!csv.contains('\r'));
    let summary: Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replications"], 2);
    assert_eq!(summary["final_regrets"].as_array().unwrap().len(), 2);
    assert!(summary.get("wall_time_secs").is_none_or(Value::is_null));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = TWO_POINTS
        .replace("count = 2", "count = 9")
        .replace("horizon = 100", "horizon = 3000");
    let cfg = write_config(dir.path(), "two.toml", &text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cli(&["run", "--threads", "1"], &cfg, &a).status.success());
    assert!(cli(&["run", "--threads", "3"], &cfg, &b).status.success());
    for f in ["curve.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn seed_base_flag_and_env_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two.toml", TWO_POINTS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cli(&["run", "--seed-base", "40"], &cfg, &a)
        .status
        .success());
    let o = Command::new(EXE)
        .arg("run")
        .env("METRIC_BANDITS_CONFIG", &cfg)
        .env("METRIC_BANDITS_OUT", &b)
        .env("METRIC_BANDITS_SEED_BASE", "40")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(a.join("curve.csv")).unwrap(),
        std::fs::read(b.join("curve.csv")).unwrap()
    );
}

#[test]
fn quota_without_decomposition_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.toml",
        r#"schema_version = 1
horizon = 200

[metric]
kind = "weighted_tree"
depth = 6
fat = "leaf"

[payoff]
kind = "distance_to_target"
target = [0, 1, 0, 1, 0, 1]

[algorithm]
kind = "quota"
d = 1.5
"#,
    );
    let o = cli(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("[algorithm.decomposition]"), "{msg}");
    assert!(msg.contains("q.toml:13:"), "{msg}");
}

#[test]
fn quota_with_decomposition_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.toml",
        r#"schema_version = 1
horizon = 500

[metric]
kind = "weighted_tree"
depth = 6
fat = "leaf"

[payoff]
kind = "distance_to_target"
target = [0, 1, 0, 1, 0, 1]

[algorithm]
kind = "quota"
d = 1.5

[algorithm.decomposition]
kind = "fat_tree"
"#,
    );
    let o = cli(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn schema_version_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        &TWO_POINTS.replace("schema_version = 1", "schema_version = 2"),
    );
    let o = cli(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("v.toml:1:"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = Command::new(EXE)
        .args(["run", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_flags_a_non_lipschitz_payoff() {
    let dir = tempfile::tempdir().unwrap();
    let text = TWO_POINTS.replace(
        "matrix = [[0.0, 1.0], [1.0, 0.0]]",
        "matrix = [[0.0, 0.25], [0.25, 0.0]]",
    );
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let out = dir.path().join("out");
    let o = cli(&["verify"], &cfg, &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL lipschitz"));
    assert!(stderr(&o).contains("lipschitz"));
    assert!(out.join("verify.json").exists());
}

#[test]
fn verify_passes_on_a_noiseless_instance() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[rewards]\nkind = \"point_mass\"\natoms = [[0.0, 1.0]]\n",
        TWO_POINTS.replace("kind = \"ucb1\"", "kind = \"zooming\"")
    );
    let cfg = write_config(dir.path(), "ok.toml", &text);
    let o = cli(&["verify"], &cfg, &dir.path().join("out"));
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        stderr(&o)
    );
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn horizon_sweep_gives_growing_final_regret() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[sweep]\nfield = \"horizon\"\nvalues = [4096, 16384, 65536]\n",
        TWO_POINTS
            .replace("kind = \"ucb1\"", "kind = \"zooming\"")
            .replace("count = 2", "count = 4")
    );
    let cfg = write_config(dir.path(), "s.toml", &text);
    let out = dir.path().join("out");
    let o = cli(&["sweep"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let entries = summary["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    let finals: Vec<f64> = entries
        .iter()
        .map(|e| e["mean_final_regret"].as_f64().unwrap())
        .collect();
    assert!(finals.windows(2).all(|w| w[1] >= w[0]), "{finals:?}");
    for k in 0..3 {
        assert!(out.join(format!("curve_{k}.csv")).exists());
    }
}

#[test]
fn needle_gen_output_loads_as_payoff() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n.toml",
        r#"schema_version = 1
horizon = 300

[metric]
kind = "interval_ld"

[needle]
a = 0.1
b = 0.25
depth_cap = 4
seed = 2
"#,
    );
    let out = dir.path().join("out");
    assert!(cli(&["needle-gen"], &cfg, &out).status.success());
    let run_cfg = write_config(
        dir.path(),
        "r.toml",
        "schema_version = 1\nhorizon = 300\n\n[metric]\nkind = \"interval_ld\"\n\n[payoff]\nkind = \"needle_tower\"\nfile = \"out/needle.json\"\n\n[algorithm]\nkind = \"zooming\"\n",
    );
    let o = cli(&["run"], &run_cfg, &dir.path().join("run"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn dim_reports_per_radius_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.toml",
        "schema_version = 1\nhorizon = 10\n\n[metric]\nkind = \"interval_ld\"\n\n[payoff]\nkind = \"peak_function\"\npeak = 0.3\n\n[dim]\nc = 16.0\nradii = [0.25, 0.125]\n",
    );
    let out = dir.path().join("out");
    assert!(cli(&["dim"], &cfg, &out).status.success());
    let v: Value = serde_json::from_slice(&std::fs::read(out.join("dim.json")).unwrap()).unwrap();
    assert!(v.to_string().contains("0.125"));
}
