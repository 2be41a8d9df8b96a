use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn latspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    latspec(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const GREEN: &str = r#"
experiment = "green-decay"
dimension = 1

[green-decay]
lambda = -1.0
"#;

#[test]
fn green_decay_reports_the_decay_rate() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "green.toml", GREEN);
    let out = dir.path().join("out");
    let o = run(&config, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));

    let record: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("green.json")).unwrap()).unwrap();
    let gamma = record["summary"]["gamma"].as_f64().unwrap();
    assert!((gamma - 0.9624).abs() < 1e-4, "γ = {gamma}");
    assert_eq!(record["config"]["green"]["tolerance"].as_f64(), Some(1e-10));
    assert_eq!(record["config"]["green-decay"]["n-max"].as_u64(), Some(20));
    assert_eq!(record["config_hash"].as_str().unwrap().len(), 64);
    assert!(record["wall_clock_seconds"].as_f64().is_some());
    assert!(record["library_version"].is_string());

    let csv = std::fs::read_to_string(out.join("green.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,site,distance,green,abs_green"));
    assert_eq!(lines.count(), 21);
}

#[test]
fn missing_dimension_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.toml",
        "experiment = \"green-decay\"\n[green-decay]\nlambda = -1.0\n",
    );
    let out = dir.path().join("out");
    let o = run(&config, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension"), "{}", stderr(&o));
    assert!(!out.exists());

    let v = latspec(&["validate", config.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(2));
}

#[test]
fn invalid_values_name_their_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.toml", &GREEN.replace("-1.0", "2.0"));
    let o = latspec(&["validate", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("green-decay.lambda"), "{}", stderr(&o));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "fill.toml",
        r#"
experiment = "spectrum-fill"
dimension = 1
seed = 11

[spectrum-fill]
lambda0 = -1.0
radius = 200
rule = { kind = "power-law", p = 2.0 }
realizations = 4
"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&config, &a, &[]).status.success());
    assert!(run(&config, &b, &["--threads", "1"]).status.success());
    let first = std::fs::read(a.join("fill.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.join("fill.csv")).unwrap());
    assert!(first.len() > 100);

    // A different seed changes both the numbers and the hash.
    let c = dir.path().join("c");
    assert!(run(&config, &c, &["--seed", "12"]).status.success());
    assert_ne!(first, std::fs::read(c.join("fill.csv")).unwrap());
    let hash = |d: &Path| -> String {
        let v: Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("fill.json")).unwrap()).unwrap();
        v["config_hash"].as_str().unwrap().to_string()
    };
    assert_eq!(hash(&a), hash(&b));
    assert_ne!(hash(&a), hash(&c));
}

#[test]
fn numerical_failure_exits_3_without_output() {
    let dir = tempfile::tempdir().unwrap();
    // The wavefront leaves a box of radius 20 long before t = 10.
    let config = write_config(
        dir.path(),
        "probe.toml",
        r#"
experiment = "wave-probe"
dimension = 1

[potential]
rule = { kind = "explicit", sites = [[3]] }
radius = 10
amplitude = 1.0

[wave-probe]
box-radius = 20
times = [1.0, 10.0]
"#,
    );
    let out = dir.path().join("out");
    let o = run(&config, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("wavefront"));
    assert!(!out.join("probe.csv").exists());
    assert!(!out.join("probe.json").exists());
}

#[test]
fn io_failures_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = latspec(&["run", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let config = write_config(dir.path(), "green.toml", GREEN);
    let blocker = write_config(dir.path(), "file", "");
    let o = run(&config, &blocker.join("sub"), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn validate_checks_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let fill = |extra: &str| {
        format!(
            r#"
experiment = "spectrum-fill"
dimension = 1

[spectrum-fill]
lambda0 = -1.0
radius = 2000
rule = {{ kind = "power-law", p = 2.0 }}
realizations = 2
delta = 0.4
{extra}
"#
        )
    };
    let ok = write_config(dir.path(), "ok.toml", &fill(""));
    let o = latspec(&["validate", ok.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[pass] sparseness ratio"), "{}", stdout(&o));
    assert!(stdout(&o).contains("[pass] coupling bound"));

    let strong = write_config(dir.path(), "strong.toml", &fill("a = 3.0"));
    let o = latspec(&["validate", strong.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[WARNING] coupling bound"), "{}", stdout(&o));
    assert!(stderr(&o).contains("warning"));

    let dense = write_config(
        dir.path(),
        "dense.toml",
        &format!(
            r#"
experiment = "wave-probe"
dimension = 1

[potential]
rule = {{ kind = "explicit", sites = [{}] }}
radius = 64
amplitude = 1.0

[wave-probe]
box-radius = 200
times = [1.0, 2.0]
"#,
            (1..=64).map(|k| format!("[{k}]")).collect::<Vec<_>>().join(", ")
        ),
    );
    let o = latspec(&["validate", dense.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[FLAGGED] scattering summability"), "{}", stdout(&o));
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = latspec(&["validate", path.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
            assert!(!stdout(&o).contains("FLAGGED"), "{}", stdout(&o));
            seen += 1;
        }
    }
    assert_eq!(seen, 8);
}

#[test]
fn small_runs_of_every_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (
            "q.toml",
            r#"
experiment = "q-decay"
dimension = 2
[q-decay]
tau1 = 2.0
sites = [[4, 0], [8, 0], [16, 0], [40, 0]]
"#,
        ),
        (
            "sw.toml",
            r#"
experiment = "simon-wolff"
dimension = 1
[potential]
rule = { kind = "power-law", p = 2.0 }
radius = 100
amplitude = -1.0
[simon-wolff]
lambda = -0.7
j = [0]
radii = [10, 50, 100]
"#,
        ),
        (
            "imp.toml",
            r#"
experiment = "impurity"
dimension = 3
[impurity]
betas = [-1.0, -8.0]
"#,
        ),
        (
            "bump.toml",
            r#"
experiment = "bump-measure"
dimension = 1
[potential]
rule = { kind = "power-law", p = 2.0 }
radius = 100
amplitude = -1.0
profile = "converging"
[bump-measure]
beta = -1.0
far-sites = [[9], [16], [25]]
z = [[0.0, 1.0]]
local-radius = 30
global-radius = 100
"#,
        ),
        (
            "gv.toml",
            r#"
experiment = "one-plus-gv"
dimension = 1
[potential]
rule = { kind = "explicit", sites = [[10], [20]] }
radius = 20
amplitude = -1.5
[one-plus-gv]
epsilon = 0.5
lambda-min = -3.0
lambda-max = -0.5
points = 2001
sites = [[10], [20]]
"#,
        ),
        (
            "probe.toml",
            r#"
experiment = "wave-probe"
dimension = 1
[potential]
rule = { kind = "explicit", sites = [[5]] }
radius = 10
amplitude = 1.0
[wave-probe]
box-radius = 60
times = [2.0, 4.0, 6.0, 8.0]
"#,
        ),
    ];
    let out = dir.path().join("out");
    for (name, text) in configs {
        let path = write_config(dir.path(), name, text);
        let o = run(&path, &out, &[]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let stem = name.trim_end_matches(".toml");
        let record: Value = serde_json::from_str(
            &std::fs::read_to_string(out.join(format!("{stem}.json"))).unwrap(),
        )
        .unwrap();
        assert!(record["rows"].as_array().is_some_and(|r| !r.is_empty()), "{name}");
        assert!(out.join(format!("{stem}.csv")).exists());
    }
    let imp = std::fs::read_to_string(out.join("imp.csv")).unwrap();
    // β = -1 binds no level in three dimensions.
    assert!(imp.lines().nth(1).unwrap().starts_with("-1.0,,"), "{imp}");
}
