use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn loopsoup(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopsoup"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SAMPLE: &str = r#"{"graph": {"kind": "complete", "n": 5, "kappa": 1.0}, "alpha": 0.8, "replicas": 300, "seed": 7, "dump": 2}"#;

#[test]
fn verify_on_bundled_fixtures_succeeds() {
    let d = TempDir::new().unwrap();
    let o = loopsoup(d.path(), &["verify", "--replicas", "4000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/verify.json")).unwrap()).unwrap();
    let checks = doc["result"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_with_zero_tolerance_fails_with_code_three() {
    let d = TempDir::new().unwrap();
    let o = loopsoup(d.path(), &["verify", "--replicas", "200", "--tolerance", "0"]);
    assert_eq!(code(&o), 3);
    // the report is still written
    assert!(d.path().join("out/verify.json").exists());
}

#[test]
fn overlapping_blocks_are_a_config_error() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "exact.json",
        r#"{"graph": {"kind": "fixture", "name": "k4"}, "alphas": [1.0], "partitions": [[[0, 1], [1, 2, 3]]]}"#,
    );
    let o = loopsoup(d.path(), &["exact", "--config", &c]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("partition"));
}

#[test]
fn exact_writes_csv_with_config_hash() {
    let d = TempDir::new().unwrap();
    let c = write_config(d.path(), "exact.json", r#"{"graph": {"kind": "fixture", "name": "k4"}, "alphas": [0.5, 1.0]}"#);
    let o = loopsoup(d.path(), &["exact", "--config", &c]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("out/exact.csv")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/exact.json")).unwrap()).unwrap();
    let hash = doc["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(csv.lines().next().unwrap(), format!("# loopsoup {} config_sha256 {hash}", env!("CARGO_PKG_VERSION")));
    // header + column names + 15 partitions at two intensities
    assert_eq!(csv.lines().count(), 2 + 30);
    let mass = doc["result"]["total_mass"].as_f64().unwrap();
    assert!((mass - (256.0f64 / 125.0).ln()).abs() < 1e-12);
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let d = TempDir::new().unwrap();
    let c = write_config(d.path(), "sample.json", SAMPLE);
    let run = |sub: &str| {
        let dir = d.path().join(sub);
        fs::create_dir_all(&dir).unwrap();
        let o = loopsoup(&dir, &["sample", "--config", &c]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        ["sample.csv", "soup_0.jsonl", "soup_1.jsonl"].map(|f| fs::read(dir.join("out").join(f)).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    assert!(!d.path().join("a/out/soup_2.jsonl").exists());
}

#[test]
fn thread_count_does_not_change_output() {
    let d = TempDir::new().unwrap();
    let c = write_config(d.path(), "sample.json", SAMPLE);
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let dir = d.path().join(threads);
        let o = Command::new(env!("CARGO_BIN_EXE_loopsoup"))
            .args(["sample", "--config", &c, "--out"])
            .arg(dir.join("out"))
            .env("LOOPSOUP_THREADS", threads)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        outs.push(fs::read(dir.join("out/sample.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let d = TempDir::new().unwrap();
    let c = write_config(d.path(), "sample.json", SAMPLE);
    let read = |sub: &str, extra: &[&str]| {
        let dir = d.path().join(sub);
        let mut args = vec!["sample", "--config", c.as_str()];
        args.extend_from_slice(extra);
        assert_eq!(code(&loopsoup(&dir, &args)), 0);
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("out/sample.json")).unwrap()).unwrap();
        (fs::read(dir.join("out/sample.csv")).unwrap(), doc)
    };
    let (base, _) = read("base", &[]);
    let (other, doc) = read("other", &["--seed", "8"]);
    assert_eq!(doc["config"]["seed"], 8);
    assert_ne!(base, other);
}

#[test]
fn sampling_without_a_seed_is_rejected() {
    let d = TempDir::new().unwrap();
    let c = write_config(d.path(), "sample.json", r#"{"graph": {"kind": "two_vertex", "c": 1.0, "kappa": 1.0}, "alpha": 1.0, "replicas": 10}"#);
    let o = loopsoup(d.path(), &["sample", "--config", &c]);
    assert_eq!(code(&o), 2);
    assert!(!d.path().join("out/sample.csv").exists());
}

#[test]
fn unknown_config_field_is_rejected() {
    let d = TempDir::new().unwrap();
    let c = write_config(
        d.path(),
        "exact.json",
        r#"{"graph": {"kind": "fixture", "name": "k4"}, "alphas": [1.0], "alpha": 2.0}"#,
    );
    assert_eq!(code(&loopsoup(d.path(), &["exact", "--config", &c])), 2);
    let bad_json = write_config(d.path(), "broken.json", "{\"graph\": ");
    assert_eq!(code(&loopsoup(d.path(), &["exact", "--config", &bad_json])), 2);
}

#[test]
fn missing_config_is_an_io_error() {
    let d = TempDir::new().unwrap();
    let missing = d.path().join("nope.json");
    assert_eq!(code(&loopsoup(d.path(), &["exact", "--config", missing.to_str().unwrap()])), 4);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let d = TempDir::new().unwrap();
    let c = write_config(d.path(), "exact.json", r#"{"graph": {"kind": "two_vertex", "c": 1.0, "kappa": 1.0}, "alphas": [1.0]}"#);
    // a regular file where the output directory should go
    let blocker = d.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_loopsoup"))
        .args(["exact", "--config", &c, "--out"])
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 4);
}

#[test]
fn renewal_and_kn_runs_write_their_tables() {
    let d = TempDir::new().unwrap();
    let r = write_config(d.path(), "renewal.json", r#"{"kappa": 2.0, "alpha": 1.0, "n_max": 10}"#);
    assert_eq!(code(&loopsoup(d.path(), &["renewal", "--config", &r])), 0);
    let csv = fs::read_to_string(d.path().join("out/renewal.csv")).unwrap();
    assert!(csv.starts_with("# loopsoup "));
    let k = write_config(d.path(), "kn.json", r#"{"sizes": [50], "epsilon": 1.0, "replicas": 40, "seed": 3, "bootstrap": 50}"#);
    let o = loopsoup(d.path(), &["kn", "--config", &k]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("out/kn_summary.json").exists());
}

#[test]
fn bundled_configs_run() {
    let d = TempDir::new().unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for sub in ["exact", "sample", "renewal"] {
        let c = dir.join(format!("{sub}.json"));
        let o = loopsoup(&d.path().join(sub), &[sub, "--config", c.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
