use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kzb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kzb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn curve(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn checks(r: &Value) -> &Vec<Value> {
    r["checks"].as_array().unwrap()
}

#[test]
fn tame_suite_on_rational_curve_passes() {
    let dir = TempDir::new().unwrap();
    let c = curve(dir.path(), "p1.json", r#"{"variant": "rational"}"#);
    let out = dir.path().join("r.json");
    let o = kzb(&[
        "verify",
        "tame",
        "--curve",
        c.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["suite"], "tame");
    assert_eq!(r["seed"], "0x5eed");
    assert_eq!(r["curve"]["variant"], "rational");
    assert!(r["wall_time"].as_f64().unwrap() >= 0.0);
    let names: Vec<&str> = checks(&r).iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"tame.weil_rational"));
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for c in checks(&r) {
        for key in ["anchor", "max_error", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "{key} missing");
        }
        assert_eq!(c["pass"], true);
    }
}

#[test]
fn operator_suite_commutes_at_critical_level() {
    let dir = TempDir::new().unwrap();
    let c = curve(dir.path(), "e.json", r#"{"variant": "elliptic", "tau": [0.0, 1.0]}"#);
    let out = dir.path().join("r.json");
    let o = kzb(&[
        "verify",
        "operators",
        "--curve",
        c.to_str().unwrap(),
        "--k",
        "-2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let comm: Vec<&Value> = checks(&r)
        .iter()
        .filter(|c| c["name"].as_str().unwrap().contains("commutator"))
        .collect();
    assert!(!comm.is_empty());
    for c in comm {
        assert!(c["max_error"].as_f64().unwrap() < 1e-7, "{c}");
    }
}

#[test]
fn off_critical_level_fails_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let c = curve(dir.path(), "e.json", r#"{"variant": "elliptic", "tau": [0.0, 1.0]}"#);
    let o = kzb(&["verify", "operators", "--curve", c.to_str().unwrap(), "--k", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(checks(&r).iter().any(|c| c["pass"] == false));
}

#[test]
fn malformed_curve_spec_is_diagnosed() {
    let dir = TempDir::new().unwrap();
    let bad = curve(dir.path(), "bad.json", r#"{"variant": "elliptic", "tau": [0.0, -1.0]}"#);
    let o = kzb(&["verify", "theta", "--curve", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let garbage = curve(dir.path(), "garbage.json", "{not json");
    let o = kzb(&["verify", "theta", "--curve", garbage.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a curve spec"));
}

fn strip_time(mut r: Value) -> Value {
    r["wall_time"] = Value::Null;
    r
}

#[test]
fn reports_are_reproducible_across_pool_sizes() {
    let dir = TempDir::new().unwrap();
    let c = curve(dir.path(), "e.json", r#"{"variant": "elliptic", "tau": [0.3, 1.2]}"#);
    let run = |threads: &str, seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_kzb"))
            .args(["verify", "tame", "--curve", c.to_str().unwrap(), "--seed", seed])
            .env("KZB_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        strip_time(serde_json::from_slice(&o.stdout).unwrap())
    };
    let a = run("1", "0x1234");
    assert_eq!(a, run("3", "0x1234"));
    assert_ne!(a, run("1", "0x4321"));
}

#[test]
fn tolerance_override_applies() {
    let dir = TempDir::new().unwrap();
    let c = curve(dir.path(), "p1.json", r#"{"variant": "rational"}"#);
    let o = kzb(&[
        "verify",
        "theta",
        "--curve",
        c.to_str().unwrap(),
        "--tol",
        "theta.even_parity=1e-30",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let parity = checks(&r).iter().find(|c| c["name"] == "theta.even_parity").unwrap();
    assert_eq!(parity["tolerance"].as_f64(), Some(1e-30));
}

#[test]
fn dump_writes_one_row_per_cell_and_masks_poles() {
    let dir = TempDir::new().unwrap();
    let c = curve(dir.path(), "e.json", r#"{"variant": "elliptic", "tau": [0.0, 1.0]}"#);
    let (csv1, csv2, svg) = (
        dir.path().join("a.csv"),
        dir.path().join("b.csv"),
        dir.path().join("a.svg"),
    );
    let args = |out: &Path| {
        vec![
            "dump".to_string(),
            "--kernel".into(),
            "omega-tilde".into(),
            "--curve".into(),
            c.to_str().unwrap().into(),
            "--grid".into(),
            "50,50".into(),
            "--window".into(),
            "0,1,0,1".into(),
            "--w".into(),
            "0.51,0.49".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let mut first = args(&csv1);
    first.extend(["--svg".to_string(), svg.to_str().unwrap().to_string()]);
    assert!(Command::new(env!("CARGO_BIN_EXE_kzb"))
        .args(&first)
        .status()
        .unwrap()
        .success());
    assert!(Command::new(env!("CARGO_BIN_EXE_kzb"))
        .args(args(&csv2))
        .status()
        .unwrap()
        .success());
    let text = std::fs::read_to_string(&csv1).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2500);
    let masked: Vec<&&str> = rows.iter().filter(|r| r.ends_with("nan,nan")).collect();
    assert!(!masked.is_empty());
    for r in masked {
        let f: Vec<f64> = r.split(',').take(2).map(|x| x.parse().unwrap()).collect();
        assert!((f[0] - 0.51).hypot(f[1] - 0.49) < 0.02, "{r}");
    }
    assert_eq!(text, std::fs::read_to_string(&csv2).unwrap());
    let svg = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches("<rect").count(), 2500);
    assert!(svg.contains("#ffffff"));
}

#[test]
fn twisted_dump_needs_one_twist_per_cycle() {
    let dir = TempDir::new().unwrap();
    let c = curve(dir.path(), "e.json", r#"{"variant": "elliptic", "tau": [0.0, 1.0]}"#);
    let o = kzb(&[
        "dump",
        "--kernel",
        "green-twisted",
        "--curve",
        c.to_str().unwrap(),
        "--grid",
        "4,4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = kzb(&[
        "dump",
        "--kernel",
        "green-twisted",
        "--curve",
        c.to_str().unwrap(),
        "--grid",
        "4,4",
        "--lambda",
        "0.3,0.1",
    ]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 17);
}

#[test]
fn tame_subcommand_prints_exact_fraction() {
    let o = kzb(&[
        "tame",
        "--f",
        r#"{"rational": {"factors": [["0", 1]]}}"#,
        "--g",
        r#"{"rational": {"scalar": "-1", "factors": [["1", 1]]}}"#,
    ]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "1");
    // overlapping supports: σ(z, 3z/(z − 5)) is still 1
    let o = kzb(&[
        "tame",
        "--f",
        r#"{"rational": {"factors": [["0", 1]]}}"#,
        "--g",
        r#"{"rational": {"scalar": "3", "factors": [["0", 1], ["5", -1]]}}"#,
    ]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "1");
}

#[test]
fn tame_subcommand_on_elliptic_functions() {
    let f =
        r#"{"elliptic": {"tau": [0.1, 1.1], "zeros": [[0.2, 0.3], [0.7, 0.6]], "poles": [[0.5, 0.5], [0.4, 0.4]]}}"#;
    let g =
        r#"{"elliptic": {"tau": [0.1, 1.1], "zeros": [[0.1, 0.2], [0.8, 0.7]], "poles": [[0.6, 0.35], [0.3, 0.55]]}}"#;
    let o = kzb(&["tame", "--f", f, "--g", g, "--winding"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    let first = text.lines().next().unwrap();
    let re: f64 = first.split_whitespace().next().unwrap().parse().unwrap();
    assert!((re - 1.0).abs() < 1e-8, "{first}");
    assert!(text.contains("n(f) = 0"));
}
