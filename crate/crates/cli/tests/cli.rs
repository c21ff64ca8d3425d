use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn loclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loclab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV rows after the `#` header, split into cells.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

const FIVE: &str = r#"{"field": {"p": 2, "k": 1}, "T": 20, "M": 5, "N": 5, "kind": "rank_uniform",
                      "rank_pmf": [0.1, 0.2, 0.3, 0.2, 0.2, 0.0]}"#;
const SMALL: &str = r#"{"field": {"p": 2, "k": 1}, "T": 4, "M": 2, "N": 2, "kind": "rank_uniform",
                       "rank_pmf": [0, 0.5, 0.5]}"#;

#[test]
fn bounds_single_row() {
    let dir = TempDir::new().unwrap();
    let ch = write(dir.path(), "ch.json", FIVE);
    let o = loclab(&["bounds", "--config", ch.to_str().unwrap(), "--t-range", "5:5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# loclab"));
    assert!(text.contains("# config_sha256: "));
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["T", "c_ct", "ect_lower", "ect_upper", "subspace_lower", "upper"]);
    assert_eq!(rows.len(), 1);
}

#[test]
fn bounds_chain_over_long_range() {
    let dir = TempDir::new().unwrap();
    let ch = write(dir.path(), "ch.json", FIVE);
    let out = dir.path().join("bounds.csv");
    let o = loclab(&[
        "bounds",
        "--config",
        ch.to_str().unwrap(),
        "--t-range",
        "1:1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 1000);
    for row in &rows {
        let t: usize = row[0].parse().unwrap();
        let v = |i: usize| row[i].parse::<f64>().unwrap();
        let (ect_lower, ect_upper, upper) = (v(2), v(3), v(5));
        assert!(ect_upper >= ect_lower - 1e-12 && ect_upper <= upper + 1e-12, "T={t}");
        if t >= 5 {
            let (ct, sub) = (v(1), v(4));
            assert!(ct <= sub && sub <= upper && ect_lower >= ct - 1e-12, "T={t}");
        } else {
            assert!(row[1].is_empty() && row[4].is_empty());
        }
    }
}

#[test]
fn bounds_rejects_fractional_t() {
    let dir = TempDir::new().unwrap();
    let ch = write(dir.path(), "ch.json", FIVE);
    let o = loclab(&["bounds", "--config", ch.to_str().unwrap(), "--t-range", "1:7.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--t-range"));
}

#[test]
fn unknown_config_key_names_path() {
    let dir = TempDir::new().unwrap();
    let ch = write(dir.path(), "ch.json", &SMALL.replace("\"kind\"", "\"knid\": 1, \"kind\""));
    let o = loclab(&["bounds", "--config", ch.to_str().unwrap(), "--t-range", "4:5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("knid"));
}

#[test]
fn rho_min_table_cells() {
    let o = loclab(&["rho-min", "--nstar", "6", "--c", "1:6", "--table"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header.len(), 7);
    assert_eq!(rows[0][5], "0.649");
    assert_eq!(rows[0][6], "1.000");
}

#[test]
fn rho_curve_is_non_increasing() {
    let o = loclab(&["rho-curve", "--c", "3", "--nstar", "3:200"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&stdout(&o));
    let vals: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(vals.len(), 198);
    assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn validate_counting_passes_and_unknown_suite_is_usage_error() {
    let o = loclab(&["validate", "counting"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["results"]["pass"], true);
    assert_eq!(loclab(&["validate", "nonsense"]).status.code(), Some(2));
}

#[test]
fn counting_verify_table() {
    let o = loclab(&["counting", "verify", "--q", "2", "--max-dim", "3"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["name", "expected", "actual", "pass"]);
    assert!(rows.iter().all(|r| r.last().unwrap() == "true"));
}

#[test]
fn simulations_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let ch = write(dir.path(), "ch.json", SMALL);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = loclab(&[
            "simulate",
            "lmc",
            "--channel",
            ch.to_str().unwrap(),
            "--n",
            "8,16",
            "--s",
            "0.75",
            "--trials",
            "300",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["provenance"]["seed"], 5);
    assert!(v["provenance"]["rng"].as_str().unwrap().contains("ChaCha8"));
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
}

#[test]
fn experiment_file_drives_rm_simulation() {
    let dir = TempDir::new().unwrap();
    let exp = write(
        dir.path(),
        "exp.json",
        r#"{"channel": {"field": {"p": 2, "k": 1}, "T": 6, "M": 3, "N": 3, "kind": "full_rank"},
            "code": {"type": "gabidulin", "n": 1, "k": 2}, "trials": 200, "seed": 11}"#,
    );
    let o = loclab(&["simulate", "rm", "--channel", exp.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["provenance"]["seed"], 11);
    assert_eq!(v["results"]["decode_errors"], 0);
    assert_eq!(v["results"]["guarantee_frequency"], 1.0);
}

#[test]
fn rateless_reports_bound_and_batch_agreement() {
    let dir = TempDir::new().unwrap();
    let ch = write(dir.path(), "ch.json", SMALL);
    let o = loclab(&[
        "simulate",
        "rateless",
        "--channel",
        ch.to_str().unwrap(),
        "--R",
        "6",
        "--max-blocks",
        "24",
        "--sessions",
        "300",
        "--check-batch",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["results"]["batch_mismatches"], 0);
    let row16 = &v["results"]["by_block"][15];
    assert!(row16["success"].as_f64().unwrap() >= row16["success_bound"].as_f64().unwrap());
}

#[test]
fn optimal_rank_and_exact_capacity() {
    let dir = TempDir::new().unwrap();
    let ch = write(
        dir.path(),
        "ch.json",
        r#"{"field": {"p": 2, "k": 1}, "T": 2, "M": 1, "N": 1, "kind": "full_rank"}"#,
    );
    let o = loclab(&["optimal-rank", "--config", ch.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["results"]["r_star"], 1);
    let sub = v["results"]["symmetric_optimum"]["value"].as_f64().unwrap();
    let o = loclab(&["capacity-exact", "--config", ch.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let exact = v["results"]["capacity_bits"].as_f64().unwrap();
    assert!((exact - 2.0).abs() < 1e-6 && (sub - 2.0).abs() < 1e-6);
}
