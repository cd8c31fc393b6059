use std::path::{Path, PathBuf};

use assert_cmd::Command;
use serde_json::Value;
use tempfile::TempDir;

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.json")
}

fn write_config(dir: &Path, a: &str, h: &str, f: &str, grid: usize) -> PathBuf {
    let cfg = serde_json::json!({
        "geometry": { "n_ambient": 6, "d_eff": 1, "grid_size": grid },
        "a": a, "h": h, "f": f,
        "q": 2.5,
        "seed": 3
    });
    let path = dir.join("cfg.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn biharm(config: &Path, out: &Path, args: &[&str]) -> assert_cmd::assert::Assert {
    Command::cargo_bin("biharm")
        .unwrap()
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .assert()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Structural equality with numbers compared to `tol` relative (absolute
/// below 1).
fn json_close(a: &Value, b: &Value, tol: f64, at: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0) {
                Ok(())
            } else {
                Err(format!("{at}: {x} vs {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Err(format!("{at}: lengths {} vs {}", x.len(), y.len()));
            }
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                json_close(p, q, tol, &format!("{at}[{i}]"))?;
            }
            Ok(())
        }
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<_> = x.keys().collect();
            let ky: Vec<_> = y.keys().collect();
            if kx != ky {
                return Err(format!("{at}: keys {kx:?} vs {ky:?}"));
            }
            for (k, v) in x {
                json_close(v, &y[k], tol, &format!("{at}.{k}"))?;
            }
            Ok(())
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{at}: {a} vs {b}")),
    }
}

#[test]
fn bundled_certificate_matches_the_golden_report() {
    let out = TempDir::new().unwrap();
    // the bundled example fails the second condition, so certify exits 1
    biharm(&example(), out.path(), &["certify"]).code(1);
    let got = read_json(&out.path().join("report.json"));
    let golden: Value = serde_json::from_str(include_str!("golden/certify_report.json")).unwrap();
    json_close(&got, &golden, 1e-9, "report").unwrap();
    let err = read_json(&out.path().join("error.json"));
    assert_eq!(err["kind"], "ConditionsFailed");
    assert_eq!(err["exit_code"], 1);
}

#[test]
fn all_negative_f_certifies() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "0.2", "-1", "-1", 64);
    let out = dir.path().join("out");
    biharm(&cfg, &out, &["certify"]).success();
    let r = read_json(&out.join("report.json"));
    assert_eq!(r["lambda_af"]["value"], "+inf");
    assert_eq!(r["cond1_holds"], true);
    assert!(!out.join("error.json").exists());
}

#[test]
fn positive_h_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "0.2", "0.5", "cos(2*pi*x1) - 0.25", 64);
    let out = dir.path().join("out");
    let a = biharm(&cfg, &out, &["certify"]).code(2);
    let stderr: Value = serde_json::from_slice(&a.get_output().stderr).unwrap();
    assert_eq!(stderr["kind"], "ConfigError");
    assert_eq!(read_json(&out.join("error.json")), stderr);
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    Command::cargo_bin("biharm").unwrap().arg("frobnicate").assert().code(2);
    Command::cargo_bin("biharm").unwrap().arg("certify").assert().code(2);
    let cfg = write_config(dir.path(), "0.2", "-1", "cos(2*pi*x1", 64);
    let a = biharm(&cfg, &dir.path().join("out"), &["certify"]).code(2);
    let stderr: Value = serde_json::from_slice(&a.get_output().stderr).unwrap();
    assert_eq!(stderr["kind"], "ParseError");
    biharm(&example(), &dir.path().join("o2"), &["certify", "--q", "1.5"]).code(2);
    biharm(&example(), &dir.path().join("o3"), &["mu-curve", "--k-steps", "2"]).code(2);
}

#[test]
fn solve_commands_are_gated_by_the_certificate() {
    let out = TempDir::new().unwrap();
    biharm(&example(), out.path(), &["mu-curve"]).code(1);
    assert!(out.path().join("report.json").exists());
    assert!(!out.path().join("mu.csv").exists());
}

#[test]
fn missing_hump_exits_5() {
    // f > 0 everywhere: the curve never turns positive
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "0.2", "-1", "1 + 0.5*cos(2*pi*x1)", 32);
    let out = dir.path().join("out");
    biharm(&cfg, &out, &["mountain-pass", "--force", "--k-steps", "12"]).code(5);
    assert!(out.join("mu.csv").exists());
    assert_eq!(read_json(&out.join("error.json"))["kind"], "ShapeNotFound");
}

#[test]
fn solve_sub_orders_the_energies() {
    let out = TempDir::new().unwrap();
    biharm(&example(), out.path(), &["solve-sub", "--force"]).success();
    let s = read_json(&out.path().join("solutions.json"));
    assert!(s["first"]["energy"].as_f64().unwrap() < 0.0);
    assert!(s["second"]["nu"].as_f64().unwrap() > 0.0);
    assert_eq!(s["ordering_holds"], true);
    for f in ["first_u.csv", "first_u.spectral.json", "second_u.csv", "path_profile.csv", "mu.csv"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
}

#[test]
fn solve_critical_reports_the_sign_flag() {
    let out = TempDir::new().unwrap();
    biharm(&example(), out.path(), &["solve-critical", "--force"]).success();
    let t = read_json(&out.path().join("trace.json"));
    assert_eq!(t["final_int_f_negative"], true);
    assert_eq!(t["steps"].as_array().unwrap().len(), 9);
    assert!(out.path().join("v_q8.spectral.json").exists());
}

#[test]
fn gnuplot_script_is_optional() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    biharm(&example(), &a, &["mu-curve", "--force", "--k-steps", "8"]).success();
    biharm(&example(), &b, &["mu-curve", "--force", "--k-steps", "8", "--gnuplot"]).success();
    assert!(!a.join("mu.gp").exists());
    assert!(b.join("mu.gp").exists());
}
