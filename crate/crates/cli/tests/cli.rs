use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn ciber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ciber"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn problem(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

/// Two features, label 1 when `a + b/2 > 0`, with a margin around the boundary.
fn separable_csv(dir: &TempDir) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut text = String::from("a,b,label\n");
    let mut rows = 0;
    while rows < 80 {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let s = a + 0.5 * b;
        if s.abs() < 0.15 {
            continue;
        }
        text.push_str(&format!("{a},{b},{}\n", u8::from(s > 0.0)));
        rows += 1;
    }
    let p = path(dir, "sep.csv");
    std::fs::write(&p, text).unwrap();
    p
}

fn linear_csv(dir: &TempDir, name: &str, seed: u64, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("x,y\n");
    for _ in 0..n {
        let x: f64 = rng.random_range(-1.0..1.0);
        let e: f64 = rng.random_range(-0.3..0.3);
        text.push_str(&format!("{x},{}\n", 2.0 * x - 0.5 + e));
    }
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn example_problem_is_three_quarters() {
    let o = ciber(&["wmi", "solve", &problem("example1.json")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("3/4 (0.750000000000000)"), "{}", stdout(&o));
}

#[test]
fn density_problem_matches_the_library() {
    let o = ciber(&["wmi", "solve", &problem("step4_density.json"), "--mc", "200000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lib = ciber::experiments::step4(&ciber::inference::InferenceOptions::default()).unwrap();
    let want = lib.density.exact().unwrap().to_string();
    assert!(stdout(&o).contains(&want), "{} vs {want}", stdout(&o));
}

#[test]
fn malformed_json_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "bad.json");
    std::fs::write(&p, "{\"variables\": [").unwrap();
    let o = ciber(&["wmi", "solve", &p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("syntax error"));
    assert_eq!(ciber(&["wmi", "solve", &path(&dir, "absent.json")]).status.code(), Some(2));
}

#[test]
fn spline_over_budget_exits_with_three() {
    // fifteen incommensurate widths and a cut through the middle of the sum
    let vars: Vec<String> = (0..15)
        .map(|i| format!(r#"{{"name": "x{i}", "lower": 0, "upper": "{}/{}"}}"#, 97 + i, 89 + 2 * i))
        .collect();
    let sum: Vec<String> = (0..15).map(|i| format!("x{i}")).collect();
    let text = format!(
        r#"{{"variables": [{}], "formula": "(<= (+ {}) 8)"}}"#,
        vars.join(", "),
        sum.join(" ")
    );
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "wide.json");
    std::fs::write(&p, text).unwrap();
    assert_eq!(ciber(&["wmi", "solve", &p, "--exact-only"]).status.code(), Some(3));
    let o = ciber(&["wmi", "solve", &p]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("floating-point lattice"));
}

#[test]
fn missing_target_column_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let data = linear_csv(&dir, "lin.csv", 1, 20);
    let o = ciber(&["train", &data, "--target", "price", "--out", &path(&dir, "s.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("price"));
}

#[test]
fn separable_toy_is_fit_exactly() {
    let dir = TempDir::new().unwrap();
    let data = separable_csv(&dir);
    let out = path(&dir, "s.json");
    let o = ciber(&[
        "--seed", "4", "train", &data, "--head", "classification", "--hidden", "8", "--epochs", "400",
        "--learning-rate", "0.2", "--patience", "400", "--collect-start", "399", "--samples", "3", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("train accuracy   100.00%"), "{}", stdout(&o));
}

fn train_linear(dir: &TempDir, seed: &str, out: &str) -> (Output, String) {
    let data = linear_csv(dir, "train.csv", 5, 120);
    let out = path(dir, out);
    let o = ciber(&[
        "--seed", seed, "train", &data, "--hidden", "4", "--epochs", "60", "--samples", "3", "--out", &out,
    ]);
    (o, out)
}

#[test]
fn training_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, pa) = train_linear(&dir, "9", "a.json");
    let (b, pb) = train_linear(&dir, "9", "b.json");
    assert!(a.status.success() && b.status.success());
    assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
    let (_, pc) = train_linear(&dir, "10", "c.json");
    assert_ne!(std::fs::read(&pc).unwrap(), std::fs::read(path(&dir, "a.json")).unwrap());
}

fn infer(dir: &TempDir, data: &str, samples: &str, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.path().join(out);
    let metrics = dir.path().join(format!("{}.csv", out.display()));
    let mut args = vec!["infer", data, samples, "--out", out.to_str().unwrap(), "--metrics", metrics.to_str().unwrap()];
    args.extend_from_slice(extra);
    (ciber(&args), out)
}

#[test]
fn inference_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (_, samples) = train_linear(&dir, "2", "s.json");
    let test = linear_csv(&dir, "test.csv", 6, 12);
    let (a, ra) = infer(&dir, &test, &samples, "a.json", &["--k", "2"]);
    let (b, rb) = infer(&dir, &test, &samples, "b.json", &["--k", "2", "--threads", "1"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    assert_eq!(std::fs::read(ra).unwrap(), std::fs::read(rb).unwrap());
}

#[test]
fn single_sample_bundle_matches_the_plug_in() {
    let dir = TempDir::new().unwrap();
    let (_, samples) = train_linear(&dir, "3", "s.json");
    let mut bundle: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&samples).unwrap()).unwrap();
    let best = bundle["best"].clone();
    bundle["samples"] = serde_json::json!([best]);
    let single = path(&dir, "single.json");
    std::fs::write(&single, bundle.to_string()).unwrap();
    let test = linear_csv(&dir, "test.csv", 7, 15);
    let (o, report) = infer(&dir, &test, &single, "r.json", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    let rmse = r["metrics"]["rmse"].as_f64().unwrap();
    let plug = r["baselines"]["plug_in"]["rmse"].as_f64().unwrap();
    assert!((rmse - plug).abs() < 1e-9, "{rmse} vs {plug}");
}

#[test]
fn task_must_match_the_head() {
    let dir = TempDir::new().unwrap();
    let (_, samples) = train_linear(&dir, "3", "s.json");
    let test = linear_csv(&dir, "test.csv", 7, 5);
    let (o, _) = infer(&dir, &test, &samples, "r.json", &["--task", "classification"]);
    assert_eq!(o.status.code(), Some(2));
}
