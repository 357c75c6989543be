use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn subadd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subadd"))
        .args(args)
        .env_remove("SUBADD_ENUM_LIMIT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn bernoulli(dir: &Path, name: &str, p1: f64) -> String {
    let body = format!(
        r#"{{"type":"bayesnet","cardinalities":[2],"parents":[[]],"cpts":[[[{},{p1}]]]}}"#,
        1.0 - p1
    );
    write(dir, name, &body).display().to_string()
}

#[test]
fn divergence_values() {
    let dir = TempDir::new().unwrap();
    let a = bernoulli(dir.path(), "b03.json", 0.3);
    let b = bernoulli(dir.path(), "b07.json", 0.7);

    let o = subadd(&["divergence", "--kind", "tv", "--p", &a, "--q", &b]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&stdout(&o));
    assert!((v["value"].as_f64().unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(v["infinite"], false);

    let o = subadd(&["divergence", "--kind", "kl", "--p", &a, "--q", &a]);
    assert_eq!(json(&stdout(&o))["value"].as_f64(), Some(0.0));
}

#[test]
fn infinite_divergence_prints_null() {
    let dir = TempDir::new().unwrap();
    let a = bernoulli(dir.path(), "a.json", 0.5);
    let b = bernoulli(dir.path(), "b.json", 0.0);
    let o = subadd(&["divergence", "--kind", "kl", "--p", &a, "--q", &b]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&stdout(&o));
    assert!(v["value"].is_null());
    assert_eq!(v["infinite"], true);
}

#[test]
fn bad_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let a = bernoulli(dir.path(), "a.json", 0.3);

    let o = subadd(&["divergence", "--kind", "nope", "--p", &a, "--q", &a]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kl, rkl, skl"), "{}", stderr(&o));

    let broken = write(
        dir.path(),
        "broken.json",
        r#"{"type":"bayesnet","cardinalities":[2],"parents":[[]]}"#,
    );
    let o = subadd(&[
        "divergence",
        "--kind",
        "kl",
        "--p",
        broken.to_str().unwrap(),
        "--q",
        &a,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cpts"), "{}", stderr(&o));

    let o = subadd(&["verify", "--example", "h2", "--kind", "chi2", "--grid", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = subadd(&[
        "verify",
        "--example",
        "counter",
        "--kind",
        "kl",
        "--grid",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = subadd(&["local-approx", "--eps", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = subadd(&["local-approx", "--eps", "0.01", "--kind", "tv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = subadd(&["verify", "--example", "h9", "--kind", "kl", "--grid", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn enumeration_limit_from_environment() {
    let dir = TempDir::new().unwrap();
    let m = write(
        dir.path(),
        "m.json",
        r#"{"type":"table","cardinalities":[2,2],"probs":[0.25,0.25,0.25,0.25]}"#,
    );
    let m = m.to_str().unwrap();
    let run = |limit: &str| {
        Command::new(env!("CARGO_BIN_EXE_subadd"))
            .args(["divergence", "--kind", "kl", "--p", m, "--q", m])
            .env("SUBADD_ENUM_LIMIT", limit)
            .output()
            .unwrap()
    };
    assert_eq!(run("4").status.code(), Some(0));
    let o = run("3");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("enumeration limit"));
    assert_eq!(run("lots").status.code(), Some(2));
}

#[test]
fn small_grid_sweep() {
    let o = subadd(&["verify", "--example", "h2", "--grid", "3", "--kind", "tv"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,y,gap");
    assert_eq!(lines.len(), 10);
    for row in &lines[1..] {
        let f: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        if f[0] == f[1] {
            assert_eq!(f[2], 0.0);
        } else {
            assert!(f[2] > 0.0);
        }
    }
    let summary = json(&stderr(&o));
    assert_eq!(summary["violations"], 0);
    assert_eq!(summary["cells"], 9);
}

#[test]
fn skl_sweep_has_no_violations() {
    let o = subadd(&["verify", "--example", "h1", "--kind", "skl", "--grid", "21"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&stderr(&o))["violations"], 0);
}

#[test]
fn violations_exit_one() {
    // A negative tolerance turns the zero-gap diagonal into violations.
    let o = subadd(&[
        "verify",
        "--example",
        "h2",
        "--grid",
        "3",
        "--kind",
        "tv",
        "--tol",
        "-1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    // The Bayes-net sweeps are all satisfied, so exit 1 is reached through
    // the counter-example, whose pass state is universal violation.
    let o = subadd(&[
        "verify",
        "--example",
        "counter",
        "--grid",
        "5",
        "--tol",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let s = json(&stderr(&o));
    assert_eq!(s["violations"], 0);
    assert_eq!(s["pass"], false);
}

#[test]
fn counter_example_violates_everywhere() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("counter.csv");
    let o = subadd(&[
        "verify",
        "--example",
        "counter",
        "--grid",
        "41",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = json(&stdout(&o));
    assert_eq!(s["cells"], 1681);
    assert_eq!(s["violations"], 1681);
    assert!(s["max_gap"].as_f64().unwrap() < 0.0);
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1682);
}

#[test]
fn outputs_are_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let paths: Vec<PathBuf> = (0..2)
        .map(|i| dir.path().join(format!("run{i}.csv")))
        .collect();
    for (i, p) in paths.iter().enumerate() {
        let threads = if i == 0 { "1" } else { "4" };
        let o = subadd(&[
            "verify",
            "--example",
            "h1",
            "--kind",
            "w1",
            "--grid",
            "7",
            "--threads",
            threads,
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (a, b) = (fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
    assert_eq!(a, b);

    let manifest = json(&fs::read_to_string(dir.path().join("run0.csv.manifest.json")).unwrap());
    let digest = manifest["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    let other = json(&fs::read_to_string(dir.path().join("run1.csv.manifest.json")).unwrap());
    assert_eq!(other["outputs"][0]["sha256"].as_str(), Some(digest));
    assert_eq!(manifest["config"]["threads"], 1);
    assert!(manifest["command"]
        .as_array()
        .unwrap()
        .iter()
        .any(|a| a == "verify"));
}

#[test]
fn csv_uses_twelve_significant_digits() {
    let o = subadd(&["verify", "--example", "h1", "--kind", "kl", "--grid", "2"]);
    let csv = stdout(&o);
    let row = csv.lines().nth(2).unwrap();
    assert_eq!(row.split(',').next(), Some("-2.00000000000e0"));
    for field in row.split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.len(), 13, "{field}");
    }
}

#[test]
fn local_approx_rows() {
    let o = subadd(&["local-approx", "--eps", "0,0.01,0.005"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("eps,kind,d_f,approx,diff,diff_over_eps3")
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[1] != "tv"));
    let num = |r: &Vec<String>, c: usize| r[c].parse::<f64>().unwrap();
    for r in rows.iter().filter(|r| num(r, 0) == 0.0) {
        assert!((2..6).all(|c| num(r, c) == 0.0));
    }
    for r in rows.iter().filter(|r| r[1] == "chi2") {
        assert!(num(r, 4) <= 1e-12);
    }
    for kind in ["kl", "js", "h2"] {
        let diff = |eps: f64| {
            rows.iter()
                .find(|r| r[1] == kind && num(r, 0) == eps)
                .map(|r| num(r, 4))
                .unwrap()
        };
        assert!(diff(0.01) / diff(0.005) >= 7.0, "{kind}");
    }
}

#[test]
fn decompose_with_contraction() {
    let dir = TempDir::new().unwrap();
    let chain = write(
        dir.path(),
        "chain.json",
        r#"{"type":"bayesnet","cardinalities":[2,2,2],"parents":[[],[0],[1]],
            "cpts":[[[0.5,0.5]],[[0.9,0.1],[0.2,0.8]],[[0.7,0.3],[0.4,0.6]]]}"#,
    );
    let chain = chain.to_str().unwrap();
    let o = subadd(&["decompose", "--model", chain, "--mode", "parents"]);
    let v = json(&stdout(&o));
    assert_eq!(
        v["decomposition"]["neighborhoods"],
        serde_json::json!([[0], [0, 1], [1, 2]])
    );

    let o = subadd(&[
        "decompose",
        "--model",
        chain,
        "--mode",
        "parents",
        "--contract",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&stdout(&o));
    assert_eq!(
        v["decomposition"]["neighborhoods"]
            .as_array()
            .unwrap()
            .len(),
        2
    );

    let o = subadd(&[
        "decompose",
        "--model",
        chain,
        "--mode",
        "parents",
        "--contract",
        "1,1",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = subadd(&["decompose", "--model", chain, "--mode", "cliques"]);
    assert_eq!(
        json(&stdout(&o))["decomposition"]["neighborhoods"],
        serde_json::json!([[0, 1], [1, 2]])
    );

    let ring = write(
        dir.path(),
        "ring.json",
        r#"{"type":"mrf","cardinalities":[2,2,2,2],"cliques":[[0,1],[1,2],[2,3],[0,3]],
            "potentials":[[1,2,2,1],[1,2,2,1],[1,2,2,1],[1,2,2,1]]}"#,
    );
    let o = subadd(&[
        "decompose",
        "--model",
        ring.to_str().unwrap(),
        "--mode",
        "bfs",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = subadd(&[
        "decompose",
        "--model",
        ring.to_str().unwrap(),
        "--mode",
        "truncated",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn transport_commands() {
    let dir = TempDir::new().unwrap();
    let a = bernoulli(dir.path(), "a.json", 0.3);
    let b = bernoulli(dir.path(), "b.json", 0.7);
    let o = subadd(&["wasserstein", "--p", "1", "--pdist", &a, "--qdist", &b]);
    let v = json(&stdout(&o));
    assert!((v["value"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert!(v.get("plan").is_none());
    let o = subadd(&[
        "wasserstein",
        "--p",
        "2",
        "--pdist",
        &a,
        "--qdist",
        &b,
        "--plan",
    ]);
    let v = json(&stdout(&o));
    assert!((v["value"].as_f64().unwrap() - 0.4f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["plan"]["coupling"].as_array().unwrap().len(), 2);

    let g1 = write(
        dir.path(),
        "g1.json",
        r#"{"type":"gaussian","mean":[0],"cov":[[1]]}"#,
    );
    let g2 = write(
        dir.path(),
        "g2.json",
        r#"{"type":"gaussian","mean":[1],"cov":[[4]]}"#,
    );
    let o = subadd(&[
        "w2-gaussian",
        "--pdist",
        g1.to_str().unwrap(),
        "--qdist",
        g2.to_str().unwrap(),
    ]);
    let v = json(&stdout(&o));
    assert!((v["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    let o = subadd(&[
        "w2-gaussian",
        "--pdist",
        &a,
        "--qdist",
        g2.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn random_check_is_seeded() {
    let run = |seed: &str| stdout(&subadd(&["random-check", "--seed", seed, "--cases", "20"]));
    let first = run("5");
    assert_eq!(first, run("5"));
    assert_ne!(first, run("6"));
    let v = json(&first);
    assert_eq!(v["checks"], 20 * 14);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
}
