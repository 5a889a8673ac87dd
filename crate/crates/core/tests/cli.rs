use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use agog_core::trace::read_csv;

fn agog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agog")).args(args).output().unwrap()
}

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn small_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

const SMALL: &str = r#"{
    "problem": {"kind": "quadratic", "n": 4, "m": 3, "a1_eigs": [0.5, 4],
                "a3_eigs": [0.5, 2], "a2_singular_values": [0.5, 1], "seed": 2},
    "algorithm": [{"name": "agog"}, {"name": "ogda"}],
    "run": {"iterations": 50, "seeds": [0, 1]}
}"#;

#[test]
fn solve_writes_traces_aggregate_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = small_config(dir.path(), SMALL);
    let o = agog(&["solve", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["aggregate.csv", "agog_seed0.csv", "agog_seed1.csv", "manifest.json", "ogda_seed0.csv", "ogda_seed1.csv"]
    );
    let traces = read_csv(fs::File::open(out.join("agog_seed1.csv")).unwrap()).unwrap();
    assert_eq!(traces.len(), 1);
    assert_eq!(traces[0].rows.len(), 50);
    assert_eq!(traces[0].metadata.seed, 1);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["files"].as_array().unwrap().len(), 5);
}

#[test]
fn overrides_reach_trace_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = agog(&["solve", "--config", &example("fig1a"), "--seed", "7", "--K", "100", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for alg in ["agog", "agog_restart", "ogda"] {
        let t = read_csv(fs::File::open(out.join(format!("{alg}_seed7.csv"))).unwrap()).unwrap();
        assert_eq!(t[0].metadata.seed, 7);
        assert_eq!(t[0].rows.last().unwrap().iter, 100);
        assert_eq!(t[0].metadata.problem, "fig1a");
    }
}

#[test]
fn malformed_config_exits_three_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let cfg = small_config(dir.path(), "{\"problem\": ");
    let o = agog(&["solve", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());

    let cfg = small_config(dir.path(), &SMALL.replace("\"seeds\"", "\"sedes\""));
    let o = agog(&["solve", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run"));
    assert!(!out.exists());
}

#[test]
fn divergence_exits_two_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // coupling noise far above the curvature makes SEG's random steps blow up
    let body = r#"{
        "problem": {"kind": "quadratic", "n": 4, "m": 4, "a1_eigs": [0.5, 1],
                    "a3_eigs": [0.5, 1], "a2_singular_values": [0.5, 1], "seed": 1},
        "algorithm": [{"name": "seg"}],
        "run": {"iterations": 2000},
        "noise": {"kind": "matrix_perturbation", "sigma_h": 50, "sigma_f": 50}
    }"#;
    let cfg = small_config(dir.path(), body);
    let o = agog(&["solve", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let partial = read_csv(fs::File::open(out.join("seg_seed0.csv")).unwrap()).unwrap();
    assert!(!partial[0].rows.is_empty());
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn help_lists_every_config_key() {
    let o = agog(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for (k, _) in agog_core::config::CONFIG_KEYS {
        assert!(text.contains(k), "--help misses {k}");
    }
}

#[test]
fn verify_accounting_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = agog(&["verify", "accounting", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["passed"], true);
    let seg = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "seg_w_calls").unwrap();
    assert_eq!(seg["measured"], 200.0);
    assert!(dir.path().join("verify_accounting.json").exists());
}

#[test]
fn compare_unions_seeds_and_rejects_other_problems() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    fs::write(&a, SMALL).unwrap();
    fs::write(&b, SMALL.replace("[0, 1]", "[5]").replace("{\"name\": \"ogda\"}", "{\"name\": \"nesterov\"}")).unwrap();
    let out = dir.path().join("cmp");
    let o = agog(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("compare.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.contains("agog_mean") && header.contains("ogda_mean") && header.contains("nesterov_mean"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let seeds_col = rdr.headers().unwrap().iter().position(|h| h == "agog_seeds").unwrap();
    let last = rdr.records().last().unwrap().unwrap();
    assert_eq!(&last[seeds_col], "3");

    let c = dir.path().join("c.json");
    fs::write(&c, SMALL.replace("\"seed\": 2", "\"seed\": 3")).unwrap();
    let o = agog(&["compare", a.to_str().unwrap(), c.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn single_config_compare_is_one_method_per_column_group() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let o = agog(&["compare", "--config", &example("fig1a"), "--K", "20", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert!(text.lines().next().unwrap().starts_with("queries,agog_mean"));
}
