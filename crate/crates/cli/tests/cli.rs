use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn nccw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nccw")).args(args).output().expect("run nccw")
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = nccw(args);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_bundled_complexes() {
    for name in ["z23", "z25", "example", "circle", "example-target", "stage2-target"] {
        let (code, v) = run(&["validate", p(&data(&format!("complex-{name}.json")))]);
        assert_eq!(code, 0, "{name}");
        assert_eq!(v["pass"], true);
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["config"]["grid"], 240);
    }
}

#[test]
fn k1_of_z23_and_circle() {
    let (code, v) = run(&["k1", p(&data("complex-z23.json"))]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["k1_trivial"], true);
    let (_, v) = run(&["k1", p(&data("complex-circle.json"))]);
    assert_eq!(v["result"]["k1_trivial"], false);
}

#[test]
fn schema_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let neg = write(&dir, "neg.json", r#"{"e":[-1],"f":[1],"mult0":[[1]],"mult1":[[1]]}"#);
    let out = nccw(&["validate", p(&neg)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("neg.json") && msg.contains("e[0]"), "{msg}");

    let unknown = write(&dir, "unknown.json", r#"{"e":[1],"f":[1],"mult0":[[1]],"mult1":[[1]],"colour":2}"#);
    let out = nccw(&["validate", p(&unknown)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let nonunital = write(&dir, "nonunital.json", r#"{"e":[2,3],"f":[6],"mult0":[[2,0]],"mult1":[[0,2]]}"#);
    let out = nccw(&["validate", p(&nonunital)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("not unital") && msg.contains("F-block"), "{msg}");

    let out = nccw(&["validate", "/nonexistent/complex.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn grid_must_be_divisible_by_m() {
    let out = nccw(&["test-set", p(&data("complex-z23.json")), "--grid", "30", "--m", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nccw(&["validate", p(&data("complex-z23.json")), "--grid", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pair_with_mismatched_sizes_fails_and_names_component() {
    let dir = tempfile::tempdir().unwrap();
    let small = write(&dir, "small.json", r#"{"n":2,"s":[1,0,1],"points":[],"pad":0}"#);
    let (code, v) = run(&["pair", p(&data("complex-example.json")), p(&data("hom-example-phi0.json")), p(&small)]);
    assert_eq!(code, 1);
    assert_eq!(v["pass"], false);
    assert_eq!(v["result"]["failure"]["component"], "spectrum size");
}

#[test]
fn pair_of_close_homs_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(&dir, "a.json", r#"{"n":3,"s":[1,0,0],"points":[{"i":1,"t":0.5}],"pad":0}"#);
    let b = write(&dir, "b.json", r#"{"n":3,"s":[1,0,0],"points":[{"i":1,"t":0.52}],"pad":0}"#);
    let (code, v) = run(&["pair", p(&data("complex-example.json")), p(&a), p(&b)]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["verified"], true);
}

#[test]
fn test_set_emits_elements_for_cu_rank() {
    let dir = tempfile::tempdir().unwrap();
    let arr = dir.path().join("h.json");
    let (code, v) = run(&["test-set", p(&data("complex-z23.json")), "--grid", "24", "--emit", p(&arr)]);
    assert_eq!(code, 0);
    let els: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&arr).unwrap()).unwrap();
    assert_eq!(els.len() as u64, v["result"]["count"].as_u64().unwrap());
    let one = write(&dir, "one.json", &els.last().unwrap().to_string());
    let (code, v) = run(&["cu-rank", p(&data("complex-z23.json")), p(&one), "--eps", "0.5"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["eps"], 0.5);
    assert!(v["result"]["ranks"].is_array());
}

#[test]
fn approximate_records_connector_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let psi = dir.path().join("psi.json");
    let (code, v) = run(&["approximate", p(&data("family-example.json")), "--eps", "0.2", "--emit", p(&psi)]);
    assert_eq!(code, 0, "{v}");
    let params = &v["result"]["approximation"]["params"];
    for k in ["eta", "eta1", "delta"] {
        assert!(params[k].is_number(), "{k}");
    }
    assert_eq!(v["result"]["approximation"]["injective"], true);
    let (code, v) = run(&["dpair", p(&psi)]);
    assert_eq!(code, 0, "{v}");
}

#[test]
fn rebase_and_dpair_on_bundled_maps() {
    for name in ["example", "z23-z25", "z23-z25-loop"] {
        let map = data(&format!("map-{name}.json"));
        let (code, v) = run(&["dpair", p(&map), "--grid", "60"]);
        assert_eq!(code, 0, "{name}: {v}");
        let (code, v) = run(&["rebase", p(&map), "--grid", "60"]);
        assert_eq!(code, 0, "{name}: {v}");
        assert_eq!(v["result"]["pointwise_equiv"], true);
    }
}

#[test]
fn diagonal_check_lists_each_hypothesis() {
    let (code, v) = run(&["diagonal-check", p(&data("map-z23-z25-loop.json")), "--grid", "60"]);
    assert_eq!(code, 1);
    let hs = v["result"]["hypotheses"].as_array().unwrap();
    let names: Vec<&str> = hs.iter().map(|h| h["hypothesis"].as_str().unwrap()).collect();
    assert_eq!(names, ["diagonal", "normalizer", "expectation"]);
    assert!(hs[0]["witness"]["samples"].is_array());
}

#[test]
fn rebase_chain_passes_and_is_deterministic() {
    let (m1, m2) = (data("map-z23-z25-loop.json"), data("map-stage2.json"));
    let args = [
        "rebase-chain",
        p(&m1),
        p(&m2),
        "--grid",
        "60",
        "--seed",
        "9",
    ];
    let a = nccw(&args);
    let b = nccw(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["result"]["stages"].as_array().unwrap().len(), 2);
}

#[test]
fn chain_with_mismatched_stages_is_an_input_error() {
    let out = nccw(&["rebase-chain", p(&data("map-stage2.json")), p(&data("map-example.json")), "--grid", "60"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_writes_to_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = nccw(&["report", "--grid", "60", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["complexes"]["circle"]["k1_trivial"], false);
}
