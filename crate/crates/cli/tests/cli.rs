use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn daisy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_daisy")).args(args).output().expect("run daisy")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(o)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A certified family for N = 5, r = 4, k = 1.
fn made_phi(dir: &TempDir) -> std::path::PathBuf {
    let out = dir.path().join("phi.bin");
    let o = daisy(&["phi", "make", "--n", "5", "--r", "4", "--k", "1", "--m-target", "4", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn tree_delta_and_usage_errors() {
    let o = daisy(&["tree", "delta", "--n", "3", "--set", "1,2,3,8"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "3 2 1");
    assert_eq!(code(&daisy(&["tree", "delta", "--n", "3", "--set", ""])), 2);
    assert_eq!(code(&daisy(&["tree", "delta", "--n", "3", "--set", "9"])), 2);
    assert_eq!(code(&daisy(&["tree", "delta", "--n", "3", "--set", "2,2"])), 2);
    assert_eq!(code(&daisy(&["tree", "delta", "--n", "3", "--set", "1", "--frobnicate"])), 2);
}

#[test]
fn tree_dot_shape() {
    let o = daisy(&["tree", "dot", "--n", "3", "--set", "2,3,7"]);
    assert_eq!(code(&o), 0);
    let dot = stdout(&o);
    // root splits off 7; the level-2 ancestor holds 2 and 3
    assert!(dot.contains("n1_ -> n2_0;"));
    assert!(dot.contains("n1_ -> x7;"));
    assert!(dot.contains("n2_0 -> x2;"));
    assert!(dot.contains("n2_0 -> x3;"));
}

#[test]
fn tree_reads_set_file() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("set.txt");
    fs::write(&f, "1 2\n3 8\n").unwrap();
    let o = daisy(&["tree", "delta", "--n", "3", "--set-file", p(&f)]);
    assert_eq!(stdout(&o).trim(), "3 2 1");
}

#[test]
fn combs_analyze_lines() {
    let o = daisy(&["combs", "analyze", "--n", "5", "--set", "1,2,3,4,9,17"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("1..6 kind=Left l=4 handle=1..4 teeth=5..6 maximal=yes"), "{text}");
    assert!(text.contains("1..5 kind=Left l=4 handle=1..4 teeth=5..5 maximal=no"), "{text}");
    let o = daisy(&["combs", "analyze", "--n", "5", "--set", "1,2,3,4,9,17", "--dot"]);
    assert!(stdout(&o).contains("fillcolor"));
}

#[test]
fn phi_make_verify_show() {
    let dir = TempDir::new().unwrap();
    let phi = made_phi(&dir);
    let o = daisy(&["phi", "verify", "--file", p(&phi), "--m-target", "4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["result"]["passed"], Value::Bool(true));
    let o = daisy(&["phi", "show", "--file", p(&phi)]);
    let v = json(&o);
    assert_eq!(v["result"]["r"], 4);
    assert_eq!(v["result"]["tables"][0]["len"], 10);
}

#[test]
fn phi_gen_round_trip() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("g.bin");
    let gen = daisy(&["phi", "gen", "--n", "6", "--r", "4", "--k", "2", "--seed", "9", "--out", p(&out)]);
    assert_eq!(code(&gen), 0);
    assert_eq!(fs::read(&out).unwrap().len(), 8 + 3 + 2 + 1);
    let show = daisy(&["phi", "show", "--file", p(&out)]);
    assert_eq!(json(&gen)["result"], json(&show)["result"]["tables"]);
}

#[test]
fn phi_corrupt_magic_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let phi = made_phi(&dir);
    let mut bytes = fs::read(&phi).unwrap();
    bytes[0] = b'Q';
    fs::write(&phi, bytes).unwrap();
    let o = daisy(&["phi", "show", "--file", p(&phi)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));
}

#[test]
fn constant_family_fails_verification_with_witness() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("const.bin");
    // N=5, r=4, k=1: C(5,3) = 10 and C(5,4) = 5 bits, all ones
    fs::write(&f, [b'P', b'H', b'I', b'F', 1, 5, 4, 1, 0xFF, 0x03, 0x1F]).unwrap();
    let o = daisy(&["phi", "verify", "--file", p(&f), "--m-target", "4"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["result"]["passed"], Value::Bool(false));
    assert!(v["result"]["arities"][0]["witness"].is_object());
}

#[test]
fn chi_eval_and_refusals() {
    let dir = TempDir::new().unwrap();
    let phi = made_phi(&dir);
    let o = daisy(&["chi", "eval", "--phi", p(&phi), "--set", "1,2,3,4,9"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let color = v["result"]["color"].as_u64().unwrap();
    assert!(color <= 1);
    let combs = v["result"]["combs"].as_array().unwrap();
    assert!(!combs.is_empty());
    // the parity of the counted combs is the color
    let parity = combs
        .iter()
        .filter(|c| !matches!(c["comb_type"].as_u64(), Some(2 | 6)))
        .fold(0, |a, c| a ^ c["color"].as_u64().unwrap());
    assert_eq!(parity, color);
    assert_eq!(code(&daisy(&["chi", "eval", "--phi", p(&phi), "--set", "1,2,3"])), 2);

    let r3 = dir.path().join("r3.bin");
    fs::write(&r3, [b'P', b'H', b'I', b'F', 1, 5, 3, 1, 0, 0, 0, 0]).unwrap();
    let o = daisy(&["chi", "eval", "--phi", p(&r3), "--set", "1,2,3,4"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("direct search"));
}

#[test]
fn chi_export_matches_direct_evaluation() {
    let dir = TempDir::new().unwrap();
    let phi = dir.path().join("phi4.bin");
    assert_eq!(code(&daisy(&["phi", "gen", "--n", "4", "--r", "4", "--k", "1", "--out", p(&phi)])), 0);
    let table = dir.path().join("chi.bin");
    assert_eq!(code(&daisy(&["chi", "export", "--phi", p(&phi), "--out", p(&table)])), 0);
    assert_eq!(fs::read(&table).unwrap().len(), 8 + 4368usize.div_ceil(8));
    let chi_src = format!("chi:{}", p(&phi));
    let args = |c: &str| {
        vec!["daisy", "find", "--coloring", c, "--r", "4", "--m", "5", "--k", "1", "--simple"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let run = |c: &str| {
        let a = args(c);
        daisy(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let from_file = json(&run(p(&table)));
    let direct = json(&run(&chi_src));
    assert_eq!(from_file["result"]["status"], direct["result"]["status"]);
    assert_eq!(from_file["result"]["witness"], direct["result"]["witness"]);
}

#[test]
fn daisy_find_exit_codes() {
    let base = ["daisy", "find", "--coloring", "const0", "--n", "6", "--r", "2", "--m", "3", "--k", "1"];
    let o = daisy(&base);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["result"]["status"], "found");
    let mut strict = base.to_vec();
    strict.push("--expect-none");
    assert_eq!(code(&daisy(&strict)), 1);
    let o = daisy(&[
        "daisy",
        "find",
        "--coloring",
        "random:3",
        "--n",
        "12",
        "--r",
        "3",
        "--m",
        "8",
        "--k",
        "1",
        "--node-budget",
        "1",
    ]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["result"]["status"], "inconclusive");
    assert_eq!(
        code(&daisy(&["daisy", "find", "--coloring", "nonsense", "--n", "6", "--r", "2", "--m", "3", "--k", "0"])),
        2
    );
}

#[test]
fn pipeline_runs_on_a_found_witness() {
    let dir = TempDir::new().unwrap();
    let phi = made_phi(&dir);
    let chi_src = format!("chi:{}", p(&phi));
    let o = daisy(&["daisy", "find", "--coloring", &chi_src, "--r", "4", "--m", "6", "--k", "1", "--simple"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let witness = &v["result"]["witness"]["instance"];
    assert!(witness.is_object(), "no witness: {v}");
    let inst = dir.path().join("inst.json");
    fs::write(&inst, witness.to_string()).unwrap();
    for mode in ["theta", "floor-r"] {
        let o = daisy(&["pipeline", "run", "--instance", p(&inst), "--phi", p(&phi), "--mode", mode]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let rep = json(&o);
        assert_ne!(rep["result"]["sound"], Value::Bool(false));
        let report = &rep["result"]["report"];
        // a subdaisy without edges has no colors to report
        let expected = if report["degenerate"].is_null() { 1 } else { 0 };
        assert_eq!(report["chi_colors"].as_array().unwrap().len(), expected, "{report}");
    }
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"mode": "sideways"}"#).unwrap();
    let o = daisy(&["pipeline", "run", "--instance", p(&inst), "--phi", p(&phi), "--cfg", p(&cfg)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bounds_eval_outputs() {
    let o = daisy(&["bounds", "eval", "--r", "3", "--m", "10", "--k", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["result"]["inner_value"], "100");
    assert_eq!(v["result"]["value"]["value"], "1267650600228229401496703205376");
    assert_eq!(v["config"]["constants"]["c"], "1");
    let o =
        daisy(&["bounds", "eval", "--r", "5", "--m", "11", "--k", "1", "--formula", "sandwich", "--const", "c1=1/2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["config"]["constants"]["c1"], "1/2");
    assert_eq!(code(&daisy(&["bounds", "eval", "--r", "3", "--m", "10", "--k", "1", "--const", "zz=2"])), 2);
    assert_eq!(code(&daisy(&["bounds", "eval", "--r", "2", "--m", "10", "--k", "1"])), 2);
}

#[test]
fn reports_reproduce_across_thread_counts() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("elapsed_ms");
        v["result"].as_object_mut().map(|r| r.remove("elapsed_ms"));
        v
    };
    let args = ["daisy", "find", "--coloring", "random:5", "--n", "10", "--r", "3", "--m", "5", "--k", "1"];
    let one = strip(json(&daisy(&[&["--threads", "1"], &args[..]].concat())));
    let three = strip(json(&daisy(&[&["--threads", "3"], &args[..]].concat())));
    assert_eq!(one, three);
}
