use std::path::PathBuf;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn szk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_szk"))
        .args(args)
        .output()
        .expect("run szk")
}

fn stdout(args: &[&str]) -> String {
    let out = szk(args);
    assert!(
        out.status.success(),
        "szk {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    serde_json::from_str(&stdout(&full)).unwrap()
}

fn schema(name: &str) -> JSONSchema {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "schemas", &format!("{name}.schema.json")]
        .iter()
        .collect();
    let text = std::fs::read_to_string(&path).unwrap();
    JSONSchema::compile(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let s = schema(name);
    if let Err(errors) = s.validate(v) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{name} output fails its schema: {msgs:?}\n{v:#}");
    };
}

#[test]
fn rank_output_matches_schema() {
    for g in [
        "Z_(2)^w + Z_(3)^w",
        "tail(2) + Z(3^inf)^w",
        "tail(2, mult=w)",
        "Z(2)^3",
        "forall_p{Z(P^inf)^w}",
        "Q + Z(2)^w + Z(8)^w",
    ] {
        assert_valid("rank", &json(&["rank", g]));
    }
}

#[test]
fn other_outputs_match_schemas() {
    assert_valid("classify", &json(&["classify", "tail(2)"]));
    assert_valid("vc", &json(&["vc", "Z(2)^w + Z(8)^w", "--m", "3"]));
    assert_valid("eval", &json(&["eval", "tail(2) + Q", "div(2,1,0)"]));
    assert_valid("eval", &json(&["eval", "Z(4)^w + Z_(3)", "tor(2)"]));
    assert_valid("invariants", &json(&["invariants", "tail(2) + Z_(3) + forall_p{Z(P^1)}"]));
    assert_valid("witness", &json(&["witness", "Z(2^inf)^w + Z(3^inf)^w"]));
    assert_valid("fuzz", &json(&["fuzz", "--count", "5", "--seed", "4"]));
    assert_valid("breadth", &json(&["breadth", "Z(2)^w + Z(8)^w", "--pool-bound", "4", "--max-depth", "4"]));
    assert_valid("breadth", &json(&["breadth", "Z(2)^3"]));
}

#[test]
fn rank_values_on_the_command_line() {
    assert_eq!(json(&["rank", "Z(2)^w + Z(8)^w"])["dp"], 2);
    assert_eq!(json(&["rank", "tail(2, mult=w)"])["dp"], "inf");
    assert_eq!(json(&["rank", "Z(2)^3"])["case"], "finite-group");
    let table = stdout(&["rank", "Z_(2)^w + Z_(3)^w"]);
    assert!(table.starts_with("dp "), "{table}");
    assert!(table.contains("{div(2,1,0), div(3,1,0)}"), "{table}");
}

#[test]
fn breadth_reports_the_expected_witness() {
    let v = json(&["breadth", "Z(2)^w + Z(8)^w", "--pool-bound", "4", "--max-depth", "4"]);
    assert_eq!(v["result"]["depth"], 2);
    let mut w: Vec<String> = serde_json::from_value(v["result"]["witness"].clone()).unwrap();
    w.sort();
    assert_eq!(w, ["div(2,1,0)", "tor(2)"]);
    assert_eq!(v["transcript"]["valid"], true);
}

#[test]
fn normalize_and_equiv() {
    assert_eq!(stdout(&["normalize", "tail(2) + Z(2^inf)^w"]), "tail(2)\n");
    assert_eq!(stdout(&["equiv", "tail(2) + Z(2^inf)^w", "tail(2)"]), "equivalent\n");
    assert_eq!(stdout(&["equiv", "Z(2)", "Z(4)"]), "not equivalent\n");
}

#[test]
fn index_and_eval() {
    assert_eq!(stdout(&["index", "Z_(2)^3", "top", "div(2,1,0)"]), "8\n");
    assert_eq!(stdout(&["index", "Z_(2)^w", "top", "div(2,1,0)"]), "inf\n");
    let v = json(&["eval", "Z(2^inf)", "tor(4)"]);
    assert_eq!((v["order"].clone(), v["exponent"].clone()), (4.into(), 4.into()));
}

#[test]
fn shatter_prints_csv() {
    let csv = stdout(&["shatter", "--orders", "4,4", "--formulas", "tor(2)", "--n", "3"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,pi,two_pow_n");
    assert_eq!(lines[1..], ["0,1,1", "1,2,2", "2,3,4", "3,4,8"]);
}

#[test]
fn input_errors_exit_with_one() {
    for args in [
        vec!["rank", "Z(6)"],
        vec!["rank", "Z(2^"],
        vec!["rank", "tail(2, 2) + Z(2^3)"],
        vec!["eval", "Z(2)", "div(2,1,1)"],
        vec!["breadth", "Z(2)^w", "--pool-bound", "0"],
        vec!["shatter", "--orders", "1000,1000,1000", "--formulas", "tor(2)"],
    ] {
        let out = szk(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "), "{args:?}");
    }
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["--json", "fuzz", "--count", "20", "--seed", "11"],
        vec!["--json", "rank", "tail(2) + Z(3^inf)^w + Z_(5)"],
        vec!["breadth", "Z(2)^w + Z(8)^w + Z_(3)^w"],
    ] {
        assert_eq!(szk(&args).stdout, szk(&args).stdout, "{args:?}");
    }
    let serial = json(&["fuzz", "--count", "30", "--seed", "5", "--jobs", "1"]);
    let parallel = json(&["fuzz", "--count", "30", "--seed", "5", "--jobs", "3"]);
    assert_eq!(serial, parallel);
}

#[test]
fn schemas_reject_malformed_reports() {
    let mut v = json(&["rank", "Z(2)^w + Z(8)^w"]);
    assert!(schema("rank").is_valid(&v));
    v["dp"] = Value::from(-1);
    assert!(!schema("rank").is_valid(&v));
    let mut v = json(&["rank", "Z(2)^w + Z(8)^w"]);
    v.as_object_mut().unwrap().remove("partition");
    assert!(!schema("rank").is_valid(&v));
    let mut v = json(&["breadth", "Z_(2)^w"]);
    v["result"]["witness"] = Value::from(vec!["div(2,x,0)"]);
    assert!(!schema("breadth").is_valid(&v));
}
