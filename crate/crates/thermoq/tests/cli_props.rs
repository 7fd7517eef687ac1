use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thermoq::cli::*;
use thermoq::generators::*;
use thermoq::opalg::*;
use thermoq::processes::*;
use thermoq::scaling::Config;

fn t() -> Tolerances {
    Tolerances::default()
}

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(x: &T, def: Option<&str>) {
    let text = serde_json::to_string(x).unwrap();
    let back: T = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, x);
    if let Some(def) = def {
        let checked: T = parse_checked(&text, def).unwrap();
        assert_eq!(&checked, x);
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn thermoq(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_thermoq")).args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v, String::from_utf8(out.stderr).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn domain_types_round_trip(seed in any::<u64>(), d in 1usize..4, n in 1usize..4) {
        let mut g = rng(seed);
        round_trip(&random_channel(&mut g, d, n), Some("cpmap"));
        round_trip(&State::new(random_state(&mut g, d), &t()).unwrap(), None);
        round_trip(&HermitianOp::new(random_hermitian(&mut g, d), &t()).unwrap(), None);
        round_trip(&support_of(&random_rank_state(&mut g, d, 1), &t()).unwrap(), None);
        let obs = random_indefinite_observable(&mut g, d, n + 1);
        round_trip(&obs.effects[0], None);
        round_trip(&obs, Some("observable"));
        let inst = random_instrument(&mut g, d, n + 1, 1);
        round_trip(&inst, Some("instrument"));
        let p = dilate_weak_third(&inst, &t()).unwrap();
        round_trip(&p, Some("process"));
        let xi = State::new(random_state(&mut g, d) * c(0.5, 0.0) + eye(d) * c(0.5 / d as f64, 0.0), &t()).unwrap();
        round_trip(&swap_process(&obs.effects[0], &xi, &t()).unwrap(), Some("process"));
    }
}

#[test]
fn reports_are_deterministic() {
    let mut g = rng(9);
    let cfg = Config::default();
    for _ in 0..5 {
        let ch = random_channel(&mut g, 3, 2);
        let a = serde_json::to_string(&classify_map_job(&ch, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&classify_map_job(&ch, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let inst = random_instrument(&mut g, 2, 2, 1);
        let a = serde_json::to_string(&audit_job(&inst, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&audit_job(&inst, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn classify_bundled_channel() {
    let input = data("depolarize_to_pure.json");
    let (code, v, _) = thermoq(&["classify-map", "--input", input.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["tiers"], serde_json::json!(["InClass", "InClass", "NotInClass"]));
    assert_eq!(v["command"], "classify-map");
    assert!(v["tolerances"]["psd_tol"].is_number());
}

#[test]
fn audit_bundled_instrument() {
    let input = data("qutrit_instrument.json");
    let (code, v, _) = thermoq(&["audit", "--input", input.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert_eq!(r["conflicts"], serde_json::json!([]));
    assert_eq!(r["first_kind"], true);
    assert_eq!(r["ideal"], true);
}

#[test]
fn demo_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("q{k}.json"));
        let (code, _, _) = thermoq(&["demo", "qutrit_remark_instrument", "--output", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        outs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], std::fs::read(data("qutrit_instrument.json")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v, _) = thermoq(&["classify-map", "--input", "/nonexistent/map.json"]);
    assert_eq!((code, v["error"]["kind"].as_str()), (2, Some("IoError")));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim_in\": 2,\n \"dim_out\": \"two\"}").unwrap();
    let (code, v, _) = thermoq(&["classify-map", "--input", bad.to_str().unwrap()]);
    assert_eq!((code, v["error"]["kind"].as_str()), (2, Some("SchemaError")));

    let big = dir.path().join("big.json");
    std::fs::write(&big, r#"{"dim_in":1,"dim_out":1,"kraus":[[[[2,0]]]]}"#).unwrap();
    let (code, v, _) = thermoq(&["classify-map", "--input", big.to_str().unwrap()]);
    assert_eq!((code, v["error"]["kind"].as_str()), (1, Some("NotSubunital")));

    let (code, _, _) = thermoq(&["demo", "no_such_generator"]);
    assert_eq!(code, 1);
    let (code, _, _) = thermoq(&["audit"]);
    assert_eq!(code, 2);
}

#[test]
fn batch_inputs_run_in_parallel() {
    let a = data("depolarize_to_pure.json");
    let (code, v, _) = thermoq(&[
        "classify-map",
        "--parallel",
        "2",
        "--input",
        a.to_str().unwrap(),
        "--input",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    assert_eq!(arr[0], arr[1]);
}

#[test]
fn tolerance_flags_are_embedded() {
    let a = data("depolarize_to_pure.json");
    let (code, v, _) = thermoq(&["classify-map", "--tol-psd=1e-7", "--ds-eps", "1e-5", "--input", a.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["tolerances"]["psd_tol"], 1e-7);
    assert_eq!(v["tolerances"]["ds_eps"], 1e-5);
    let (code, _, _) = thermoq(&["classify-map", "--tol-psd=-1", "--input", a.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn demo_reads_builder_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("params.json");
    std::fs::write(&p, r#"{"matrix": [[[1,0],[0,0]],[[0,0],[0.25,0]]]}"#).unwrap();
    let (code, v, _) = thermoq(&["demo", "luders", "--params", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["kraus"], serde_json::json!([[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]]));
    std::fs::write(&p, r#"{"state": "pure"}"#).unwrap();
    let (code, v, _) = thermoq(&["demo", "prepare", "--params", p.to_str().unwrap()]);
    assert_eq!((code, v["error"]["path"].as_str()), (2, Some("/state")));
}
