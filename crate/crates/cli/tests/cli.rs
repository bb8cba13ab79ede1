use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

use qsot_core::random::{random_unital_channel, rng};
use qsot_core::wire::{to_json, Document, Payload};
use qsot_core::{AlgebraShape, DensityMatrix, SotFamily};

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> String {
    crate_dir().join("fixtures").join(name).to_string_lossy().into_owned()
}

fn qsot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsot"))
        .args(args)
        .env_remove("QSOT_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn assert_schema(schema: &str, value: &Value) {
    let path = crate_dir().join("schemas").join(format!("{schema}.schema.json"));
    let s: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let compiled = JSONSchema::compile(&s).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(value) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{schema} validation failed: {msgs:?}");
}

fn write_doc(dir: &Path, name: &str, payload: Payload) -> String {
    let path = dir.join(name);
    fs::write(&path, to_json(&Document::new(payload))).unwrap();
    path.to_string_lossy().into_owned()
}

fn re(v: &Value) -> f64 {
    v[0].as_f64().unwrap()
}

#[test]
fn fixtures_match_the_document_schema() {
    for entry in fs::read_dir(crate_dir().join("fixtures")).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap() == "malformed.json" {
            continue;
        }
        let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_schema("document", &v);
    }
}

#[test]
fn symmetric_bloom_of_identity_is_half_swap() {
    let o = qsot(&[
        "sot",
        "--family",
        "symmetric",
        "--channel",
        &fixture("identity_qubit.json"),
        "--state",
        &fixture("mixed_qubit.json"),
    ]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_schema("sot_result", &v);
    let block = &v["value"]["blocks"]["(0,0)"];
    for i in 0..4 {
        for j in 0..4 {
            // SWAP on C^2 ⊗ C^2 with kron index 2a + b
            let swap = if i % 2 == j / 2 && i / 2 == j % 2 { 0.5 } else { 0.0 };
            assert!((re(&block[i][j]) - swap).abs() < 1e-15, "({i},{j})");
        }
    }
}

#[test]
fn classical_right_bloom_is_the_joint_distribution() {
    let o = qsot(&[
        "sot",
        "--family",
        "right",
        "--channel",
        &fixture("classical_channel.json"),
        "--state",
        &fixture("classical_prior.json"),
    ]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let b = &v["value"]["blocks"];
    for (label, expect) in [("(0,0)", 0.225), ("(0,1)", 0.025), ("(1,0)", 0.15), ("(1,1)", 0.6)] {
        assert!((re(&b[label][0][0]) - expect).abs() < 1e-15, "{label}");
    }
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = qsot(&[
        "sot",
        "--family",
        "ls",
        "--channel",
        &fixture("identity_qubit.json"),
        "--state",
        &fixture("mixed_qubit.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_schema("sot_result", &v);
}

#[test]
fn malformed_input_exits_3_with_position() {
    let o = qsot(&[
        "sot",
        "--family",
        "ls",
        "--channel",
        &fixture("identity_qubit.json"),
        "--state",
        &fixture("malformed.json"),
    ]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn shape_mismatch_exits_2() {
    let o = qsot(&[
        "sot",
        "--family",
        "ls",
        "--channel",
        &fixture("classical_channel.json"),
        "--state",
        &fixture("mixed_qubit.json"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn wrong_document_kind_exits_2() {
    let o = qsot(&[
        "sot",
        "--family",
        "ls",
        "--channel",
        &fixture("mixed_qubit.json"),
        "--state",
        &fixture("mixed_qubit.json"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unital_channel_with_uniform_prior_inverts_to_adjoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(2718);
    let shape = AlgebraShape::matrix(2);
    let e = random_unital_channel(&mut r, &shape, 3);
    let channel = write_doc(dir.path(), "e.json", Payload::Channel { channel: e.clone() });
    let state = write_doc(
        dir.path(),
        "rho.json",
        Payload::State {
            state: DensityMatrix::maximally_mixed(&shape),
        },
    );
    let adjoint = serde_json::to_value(e.adjoint()).unwrap();
    for fam in SotFamily::classical_limit_families() {
        let name = fam.to_string();
        let o = qsot(&["bayes", "--family", &name, "--channel", &channel, "--state", &state, "--verify"]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert_schema("bayes_result", &v);
        assert!(v["residual"].as_f64().unwrap() < 1e-10);
        let got = v["map"]["matrix"].as_array().unwrap();
        let want = adjoint["matrix"].as_array().unwrap();
        for (gr, wr) in got.iter().zip(want) {
            for (g, w) in gr.as_array().unwrap().iter().zip(wr.as_array().unwrap()) {
                let d = (re(g) - re(w)).hypot(g[1].as_f64().unwrap() - w[1].as_f64().unwrap());
                assert!(d < 1e-10, "{name}: {d}");
            }
        }
    }
}

#[test]
fn singular_image_exits_4_unless_lenient() {
    let args = [
        "bayes",
        "--family",
        "ls",
        "--channel",
        &fixture("collapse_channel.json"),
        "--state",
        &fixture("classical_prior.json"),
    ];
    let o = qsot(&args);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not faithful"));
    let mut lenient = args.to_vec();
    lenient.push("--lenient");
    let o = qsot(&lenient);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_schema("bayes_result", &v);
    assert!(v.get("support").is_some());
}

#[test]
fn uncorrelated_fails_the_classical_limit_with_witness() {
    let o = qsot(&[
        "certify",
        "--families",
        "uncorrelated",
        "--properties",
        "P7",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_schema("certify_report", &v);
    let cell = &v["rows"][0]["cells"][0];
    assert_eq!(cell["outcome"]["verdict"], "fails");
    assert!(cell["outcome"]["violation"].as_f64().unwrap() > 1e-6);
    assert!(cell["outcome"]["witness"]["channels"].as_array().is_some_and(|c| !c.is_empty()));
}

#[test]
fn certification_is_deterministic_and_seeded() {
    let args = ["certify", "--families", "ls,right", "--properties", "P1,P3", "--trials", "30", "--format", "json"];
    let a = qsot(&args);
    let b = qsot(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_qsot"))
        .args(args)
        .env("QSOT_SEED", "0x1234")
        .output()
        .unwrap();
    assert_ne!(env.stdout, a.stdout);
    let flag = qsot(&[&args[..], &["--seed", "4660"]].concat());
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn default_certification_matches_the_known_table() {
    let o = qsot(&["certify", "--expect-paper"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{text}");
    assert!(!text.lines().take(9).any(|l| l.contains('!')));
}

#[test]
fn unknown_names_exit_2() {
    assert_eq!(code(&qsot(&["certify", "--families", "bogus"])), 2);
    assert_eq!(code(&qsot(&["certify", "--properties", "P9"])), 2);
    assert_eq!(code(&qsot(&["scenario", "teleport", &fixture("pem_random.json")])), 2);
    // document and requested scenario disagree
    assert_eq!(code(&qsot(&["scenario", "jeffrey", &fixture("pem_random.json")])), 2);
}

#[test]
fn bundled_scenarios_pass() {
    for (name, file) in [
        ("pem", "pem_random.json"),
        ("state-update", "state_update_luders.json"),
        ("jeffrey", "jeffrey_uniform.json"),
        ("two-state", "two_state_plus.json"),
        ("correlator", "correlator_t0.json"),
        ("ls-linearization", "ls_linearization_identity.json"),
    ] {
        let o = qsot(&["scenario", name, &fixture(file), "--format", "json"]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert_schema("scenario_result", &v);
        assert_eq!(v["passed"], true);
        let text = qsot(&["scenario", name, &fixture(file)]);
        assert_eq!(code(&text), 0);
        assert!(String::from_utf8_lossy(&text.stdout).starts_with(&format!("scenario {name}")));
    }
}

#[test]
fn pem_fixture_residuals_are_small() {
    let v = stdout_json(&qsot(&["scenario", "pem", &fixture("pem_random.json"), "--format", "json"]));
    for c in v["checks"].as_array().unwrap() {
        assert!(c["value"].as_f64().unwrap() < 1e-9);
    }
}

#[test]
fn two_state_fixture_weak_value_is_one() {
    let v = stdout_json(&qsot(&["scenario", "two-state", &fixture("two_state_plus.json"), "--format", "json"]));
    let wv = &v["values"]["entries"][0]["weak_value"];
    assert!((re(wv) - 1.0).abs() < 1e-12);
    assert!(wv[1].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn correlator_fixture_prints_equal_time_value() {
    let o = qsot(&["scenario", "correlator", &fixture("correlator_t0.json")]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("direct = [0.999999999999999"), "{text}");
}
