use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value as Json;
use tempfile::TempDir;

const LAB1: &str = "0x1111111111111111111111111111111111111111";
const LAB2: &str = "0x2222222222222222222222222222222222222222";
const LAB3: &str = "0x3333333333333333333333333333333333333333";
const INSPECTOR: &str = "0x4444444444444444444444444444444444444444";

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Out {
    fn json(&self) -> Json {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn run(args: &[&str]) -> Out {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let mut full = vec!["ubaas"];
    full.extend_from_slice(args);
    let code = ubaas_cli::run(full, &mut stdout, &mut stderr);
    Out {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn fixture(name: &str) -> String {
    scenarios().join(name).display().to_string()
}

struct Env {
    dir: TempDir,
}

impl Env {
    fn new() -> Env {
        Env {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }

    fn write(&self, name: &str, content: &str) -> String {
        let p = self.path(name);
        fs::write(&p, content).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Out {
        let store = self.path("store");
        let mut full = vec!["--store", store.as_str()];
        full.extend_from_slice(args);
        run(&full)
    }

    fn ok(&self, args: &[&str]) -> Out {
        let out = self.run(args);
        assert_eq!(out.code, 0, "{args:?}\nstdout: {}\nstderr: {}", out.stdout, out.stderr);
        out
    }

    fn chain(&self, id: u64, nodes: usize) {
        let genesis = self.write(
            "genesis.json",
            &format!(r#"{{"chain_type": "ethereum-like", "difficulty": "0x4000", "chain_id": {id}}}"#),
        );
        let list: Vec<String> = (1..=nodes)
            .map(|i| format!(r#"{{"id": "n{i}", "endpoint": "10.1.0.{i}:30303"}}"#))
            .collect();
        let inventory = self.write("inventory.json", &format!(r#"{{"nodes": [{}]}}"#, list.join(",")));
        self.ok(&["deploy", "chain", "--genesis", &genesis, "--inventory", &inventory]);
    }
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = run(&[]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("Usage"), "{}", out.stderr);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.code, 1);
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run(&["--version"]).code, 0);
}

#[test]
fn binary_reports_usage_without_arguments() {
    let out = Command::new(env!("CARGO_BIN_EXE_ubaas")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn store_is_required_for_stateful_commands() {
    let out = run(&["keys", "list"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.starts_with("error: "));
}

#[test]
fn weave_embedded_permission_matches_golden() {
    let env = Env::new();
    let woven = env.path("woven.sol");
    let out = run(&[
        "weave",
        "--pattern",
        "embedded-permission",
        "--contract",
        "FreightYardPic",
        "--function",
        "setFreightYardPic",
        "--authority",
        INSPECTOR,
        "--out",
        &woven,
        "--expect",
        &fixture("freight_yard_pic.woven.sol"),
        &fixture("freight_yard_pic.sol"),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let golden =
        ubaas_core::contract::parse(&fs::read_to_string(fixture("freight_yard_pic.woven.sol")).unwrap()).unwrap();
    let produced = ubaas_core::contract::parse(&fs::read_to_string(&woven).unwrap()).unwrap();
    assert!(ubaas_core::contract::ast_equal(&golden, &produced));
}

#[test]
fn weave_multiple_authorities_and_mismatch() {
    let args = |expect: &str| {
        run(&[
            "weave",
            "--pattern",
            "multiple-authorities",
            "--contract",
            "SampleTesting",
            "--function",
            "pass",
            "--authority",
            LAB1,
            "--authority",
            LAB2,
            "--authority",
            LAB3,
            "--threshold",
            "2",
            "--expect",
            &fixture(expect),
            &fixture("sample_testing.sol"),
        ])
    };
    let out = args("sample_testing.woven.sol");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("contract SampleTesting is MultipleAuthorities"));
    let out = args("freight_yard_pic.woven.sol");
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("not structurally equal"));
}

#[test]
fn weave_errors_exit_2() {
    let out = run(&[
        "weave",
        "--pattern",
        "multiple-authorities",
        "--contract",
        "SampleTesting",
        "--function",
        "missing",
        "--authority",
        LAB1,
        "--threshold",
        "1",
        &fixture("sample_testing.sol"),
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.starts_with("error: "));
}

#[test]
fn shipped_scenario_passes() {
    let out = run(&["scenario", "run", &fixture("quality_tracing.json")]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.ends_with("scenario quality-tracing: passed\n"));
    assert!(!out.stdout.contains("[FAIL]"));
}

#[test]
fn empty_scenario_passes() {
    let out = run(&["scenario", "run", &fixture("empty.json")]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "scenario empty: passed\n");
}

fn approval_script(env: &Env, approvers: &[&str], expect: &str) -> String {
    let mut actions = vec![
        r#"{"action": "deploy-chain", "name": "c", "chain_id": 7, "nodes": 1, "expect": "ok"}"#.to_string(),
        format!(
            r#"{{"action": "weave", "name": "src", "source": "@{}", "request": {{"pattern": "multiple-authorities", "contract": "SampleTesting", "function": "pass", "authorities": ["{LAB1}", "{LAB2}"], "threshold": 2}}, "expect": "ok"}}"#,
            fixture("sample_testing.sol").replace('\\', "\\\\")
        ),
        r#"{"action": "deploy-contract", "name": "st", "chain": "$c", "source": "$src", "contract": "SampleTesting", "from": "supplier", "expect": "ok"}"#.to_string(),
        r#"{"action": "call", "contract": "$st", "function": "requestAgreement", "from": "supplier", "expect": "applied"}"#.to_string(),
    ];
    for a in approvers {
        actions.push(format!(
            r#"{{"action": "call", "contract": "$st", "function": "agreeSignature", "from": "{a}", "expect": "applied"}}"#
        ));
    }
    actions.push(format!(
        r#"{{"action": "call", "contract": "$st", "function": "pass", "from": "supplier", "expect": "{expect}"}}"#
    ));
    env.write(
        "approval.json",
        &format!(r#"{{"name": "approval", "actions": [{}]}}"#, actions.join(",")),
    )
}

#[test]
fn one_of_two_approvals_is_skipped() {
    let env = Env::new();
    let script = approval_script(&env, &[LAB1], "skipped");
    let out = run(&["scenario", "run", &script]);
    assert_eq!(out.code, 0, "{}", out.stdout);

    let script = approval_script(&env, &[LAB1], "applied");
    let out = run(&["scenario", "run", &script]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.contains("[FAIL]"));
    assert!(out.stdout.ends_with("scenario approval: failed\n"));

    let script = approval_script(&env, &[LAB1, LAB2], "applied");
    assert_eq!(run(&["scenario", "run", &script]).code, 0);
}

#[test]
fn malformed_scenario_is_an_error() {
    let env = Env::new();
    let script = env.write(
        "bad.json",
        r#"{"name": "bad", "actions": [{"action": "deploy-chain", "bogus": 1}]}"#,
    );
    let out = run(&["scenario", "run", &script]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.starts_with("error: "));
}

#[test]
fn json_output_is_stable() {
    let a = run(&["--format", "json", "scenario", "run", &fixture("quality_tracing.json")]);
    assert_eq!(a.code, 0);
    let doc = a.json();
    assert_eq!(doc["passed"], Json::Bool(true));
    assert_eq!(doc["actions"].as_array().unwrap().len(), 36);
    // Pretty-printed with sorted keys.
    assert_eq!(a.stdout, serde_json::to_string_pretty(&doc).unwrap() + "\n");

    let env = Env::new();
    let schema = schema_file(&env);
    let a = run(&["--format", "json", "schema", "compile", &schema]);
    let b = run(&["--format", "json", "schema", "compile", &schema]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);

    let env_a = Env::new();
    let env_b = Env::new();
    env_a.chain(5, 2);
    env_b.chain(5, 2);
    let a = env_a.ok(&["--format", "json", "chain", "export", "--chain", "5"]);
    let b = env_b.ok(&["--format", "json", "chain", "export", "--chain", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn deploy_chain_and_contract_then_call() {
    let env = Env::new();
    env.chain(11, 3);
    let out = env.run(&["--format", "json", "chain", "inspect", "--chain", "11"]);
    assert_eq!(out.json()["height"], 0);

    // The same chain id cannot be deployed twice.
    let genesis = env.path("genesis.json");
    let inventory = env.path("inventory.json");
    let out = env.run(&["deploy", "chain", "--genesis", &genesis, "--inventory", &inventory]);
    assert_eq!(out.code, 2);

    let out = env.ok(&[
        "deploy",
        "contract",
        "--chain",
        "11",
        "--source",
        &fixture("service_agreement.sol"),
        "--contract",
        "ServiceAgreement",
        "--from",
        "provider",
    ]);
    assert!(out.stdout.starts_with("ServiceAgreement deployed at 0x"));

    let out = env.ok(&[
        "--format",
        "json",
        "chain",
        "call",
        "--chain",
        "11",
        "--contract",
        "ServiceAgreement",
        "--function",
        "queryAgreement",
        "--query",
    ]);
    assert_eq!(out.json()["status"], "applied");
    assert_eq!(out.json()["height"], Json::Null);

    let out = env.ok(&["chain", "inspect", "--chain", "11"]);
    assert!(out.stdout.contains("height 1, 1 contract(s)"), "{}", out.stdout);
    env.ok(&["chain", "inspect", "--chain", "11", "--contract", "ServiceAgreement"]);
    env.ok(&["chain", "verify", "--chain", "11"]);

    let export = env.path("export.json");
    env.ok(&["chain", "export", "--chain", "11", "--out", &export]);
    let chain = ubaas_core::ledger::SimChain::import(&fs::read_to_string(&export).unwrap()).unwrap();
    assert_eq!(chain.height(), 1);
}

#[test]
fn script_transport_prints_steps() {
    let env = Env::new();
    let genesis = env.write(
        "g.json",
        r#"{"chain_type": "fabric-like", "difficulty": "0x1", "chain_id": 3}"#,
    );
    let inventory = env.write(
        "i.json",
        r#"{"nodes": [{"id": "a", "endpoint": "peer-a.local:7051"}, {"id": "b", "endpoint": "peer-b.local:7051"}]}"#,
    );
    let out = env.ok(&[
        "deploy",
        "chain",
        "--genesis",
        &genesis,
        "--inventory",
        &inventory,
        "--transport",
        "script",
    ]);
    assert!(out.stdout.contains("10 steps on 2 nodes"), "{}", out.stdout);
    assert_eq!(out.stdout.lines().filter(|l| l.starts_with("00")).count(), 10);
    // A script run materializes no ledger.
    assert_eq!(env.run(&["chain", "inspect", "--chain", "3"]).code, 2);
}

#[test]
fn invalid_inventory_is_rejected() {
    let env = Env::new();
    let genesis = env.write(
        "g.json",
        r#"{"chain_type": "ethereum-like", "difficulty": "0x10", "chain_id": 4}"#,
    );
    let inventory = env.write("i.json", r#"{"nodes": []}"#);
    let out = env.run(&["deploy", "chain", "--genesis", &genesis, "--inventory", &inventory]);
    assert_eq!(out.code, 2);
}

fn schema_file(env: &Env) -> String {
    env.write(
        "schema.json",
        r#"{"name": "Shipment", "has_files": true, "attributes": [
            {"name": "origin", "type": "string", "placement": "on-chain"},
            {"name": "grade", "type": "string", "placement": "on-chain", "encrypted": true},
            {"name": "weight", "type": "integer", "placement": "off-chain"}]}"#,
    )
}

#[test]
fn schema_compile_writes_artifacts() {
    let env = Env::new();
    let schema = schema_file(&env);
    let dir = env.path("out");
    run(&["schema", "compile", &schema, "--out-dir", &dir]);
    for f in ["Shipment.sol", "ShipmentFileRegistry.sol", "Shipment.table.json"] {
        assert!(Path::new(&dir).join(f).exists(), "{f}");
    }
    let out = run(&["--format", "json", "schema", "compile", &schema]);
    let doc = out.json();
    assert!(doc["registry"].as_str().unwrap().contains("contract Shipment"));
    assert_eq!(doc["table"]["table"], "Shipment");
}

#[test]
fn schema_data_keys_and_files_end_to_end() {
    let env = Env::new();
    env.chain(21, 1);
    let schema = schema_file(&env);
    env.ok(&["schema", "deploy", &schema, "--chain", "21"]);

    let key = env.ok(&["--format", "json", "keys", "generate"]).json();
    let key_id = key["key_id"].as_str().unwrap().to_string();
    assert!(key.get("decryption_key").is_none());
    let listed = env.ok(&["keys", "list"]);
    assert_eq!(listed.stdout.trim(), key_id);

    let photo = env.write("photo.bin", "crate 17, intact");
    env.ok(&[
        "data",
        "write",
        "--schema",
        "Shipment",
        "--id",
        "SH-1",
        "--values",
        r#"{"origin": "Rotterdam", "grade": "A", "weight": 420}"#,
        "--key",
        &key_id,
        "--attach",
        &photo,
    ]);

    let read = env
        .ok(&[
            "--format", "json", "data", "read", "--schema", "Shipment", "--id", "SH-1", "--key", &key_id,
        ])
        .json();
    assert_eq!(read["record"]["values"]["grade"], "A");
    assert_eq!(read["record"]["values"]["weight"], 420);
    let read = env
        .ok(&[
            "--format", "json", "data", "read", "--schema", "Shipment", "--id", "SH-1",
        ])
        .json();
    assert_ne!(read["record"]["values"]["grade"], "A");
    assert_eq!(read["encrypted"], serde_json::json!(["grade"]));

    // Writing an encrypted attribute without a key fails.
    let out = env.run(&[
        "data",
        "write",
        "--schema",
        "Shipment",
        "--id",
        "SH-2",
        "--values",
        r#"{"origin": "x", "grade": "B", "weight": 1}"#,
    ]);
    assert_eq!(out.code, 2);

    env.ok(&["verify-file", "--schema", "Shipment", "--id", "SH-1", &photo]);
    let forged = env.write("forged.bin", "crate 17, intakt");
    let out = env.run(&["verify-file", "--schema", "Shipment", "--id", "SH-1", &forged]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.starts_with("tampered"));

    let out = env.ok(&["data", "attach", "--schema", "Shipment", "--id", "SH-1", &forged]);
    assert!(out.stdout.contains("index 1"));
    env.ok(&["verify-file", "--schema", "Shipment", "--id", "SH-1", &forged]);
    env.ok(&["chain", "verify", "--chain", "21"]);

    let unknown = env.run(&["data", "read", "--schema", "Shipment", "--id", "nope"]);
    assert_eq!(unknown.code, 2);
}

#[test]
fn keys_export_import_and_crypt_round_trip() {
    let env = Env::new();
    let key = env.ok(&["--format", "json", "keys", "generate"]).json();
    let id = key["key_id"].as_str().unwrap();
    let public = key["encryption_key"].as_str().unwrap();
    let exported = env.ok(&["keys", "export", "--id", id, "--private"]);
    let full: Json = serde_json::from_str(&exported.stdout).unwrap();
    let private = full["decryption_key"].as_str().unwrap().to_string();

    let other = Env::new();
    let file = other.write("key.json", &exported.stdout);
    other.ok(&["keys", "import", &file]);
    assert_eq!(other.ok(&["keys", "list"]).stdout.trim(), id);

    let plain = env.write("plain.txt", "lab result: qualified");
    let ct = env.ok(&["encrypt", "--key", public, "--in", &plain]);
    let ct_file = env.write("ct.hex", &ct.stdout);
    assert!(!ct.stdout.contains("qualified"));
    let out = env.ok(&["decrypt", "--key", &private, "--in", &ct_file]);
    assert_eq!(out.stdout, "lab result: qualified\n");

    let raw = env.path("ct.bin");
    env.ok(&["encrypt", "--key", public, "--in", &plain, "--out", &raw]);
    let back = env.path("back.txt");
    env.ok(&["decrypt", "--key", &private, "--in", &raw, "--out", &back]);
    assert_eq!(fs::read_to_string(back).unwrap(), "lab result: qualified");

    let wrong = env.ok(&["--format", "json", "keys", "generate"]).json();
    let wrong_id = wrong["key_id"].as_str().unwrap();
    let wrong_full: Json =
        serde_json::from_str(&env.ok(&["keys", "export", "--id", wrong_id, "--private"]).stdout).unwrap();
    let out = env.run(&[
        "decrypt",
        "--key",
        wrong_full["decryption_key"].as_str().unwrap(),
        "--in",
        &ct_file,
    ]);
    assert_eq!(out.code, 2);
}

#[test]
fn hash_prints_sha256() {
    let env = Env::new();
    let file = env.write("abc.txt", "abc");
    let out = run(&["hash", &file]);
    assert_eq!(out.code, 0);
    assert!(out
        .stdout
        .starts_with("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  "));
    let empty = env.write("empty.txt", "");
    let out = run(&["--format", "json", "hash", &empty]);
    assert_eq!(
        out.json()["sha256"],
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
}
