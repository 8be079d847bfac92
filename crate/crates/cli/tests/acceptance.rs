//! Acceptance suite: each criterion runs under its time limit and prints
//! one `PASS`/`FAIL` line. The process exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ubaas_cli::scenario::run_scenario_file;
use ubaas_core::contract::{ast_equal, parse, SourceUnit};
use ubaas_core::crypto::{compare_file, decrypt, encrypt, generate_keypair, hash_content, FileVerdict};
use ubaas_core::deploy::{execute_plan, make_plan, ChainType, GenesisConfig, NodeInventory, SimulatedTransport};
use ubaas_core::ledger::{SimChain, TxStatus, Value};
use ubaas_core::schema::{
    compile_schema, deploy_schema, AttrType, AttributeDef, DataSchema, Placement, RecordInstance, SchemaOptions,
    SchemaStores,
};
use ubaas_core::store::Store;
use ubaas_core::types::{Address, Bytes32};
use ubaas_core::weaver::{weave, PatternParams, WeaveRequest};

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn source(name: &str) -> SourceUnit {
    let text = std::fs::read_to_string(scenarios().join(name)).expect("fixture readable");
    parse(&text).expect("fixture parses")
}

fn addr(hex_digit: char) -> Address {
    format!("0x{}", hex_digit.to_string().repeat(40)).parse().unwrap()
}

fn random_address(rng: &mut StdRng) -> Address {
    Address(rng.gen())
}

fn chain() -> SimChain {
    SimChain::new(GenesisConfig::new(ChainType::EthereumLike, "0x4000", 1))
}

fn woven(file: &str, contract: &str, function: &str, params: PatternParams) -> SourceUnit {
    let req = WeaveRequest {
        contract: contract.into(),
        function: function.into(),
        params,
    };
    weave(&source(file), &req).expect("weave succeeds").unit
}

fn call(chain: &mut SimChain, from: Address, to: Address, f: &str, args: Vec<Value>) -> (TxStatus, usize) {
    chain.add_account(from);
    let r = chain.call(from, to, f, args).expect("call accepted");
    (r.status, r.delta.len())
}

fn golden_weaving() -> Outcome {
    let cases = [
        (
            "sample_testing",
            "SampleTesting",
            "pass",
            PatternParams::MultipleAuthorities {
                authorities: vec![addr('1'), addr('2'), addr('3')],
                threshold: 2,
            },
        ),
        (
            "service_agreement",
            "ServiceAgreement",
            "queryAgreement",
            PatternParams::DynamicBinding {
                secret_hash: hash_content(b"agreement-key-0173"),
            },
        ),
        (
            "freight_yard_pic",
            "FreightYardPic",
            "setFreightYardPic",
            PatternParams::EmbeddedPermission {
                authorized: vec![addr('4')],
            },
        ),
    ];
    for (file, contract, function, params) in cases {
        let out = woven(&format!("{file}.sol"), contract, function, params);
        let golden = source(&format!("{file}.woven.sol"));
        check!(ast_equal(&out, &golden), "{file}: woven AST differs from golden");
    }
    Ok("3/3 AST-equal".into())
}

fn m_of_n() -> Outcome {
    let requester = Address::from_label("requester");
    let outsider = Address::from_label("outsider");
    let mut cases = 0;
    for n in 1..=4usize {
        let authorities: Vec<Address> = (0..n).map(|i| Address::from_label(&format!("authority-{i}"))).collect();
        for m in 1..=n {
            let unit = woven(
                "sample_testing.sol",
                "SampleTesting",
                "pass",
                PatternParams::MultipleAuthorities {
                    authorities: authorities.clone(),
                    threshold: m as u64,
                },
            );
            for subset in 0..(1u32 << n) {
                let mut c = chain();
                c.add_account(requester);
                let target = c.deploy(requester, &unit, None, vec![]).unwrap().address;
                check!(
                    call(&mut c, requester, target, "requestAgreement", vec![]).0 == TxStatus::Applied,
                    "request"
                );
                let signers: Vec<Address> = (0..n)
                    .filter(|i| subset & (1 << i) != 0)
                    .map(|i| authorities[i])
                    .collect();
                for s in &signers {
                    call(&mut c, *s, target, "agreeSignature", vec![]);
                }
                let enough = signers.len() >= m;
                let (status, delta) = call(&mut c, outsider, target, "pass", vec![]);
                check!(
                    status == TxStatus::Skipped && delta == 0,
                    "N={n} M={m} subset={subset:b}: non-requester got {status}"
                );
                let (status, _) = call(&mut c, requester, target, "pass", vec![]);
                let expected = if enough { TxStatus::Applied } else { TxStatus::Skipped };
                check!(
                    status == expected,
                    "N={n} M={m} subset={subset:b}: requester got {status}, expected {expected}"
                );
                let passed = c.storage(&target).unwrap().get("passed") == Some(&Value::Bool(true));
                check!(passed == enough, "N={n} M={m} subset={subset:b}: passed={passed}");
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (N, M, subset) cases"))
}

fn dynamic_binding() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let owner = Address::from_label("owner");
    let buyer = Address::from_label("buyer");
    let secret = "agreement-key-0173";
    let unit = woven(
        "service_agreement.sol",
        "ServiceAgreement",
        "queryAgreement",
        PatternParams::DynamicBinding {
            secret_hash: hash_content(secret.as_bytes()),
        },
    );
    let mut c = chain();
    c.add_account(owner);
    let target = c.deploy(owner, &unit, None, vec![]).unwrap().address;
    let bind = call(
        &mut c,
        owner,
        target,
        "initial",
        vec![Value::Bytes32(hash_content(secret.as_bytes()))],
    );
    check!(bind.0 == TxStatus::Applied, "initial: {}", bind.0);
    let query = |c: &mut SimChain, key: &str| call(c, buyer, target, "queryAgreement", vec![Value::String(key.into())]);
    check!(
        query(&mut c, secret).0 == TxStatus::Applied,
        "correct secret not applied"
    );
    for _ in 0..100 {
        let len = rng.gen_range(0..40);
        let wrong: String = (0..len).map(|_| rng.gen_range(' '..='~')).collect();
        if wrong == secret {
            continue;
        }
        let (status, delta) = query(&mut c, &wrong);
        check!(
            status == TxStatus::Skipped && delta == 0,
            "wrong secret {wrong:?}: {status}, {delta} changes"
        );
    }
    let new_secret = "renewed-key-0174";
    let new_hash = Value::Bytes32(hash_content(new_secret.as_bytes()));
    let args = vec![Value::String(secret.into()), new_hash];
    call(&mut c, buyer, target, "changeKey", args.clone());
    check!(
        query(&mut c, secret).0 == TxStatus::Applied,
        "non-owner changeKey took effect"
    );
    let (status, delta) = call(&mut c, owner, target, "changeKey", args);
    check!(
        status == TxStatus::Applied && delta == 1,
        "owner changeKey: {status}, {delta} changes"
    );
    check!(
        query(&mut c, secret).0 == TxStatus::Skipped,
        "old secret still accepted"
    );
    check!(query(&mut c, new_secret).0 == TxStatus::Applied, "new secret rejected");
    Ok("correct applied, 100 wrong skipped, key rotation honoured".into())
}

fn embedded_permission() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let authorized: Vec<Address> = (0..5).map(|_| random_address(&mut rng)).collect();
    let unit = woven(
        "freight_yard_pic.sol",
        "FreightYardPic",
        "setFreightYardPic",
        PatternParams::EmbeddedPermission {
            authorized: authorized.clone(),
        },
    );
    let owner = Address::from_label("owner");
    let mut c = chain();
    c.add_account(owner);
    let target = c.deploy(owner, &unit, None, vec![]).unwrap().address;
    let mut callers: Vec<(Address, bool)> = authorized.iter().map(|a| (*a, true)).collect();
    callers.extend((0..20).map(|_| (random_address(&mut rng), false)));
    let mut uploads = 0u128;
    for (who, allowed) in callers {
        let pic = Value::Bytes32(Bytes32(rng.gen()));
        let (status, delta) = call(&mut c, who, target, "setFreightYardPic", vec![pic, Value::Address(who)]);
        if allowed {
            check!(
                status == TxStatus::Applied && delta > 0,
                "authorized {who}: {status}, {delta} changes"
            );
            uploads += 1;
        } else {
            check!(
                status == TxStatus::Skipped && delta == 0,
                "unauthorized {who}: {status}, {delta} changes"
            );
        }
    }
    let owner_q = c
        .query(owner, target, "getFreightYardPic", vec![Value::Uint(uploads - 1)])
        .unwrap();
    check!(owner_q.status == TxStatus::Applied, "last upload not readable");
    let beyond = c
        .query(owner, target, "getFreightYardPic", vec![Value::Uint(uploads)])
        .unwrap();
    check!(
        beyond.status == TxStatus::Rejected,
        "more uploads stored than authorized callers"
    );
    Ok("5 authorized mutated, 20 unauthorized untouched".into())
}

fn random_schema(rng: &mut StdRng, i: usize) -> DataSchema {
    let types = [
        AttrType::String,
        AttrType::Integer,
        AttrType::Boolean,
        AttrType::Bytes32,
    ];
    let count = rng.gen_range(1..=12);
    let mut names = BTreeSet::new();
    let mut attributes = Vec::new();
    while attributes.len() < count {
        let len = rng.gen_range(3..10);
        let name: String = std::iter::once(rng.gen_range('a'..='z'))
            .chain((1..len).map(|_| {
                let c = rng.gen_range(0..36u8);
                if c < 26 {
                    (b'a' + c) as char
                } else {
                    (b'0' + c - 26) as char
                }
            }))
            .collect::<String>()
            + "X";
        if !names.insert(name.clone()) {
            continue;
        }
        let on_chain = attributes.is_empty() || rng.gen_bool(0.5);
        attributes.push(AttributeDef {
            name,
            value_type: types[rng.gen_range(0..4)],
            placement: if on_chain {
                Placement::OnChain
            } else {
                Placement::OffChain
            },
            encrypted: on_chain && rng.gen_bool(0.3),
        });
    }
    DataSchema {
        name: format!("Schema{i}{}", rng.gen_range(0..1000)),
        attributes,
        has_files: rng.gen_bool(0.5),
    }
}

fn schema_minimality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    for i in 0..50 {
        let schema = random_schema(&mut rng, i);
        let compiled = compile_schema(&schema).map_err(|e| format!("{}: {e}", schema.name))?;
        let ids = compiled.registry.identifiers();
        let all: BTreeSet<&str> = schema.attributes.iter().map(|a| a.name.as_str()).collect();
        let on_chain: BTreeSet<&str> = schema
            .attributes
            .iter()
            .filter(|a| a.placement == Placement::OnChain)
            .map(|a| a.name.as_str())
            .collect();
        let referenced: BTreeSet<&str> = all.iter().copied().filter(|n| ids.contains(*n)).collect();
        check!(
            referenced == on_chain,
            "{}: registry references {referenced:?}, on-chain is {on_chain:?}",
            schema.name
        );
        let contract = compiled.registry.contracts.last().unwrap();
        check!(
            contract.name == schema.name,
            "registry named {} for schema {}",
            contract.name,
            schema.name
        );
        check!(
            compiled.table.table == schema.name,
            "table named {}",
            compiled.table.table
        );
        let columns: BTreeSet<&str> = compiled.table.columns.iter().map(|c| c.name.as_str()).collect();
        check!(columns == all, "{}: table columns {columns:?}", schema.name);
        if let Some(files) = &compiled.file_registry {
            let fids = files.identifiers();
            check!(
                all.iter().all(|n| !fids.contains(*n)),
                "{}: file registry leaks attributes",
                schema.name
            );
        }
    }
    Ok("50 schemas minimal and consistently named".into())
}

fn hash_integrity() -> Outcome {
    let vectors: [(&[u8], &str); 3] = [
        (b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
        (
            b"abc",
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad",
        ),
        (
            b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1",
        ),
    ];
    for (input, expected) in vectors {
        check!(
            hex::encode(hash_content(input).0) == expected,
            "digest of {:?}",
            String::from_utf8_lossy(input)
        );
    }
    let million = vec![b'a'; 1_000_000];
    check!(
        hex::encode(hash_content(&million).0) == "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0",
        "digest of one million 'a'"
    );

    let mut rng = StdRng::seed_from_u64(6);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    let mut c = chain();
    let owner = Address::from_label("owner");
    c.add_account(owner);
    let schema = DataSchema {
        name: "Evidence".into(),
        attributes: vec![AttributeDef {
            name: "label".into(),
            value_type: AttrType::String,
            placement: Placement::OnChain,
            encrypted: false,
        }],
        has_files: true,
    };
    deploy_schema(&store, &mut c, owner, &schema, SchemaOptions::default()).map_err(|e| e.to_string())?;
    let mut stores = SchemaStores::open(&store, &mut c, "Evidence", owner).map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for i in 0..100 {
        let len = rng.gen_range(1..4096);
        let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let id = format!("E-{i}");
        let rec = RecordInstance {
            schema: "Evidence".into(),
            record_id: id.clone(),
            values: [("label".to_string(), serde_json::json!(id))].into_iter().collect(),
            files: vec![],
        };
        stores
            .write_record(&rec, None, std::slice::from_ref(&data))
            .map_err(|e| e.to_string())?;
        files.push((id, data));
    }
    for (id, data) in &files {
        let verdict = compare_file(data, id, &stores).map_err(|e| e.to_string())?;
        check!(
            verdict == FileVerdict::Authentic,
            "{id}: untampered copy is {verdict:?}"
        );
        let mut flipped = data.clone();
        let bit = rng.gen_range(0..flipped.len() * 8);
        flipped[bit / 8] ^= 1 << (bit % 8);
        let verdict = compare_file(&flipped, id, &stores).map_err(|e| e.to_string())?;
        check!(
            verdict == FileVerdict::Tampered,
            "{id}: flipped bit {bit} reported {verdict:?}"
        );
    }
    Ok("4 vectors match, 100 authentic, 100 tampered".into())
}

fn encryption() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    for i in 0..100 {
        let keys = generate_keypair().map_err(|e| e.to_string())?;
        let other = generate_keypair().map_err(|e| e.to_string())?;
        let len = rng.gen_range(0..2048);
        let plain: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let ct = encrypt(&plain, &keys.encryption_key).map_err(|e| e.to_string())?;
        check!(ct != plain, "case {i}: ciphertext equals plaintext");
        if plain.len() >= 16 {
            check!(
                !ct.windows(plain.len()).any(|w| w == plain.as_slice()),
                "case {i}: plaintext visible"
            );
        }
        let back = decrypt(&ct, &keys.decryption_key).map_err(|e| e.to_string())?;
        check!(back == plain, "case {i}: round trip differs");
        check!(
            decrypt(&ct, &other.decryption_key).is_err(),
            "case {i}: wrong key decrypted"
        );
    }
    Ok("100 round trips, wrong keys all rejected".into())
}

fn deployment_linearity() -> Outcome {
    let genesis = GenesisConfig::new(ChainType::EthereumLike, "0x4000", 100);
    let mut counts = Vec::new();
    for n in std::iter::once(1).chain((10..=100).step_by(10)) {
        let plan = make_plan(&genesis, &NodeInventory::synthetic(n)).map_err(|e| e.to_string())?;
        check!(plan.steps.len() == 5 * n, "N={n}: {} steps", plan.steps.len());
        counts.push(plan.steps.len());
    }
    let plan = make_plan(&genesis, &NodeInventory::synthetic(100)).map_err(|e| e.to_string())?;
    let record = execute_plan(&plan, &SimulatedTransport::new()).map_err(|e| e.to_string())?;
    check!(
        record.succeeded(),
        "N=100 execution had failures: {:?}",
        record.failures()
    );
    Ok(format!("step counts {counts:?}; 500/500 steps succeeded"))
}

fn quality_tracing() -> Outcome {
    let run = run_scenario_file(&scenarios().join("quality_tracing.json")).map_err(|e| e.to_string())?;
    if let Some(a) = run.report.actions.iter().find(|a| !a.passed) {
        return Err(format!("action {} {} {}: {}", a.index, a.action, a.label, a.detail));
    }
    check!(run.report.passed, "scenario failed");
    Ok(format!("{} actions passed", run.report.actions.len()))
}

fn determinism() -> Outcome {
    let run = run_scenario_file(&scenarios().join("quality_tracing.json")).map_err(|e| e.to_string())?;
    check!(!run.chains.is_empty(), "scenario produced no chain");
    let mut blocks = 0;
    for chain in run.chains.values() {
        let replayed = SimChain::replay(chain.genesis().clone(), &chain.tx_log()).map_err(|e| e.to_string())?;
        check!(
            replayed.export() == chain.export(),
            "chain {}: replayed export differs",
            chain.chain_id()
        );
        blocks += chain.height();
    }
    Ok(format!(
        "{} chain(s), {blocks} blocks replayed byte-identically",
        run.chains.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("golden weaving", 1, golden_weaving),
        ("M-of-N enforcement", 5, m_of_n),
        ("dynamic binding", 5, dynamic_binding),
        ("embedded permission", 5, embedded_permission),
        ("on-chain minimality and shared naming", 5, schema_minimality),
        ("hash integrity", 10, hash_integrity),
        ("encryption", 10, encryption),
        ("deployment linearity", 5, deployment_linearity),
        ("end-to-end quality tracing", 10, quality_tracing),
        ("determinism", 5, determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed >= Duration::from_secs(limit) => Err(format!("exceeded {limit} s limit")),
            other => other,
        };
        let (verdict, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => {
                failed += 1;
                ("FAIL", e.clone())
            }
        };
        println!(
            "criterion {:>2} {verdict} {name} [{:.3} s < {limit} s]: {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
