use super::*;
use crate::contract::{ast_equal, parse, render};
use crate::genesis::{ChainType, GenesisConfig};
use crate::ledger::{SimChain, TxStatus, Value};

const SAMPLE: &str = include_str!("../../tests/fixtures/sample_testing.sol");
const SAMPLE_WOVEN: &str = include_str!("../../tests/fixtures/sample_testing.woven.sol");
const AGREEMENT: &str = include_str!("../../tests/fixtures/service_agreement.sol");
const AGREEMENT_WOVEN: &str = include_str!("../../tests/fixtures/service_agreement.woven.sol");
const FREIGHT: &str = include_str!("../../tests/fixtures/freight_yard_pic.sol");
const FREIGHT_WOVEN: &str = include_str!("../../tests/fixtures/freight_yard_pic.woven.sol");

fn addr(byte: u8) -> Address {
    Address([byte; 20])
}

fn labs() -> Vec<Address> {
    vec![addr(0x11), addr(0x22), addr(0x33)]
}

fn chain() -> SimChain {
    SimChain::new(GenesisConfig::new(ChainType::EthereumLike, "0x4000", 9))
}

#[test]
fn multiple_authorities_matches_golden() {
    let woven = weave_multiple_authorities(&parse(SAMPLE).unwrap(), "SampleTesting", "pass", labs(), 2).unwrap();
    let golden = parse(SAMPLE_WOVEN).unwrap();
    assert!(ast_equal(&woven.unit, &golden), "{}", render(&woven.unit));
    assert_eq!(
        woven.report.modified,
        vec!["function pass() isEnoughAgreement()".to_string()]
    );
    assert!(woven
        .report
        .injected
        .contains(&"modifier isEnoughAgreement".to_string()));
}

#[test]
fn dynamic_binding_matches_golden() {
    let hash = Bytes32([7; 32]);
    let woven = weave_dynamic_binding(&parse(AGREEMENT).unwrap(), "ServiceAgreement", "queryAgreement", hash).unwrap();
    let golden = parse(AGREEMENT_WOVEN).unwrap();
    assert!(ast_equal(&woven.unit, &golden), "{}", render(&woven.unit));
    assert_eq!(woven.report.secret_hash, Some(hash));
    assert_eq!(
        woven.report.modified,
        vec!["function queryAgreement(string key) verify(key) constant returns (string, string, bytes32)".to_string()]
    );
}

#[test]
fn embedded_permission_matches_golden() {
    let woven = weave_embedded_permission(
        &parse(FREIGHT).unwrap(),
        "FreightYardPic",
        "setFreightYardPic",
        vec![addr(0x44)],
    )
    .unwrap();
    let golden = parse(FREIGHT_WOVEN).unwrap();
    assert!(ast_equal(&woven.unit, &golden), "{}", render(&woven.unit));
    assert!(woven.report.warnings.is_empty());
}

#[test]
fn rendered_output_reparses_to_the_same_tree() {
    let woven = weave_multiple_authorities(&parse(SAMPLE).unwrap(), "SampleTesting", "pass", labs(), 2).unwrap();
    let text = render(&woven.unit);
    assert!(ast_equal(&parse(&text).unwrap(), &woven.unit));
}

#[test]
fn target_members_are_preserved() {
    let input = parse(SAMPLE).unwrap();
    let woven = weave_multiple_authorities(&input, "SampleTesting", "pass", labs(), 2).unwrap();
    let before = input.contract("SampleTesting").unwrap();
    let after = woven.unit.contract("SampleTesting").unwrap();
    assert_eq!(before.state_vars, after.state_vars);
    assert_eq!(before.modifiers, after.modifiers);
    assert_eq!(before.function("sampleTest"), after.function("sampleTest"));
    let pass = after.function("pass").unwrap();
    assert_eq!(pass.body, before.function("pass").unwrap().body);
    assert_eq!(after.bases, vec![MULTIPLE_AUTHORITIES.to_string()]);
}

#[test]
fn request_validation() {
    let unit = parse(SAMPLE).unwrap();
    assert!(matches!(
        weave_multiple_authorities(&unit, "Nope", "pass", labs(), 2),
        Err(WeaveError::UnknownContract(_))
    ));
    assert!(matches!(
        weave_multiple_authorities(&unit, "SampleTesting", "nope", labs(), 2),
        Err(WeaveError::UnknownFunction { .. })
    ));
    for m in [0, 4] {
        assert!(matches!(
            weave_multiple_authorities(&unit, "SampleTesting", "pass", labs(), m),
            Err(WeaveError::Threshold { .. })
        ));
    }
    assert_eq!(
        weave_multiple_authorities(&unit, "SampleTesting", "pass", vec![], 1).unwrap_err(),
        WeaveError::EmptyAuthorities
    );
    assert!(matches!(
        weave_multiple_authorities(&unit, "SampleTesting", "pass", vec![addr(1), addr(1)], 1),
        Err(WeaveError::DuplicateAddress(_))
    ));
    assert!(matches!(
        weave_embedded_permission(&unit, "SampleTesting", "pass", vec![]),
        Err(WeaveError::EmptyAuthorities)
    ));
    weave_multiple_authorities(&unit, "SampleTesting", "pass", vec![addr(9)], 1).unwrap();
}

#[test]
fn weaving_twice_is_rejected() {
    let once = weave_multiple_authorities(&parse(SAMPLE).unwrap(), "SampleTesting", "pass", labs(), 2).unwrap();
    assert!(matches!(
        weave_multiple_authorities(&once.unit, "SampleTesting", "pass", labs(), 2),
        Err(WeaveError::AlreadyWoven { .. })
    ));
    assert!(matches!(
        weave_multiple_authorities(&once.unit, "SampleTesting", "sampleTest", labs(), 2),
        Err(WeaveError::BaseExists(_))
    ));
}

#[test]
fn key_parameter_and_member_collisions() {
    let unit = parse("contract A { uint v; function f(string key) { v = 1; } }").unwrap();
    assert_eq!(
        weave_dynamic_binding(&unit, "A", "f", Bytes32([1; 32])).unwrap_err(),
        WeaveError::KeyCollision("f".into())
    );
    let unit = parse("contract A { address owner; function f() { owner = msg.sender; } }").unwrap();
    assert!(matches!(
        weave_embedded_permission(&unit, "A", "f", vec![addr(1)]),
        Err(WeaveError::NameCollision { .. })
    ));
    let unit = parse("contract A { uint v; function A() { v = 1; } function f() { v = 2; } }").unwrap();
    assert!(matches!(
        weave_embedded_permission(&unit, "A", "f", vec![addr(1)]),
        Err(WeaveError::ConstructorExists(_))
    ));
}

#[test]
fn zero_parameter_function_gains_exactly_key() {
    let unit = parse("contract A { uint v; function f() { v = 1; } }").unwrap();
    let woven = weave_dynamic_binding(&unit, "A", "f", Bytes32([1; 32])).unwrap();
    let f = woven.unit.contract("A").unwrap().function("f").unwrap();
    assert_eq!(f.params.len(), 1);
    assert_eq!(f.params[0].name, "key");
    assert_eq!(f.params[0].ty, TypeName::string());
}

#[test]
fn zero_address_is_flagged() {
    let woven = weave_embedded_permission(
        &parse(FREIGHT).unwrap(),
        "FreightYardPic",
        "setFreightYardPic",
        vec![Address::default(), addr(0x44)],
    )
    .unwrap();
    assert_eq!(woven.report.warnings.len(), 1);
}

#[test]
fn different_patterns_chain() {
    let unit = parse(SAMPLE).unwrap();
    let first = weave_multiple_authorities(&unit, "SampleTesting", "pass", labs(), 2).unwrap();
    let second = weave_dynamic_binding(&first.unit, "SampleTesting", "sampleTest", Bytes32([3; 32])).unwrap();
    let db = second.unit.contract(DYNAMIC_BINDING).unwrap();
    assert_eq!(db.bases, vec![MULTIPLE_AUTHORITIES.to_string()]);
    let flat = crate::ledger::flatten(&second.unit, "SampleTesting").unwrap();
    assert_eq!(
        flat.linearization,
        vec![MULTIPLE_AUTHORITIES, DYNAMIC_BINDING, "SampleTesting"]
    );
}

#[test]
fn woven_sample_testing_enforces_two_of_three() {
    let unit = weave_multiple_authorities(&parse(SAMPLE).unwrap(), "SampleTesting", "pass", labs(), 2)
        .unwrap()
        .unit;
    for subset in 0u32..8 {
        let mut c = chain();
        for a in labs() {
            c.add_account(a);
        }
        let requester = c.create_account("agency");
        let at = c.deploy(requester, &unit, None, vec![]).unwrap().address;
        let storage = c.storage(&at).unwrap();
        assert_eq!(storage["total"], Value::Uint(3));
        assert_eq!(storage["agreeThreshold"], Value::Uint(2));

        c.call(requester, at, "requestAgreement", vec![]).unwrap();
        for (i, lab) in labs().into_iter().enumerate() {
            if subset & (1 << i) != 0 {
                c.call(lab, at, "agreeSignature", vec![]).unwrap();
            }
        }
        let enough = subset.count_ones() >= 2;
        // A signer who is not the requester never gets through.
        let r = c.call(labs()[0], at, "pass", vec![]).unwrap();
        assert_eq!(r.status, TxStatus::Skipped);
        let r = c.call(requester, at, "pass", vec![]).unwrap();
        let expected = if enough { TxStatus::Applied } else { TxStatus::Skipped };
        assert_eq!(r.status, expected, "subset {subset:03b}");
        assert_eq!(c.storage(&at).unwrap()["passed"], Value::Bool(enough));
        if enough {
            // The round is reset after a successful pass.
            assert_eq!(c.storage(&at).unwrap()["agreeing"], Value::Bool(false));
            let again = c.call(requester, at, "pass", vec![]).unwrap();
            assert_eq!(again.status, TxStatus::Skipped);
        }
    }
}

#[test]
fn woven_service_agreement_requires_the_secret() {
    use sha2::{Digest, Sha256};
    let hash = Bytes32(Sha256::digest(b"s3cret").into());
    let unit = weave_dynamic_binding(&parse(AGREEMENT).unwrap(), "ServiceAgreement", "queryAgreement", hash)
        .unwrap()
        .unit;
    let mut c = chain();
    let owner = c.create_account("supplier");
    let at = c.deploy(owner, &unit, None, vec![]).unwrap().address;
    c.call(owner, at, "initial", vec![Value::Bytes32(hash)]).unwrap();

    let ok = c
        .call(owner, at, "queryAgreement", vec![Value::String("s3cret".into())])
        .unwrap();
    assert_eq!(ok.status, TxStatus::Applied);
    assert_eq!(ok.returns.len(), 3);
    let wrong = c
        .call(owner, at, "queryAgreement", vec![Value::String("guess".into())])
        .unwrap();
    assert_eq!(wrong.status, TxStatus::Skipped);
    assert!(wrong.returns.is_empty());
}

#[test]
fn woven_freight_yard_admits_only_the_inspector() {
    let unit = weave_embedded_permission(
        &parse(FREIGHT).unwrap(),
        "FreightYardPic",
        "setFreightYardPic",
        vec![addr(0x44)],
    )
    .unwrap()
    .unit;
    let mut c = chain();
    let agency = c.create_account("agency");
    let inspector = addr(0x44);
    c.add_account(inspector);
    let at = c.deploy(agency, &unit, None, vec![]).unwrap().address;
    let args = vec![Value::Bytes32(Bytes32([5; 32])), Value::Address(inspector)];
    for i in 0..5 {
        let stranger = c.create_account(&format!("stranger-{i}"));
        let r = c.call(stranger, at, "setFreightYardPic", args.clone()).unwrap();
        assert_eq!(r.status, TxStatus::Skipped);
    }
    let r = c.call(inspector, at, "setFreightYardPic", args).unwrap();
    assert_eq!(r.status, TxStatus::Applied);
    let r = c.query(agency, at, "getFreightYardPic", vec![Value::Uint(0)]).unwrap();
    assert_eq!(
        r.returns,
        vec![Value::Bytes32(Bytes32([5; 32])), Value::Address(inspector)]
    );
}

#[test]
fn request_json_shape() {
    let req: WeaveRequest = serde_json::from_str(
        r#"{"pattern":"multiple-authorities","contract":"SampleTesting","function":"pass",
            "authorities":["0x1111111111111111111111111111111111111111"],"threshold":1}"#,
    )
    .unwrap();
    assert_eq!(req.params.pattern(), Pattern::MultipleAuthorities);
    assert_eq!("dynamic-binding".parse::<Pattern>().unwrap(), Pattern::DynamicBinding);
}
