//! Scripted end-to-end runs: a JSON list of actions, each with an expected
//! outcome, executed in order against a fresh store and simulated chains.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use ubaas_core::contract::{parse, render};
use ubaas_core::crypto::{compare_file, generate_keypair, hash_content, FileVerdict, KeyPair};
use ubaas_core::deploy::{
    constructor_args, deploy_chain, deploy_contract_on, save_chain, ChainType, GenesisConfig, NodeInventory,
    ScriptTransport, SimulatedTransport, Transport,
};
use ubaas_core::ledger::{SimChain, TxStatus};
use ubaas_core::schema::{deploy_schema, DataSchema, RecordInstance, SchemaOptions, SchemaStores};
use ubaas_core::store::{Collection, Store};
use ubaas_core::types::{Address, Bytes32};
use ubaas_core::weaver::{weave, WeaveRequest};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub actions: Vec<Action>,
}

/// One scripted step. Strings of the form `$name` refer to artifacts made
/// by earlier actions; `source`, `schema` and file contents of the form
/// `@path` are read relative to the script.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Action {
    DeployChain {
        name: String,
        chain_id: u64,
        #[serde(default = "default_difficulty")]
        difficulty: String,
        #[serde(default)]
        chain_type: Option<ChainType>,
        #[serde(default)]
        nodes: Option<usize>,
        #[serde(default)]
        inventory: Option<NodeInventory>,
        #[serde(default)]
        transport: Option<String>,
        #[serde(default)]
        fail_at: Vec<usize>,
        expect: String,
    },
    /// SHA-256 of text or `@file` content, e.g. a secret or a picture.
    Hash {
        name: String,
        content: String,
        expect: String,
    },
    GenerateKeys {
        name: String,
        expect: String,
    },
    Weave {
        name: String,
        source: String,
        request: Json,
        #[serde(default)]
        expect_source: Option<String>,
        expect: String,
    },
    DeployContract {
        name: String,
        chain: Json,
        source: String,
        #[serde(default)]
        contract: Option<String>,
        #[serde(default)]
        from: Option<String>,
        #[serde(default)]
        args: Vec<Json>,
        expect: String,
    },
    Call {
        contract: String,
        function: String,
        #[serde(default)]
        from: Option<String>,
        #[serde(default)]
        args: Vec<Json>,
        #[serde(default)]
        returns: Option<Vec<Json>>,
        #[serde(default)]
        storage: Option<BTreeMap<String, Json>>,
        expect: String,
    },
    Query {
        contract: String,
        function: String,
        #[serde(default)]
        from: Option<String>,
        #[serde(default)]
        args: Vec<Json>,
        #[serde(default)]
        returns: Option<Vec<Json>>,
        expect: String,
    },
    DeploySchema {
        name: String,
        chain: Json,
        schema: Json,
        #[serde(default)]
        from: Option<String>,
        #[serde(default)]
        offchain_ciphertext: bool,
        expect: String,
    },
    WriteRecord {
        schema: String,
        id: String,
        values: BTreeMap<String, Json>,
        #[serde(default)]
        key: Option<String>,
        #[serde(default)]
        files: Vec<String>,
        #[serde(default)]
        from: Option<String>,
        expect: String,
    },
    ReadRecord {
        schema: String,
        id: String,
        #[serde(default)]
        key: Option<String>,
        #[serde(default)]
        values: Option<BTreeMap<String, Json>>,
        #[serde(default)]
        encrypted: Option<Vec<String>>,
        #[serde(default)]
        divergent: Option<Vec<String>>,
        expect: String,
    },
    AttachFile {
        schema: String,
        id: String,
        content: String,
        #[serde(default)]
        from: Option<String>,
        expect: String,
    },
    VerifyFile {
        schema: String,
        id: String,
        content: String,
        expect: String,
    },
}

fn default_difficulty() -> String {
    "0x4000".to_string()
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::DeployChain { .. } => "deploy-chain",
            Action::Hash { .. } => "hash",
            Action::GenerateKeys { .. } => "generate-keys",
            Action::Weave { .. } => "weave",
            Action::DeployContract { .. } => "deploy-contract",
            Action::Call { .. } => "call",
            Action::Query { .. } => "query",
            Action::DeploySchema { .. } => "deploy-schema",
            Action::WriteRecord { .. } => "write-record",
            Action::ReadRecord { .. } => "read-record",
            Action::AttachFile { .. } => "attach-file",
            Action::VerifyFile { .. } => "verify-file",
        }
    }

    fn expect(&self) -> &str {
        match self {
            Action::DeployChain { expect, .. }
            | Action::Hash { expect, .. }
            | Action::GenerateKeys { expect, .. }
            | Action::Weave { expect, .. }
            | Action::DeployContract { expect, .. }
            | Action::Call { expect, .. }
            | Action::Query { expect, .. }
            | Action::DeploySchema { expect, .. }
            | Action::WriteRecord { expect, .. }
            | Action::ReadRecord { expect, .. }
            | Action::AttachFile { expect, .. }
            | Action::VerifyFile { expect, .. } => expect,
        }
    }

    fn label(&self) -> String {
        match self {
            Action::DeployChain { name, .. }
            | Action::Hash { name, .. }
            | Action::GenerateKeys { name, .. }
            | Action::Weave { name, .. }
            | Action::DeployContract { name, .. }
            | Action::DeploySchema { name, .. } => name.clone(),
            Action::Call { contract, function, .. } | Action::Query { contract, function, .. } => {
                format!("{contract}.{function}")
            }
            Action::WriteRecord { schema, id, .. }
            | Action::ReadRecord { schema, id, .. }
            | Action::AttachFile { schema, id, .. }
            | Action::VerifyFile { schema, id, .. } => format!("{schema}/{id}"),
        }
    }

    /// Outcomes this action can legitimately be expected to have.
    fn allowed_expectations(&self) -> &'static [&'static str] {
        match self {
            Action::Call { .. } | Action::Query { .. } => &["applied", "skipped", "rejected", "error"],
            Action::VerifyFile { .. } => &["authentic", "tampered", "unregistered", "error"],
            _ => &["ok", "error"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionReport {
    pub index: usize,
    pub action: String,
    pub label: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub passed: bool,
    pub actions: Vec<ActionReport>,
}

/// A finished run: the report plus the final state of every simulated chain.
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub chains: BTreeMap<u64, SimChain>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Malformed(String),
    #[error("scenario store: {0}")]
    Store(#[from] ubaas_core::store::StoreError),
}

#[derive(Debug, Clone)]
enum Artifact {
    Chain(u64),
    Contract { chain: u64, address: Address },
    Source(String),
    Hash(Bytes32),
    Key(Box<KeyPair>),
    Schema { chain: u64 },
}

impl Artifact {
    fn to_json(&self) -> Json {
        match self {
            Artifact::Chain(id) => Json::from(*id),
            Artifact::Contract { address, .. } => Json::from(address.to_string()),
            Artifact::Source(s) => Json::from(s.clone()),
            Artifact::Hash(h) => Json::from(h.to_string()),
            Artifact::Key(k) => Json::from(k.key_id.clone()),
            Artifact::Schema { .. } => Json::Null,
        }
    }
}

/// What executing an action produced, before comparing with the expectation.
struct Outcome {
    actual: String,
    detail: String,
    mismatch: Option<String>,
}

impl Outcome {
    fn ok(detail: impl Into<String>) -> Self {
        Outcome {
            actual: "ok".into(),
            detail: detail.into(),
            mismatch: None,
        }
    }
}

pub fn load_script(path: &Path) -> Result<ScenarioScript, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ScenarioError::Malformed(e.to_string()))
}

pub fn run_scenario_file(path: &Path) -> Result<ScenarioRun, ScenarioError> {
    let script = load_script(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_scenario(&script, base)
}

/// Runs the actions in order and stops at the first unmet expectation.
pub fn run_scenario(script: &ScenarioScript, base_dir: &Path) -> Result<ScenarioRun, ScenarioError> {
    for (i, a) in script.actions.iter().enumerate() {
        if !a.allowed_expectations().contains(&a.expect()) {
            return Err(ScenarioError::Malformed(format!(
                "action {} ({}): expectation `{}` is not one of {:?}",
                i + 1,
                a.kind(),
                a.expect(),
                a.allowed_expectations()
            )));
        }
    }
    let dir = tempfile::tempdir().map_err(|source| ScenarioError::Io {
        path: std::env::temp_dir(),
        source,
    })?;
    let mut runner = Runner {
        store: Store::open(dir.path())?,
        base_dir: base_dir.to_path_buf(),
        chains: BTreeMap::new(),
        artifacts: BTreeMap::new(),
    };
    let mut actions = Vec::new();
    let mut passed = true;
    for (i, action) in script.actions.iter().enumerate() {
        let outcome = match runner.execute(action) {
            Ok(o) => o,
            Err(Failure::Malformed(m)) => {
                return Err(ScenarioError::Malformed(format!(
                    "action {} ({}): {m}",
                    i + 1,
                    action.kind()
                )))
            }
            Err(Failure::Op(e)) => Outcome {
                actual: "error".into(),
                detail: e,
                mismatch: None,
            },
        };
        let expected = action.expect().to_string();
        let ok = outcome.actual == expected && outcome.mismatch.is_none();
        let detail = match (&outcome.mismatch, ok) {
            (Some(m), _) => m.clone(),
            (None, false) => format!("expected {expected}, got {}: {}", outcome.actual, outcome.detail),
            (None, true) => outcome.detail,
        };
        actions.push(ActionReport {
            index: i + 1,
            action: action.kind().to_string(),
            label: action.label(),
            expected,
            actual: outcome.actual,
            passed: ok,
            detail,
        });
        if !ok {
            passed = false;
            break;
        }
    }
    for chain in runner.chains.values() {
        save_chain(&runner.store, chain).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
    }
    Ok(ScenarioRun {
        report: ScenarioReport {
            name: script.name.clone(),
            passed,
            actions,
        },
        chains: runner.chains,
    })
}

enum Failure {
    /// The script itself is wrong (dangling reference, unreadable file).
    Malformed(String),
    /// The operation failed; compared against an `error` expectation.
    Op(String),
}

fn op<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Op(e.to_string())
}

struct Runner {
    store: Store,
    base_dir: PathBuf,
    chains: BTreeMap<u64, SimChain>,
    artifacts: BTreeMap<String, Artifact>,
}

impl Runner {
    fn artifact(&self, reference: &str) -> Result<&Artifact, Failure> {
        let name = reference
            .strip_prefix('$')
            .ok_or_else(|| Failure::Malformed(format!("`{reference}` is not a `$name` reference")))?;
        self.artifacts
            .get(name)
            .ok_or_else(|| Failure::Malformed(format!("unknown reference `{reference}`")))
    }

    fn define(&mut self, name: &str, artifact: Artifact) -> Result<(), Failure> {
        if self.artifacts.contains_key(name) {
            return Err(Failure::Malformed(format!("`{name}` is defined twice")));
        }
        self.artifacts.insert(name.to_string(), artifact);
        Ok(())
    }

    /// Replaces `$name` strings anywhere in a JSON value.
    fn resolve(&self, json: &Json) -> Result<Json, Failure> {
        Ok(match json {
            Json::String(s) if s.starts_with('$') => self.artifact(s)?.to_json(),
            Json::Array(items) => Json::Array(items.iter().map(|j| self.resolve(j)).collect::<Result<_, _>>()?),
            Json::Object(map) => Json::Object(
                map.iter()
                    .map(|(k, v)| Ok((k.clone(), self.resolve(v)?)))
                    .collect::<Result<_, Failure>>()?,
            ),
            other => other.clone(),
        })
    }

    fn read_file(&self, rel: &str) -> Result<Vec<u8>, Failure> {
        let path = self.base_dir.join(rel);
        fs::read(&path).map_err(|e| Failure::Malformed(format!("cannot read {}: {e}", path.display())))
    }

    /// Inline text, `$ref` to a woven source, or `@path`.
    fn text(&self, text: &str) -> Result<String, Failure> {
        if text.starts_with('$') {
            match self.artifact(text)? {
                Artifact::Source(s) => Ok(s.clone()),
                _ => Err(Failure::Malformed(format!("`{text}` is not a source"))),
            }
        } else if let Some(rel) = text.strip_prefix('@') {
            String::from_utf8(self.read_file(rel)?).map_err(|_| Failure::Malformed(format!("{rel} is not UTF-8")))
        } else {
            Ok(text.to_string())
        }
    }

    fn bytes(&self, text: &str) -> Result<Vec<u8>, Failure> {
        match text.strip_prefix('@') {
            Some(rel) => self.read_file(rel),
            None => Ok(text.as_bytes().to_vec()),
        }
    }

    fn account(&self, from: Option<&str>) -> Result<Address, Failure> {
        let from = from.unwrap_or("owner");
        if from.starts_with('$') {
            return match self.artifact(from)? {
                Artifact::Contract { address, .. } => Ok(*address),
                _ => Err(Failure::Malformed(format!("`{from}` is not an address"))),
            };
        }
        Ok(from.parse().unwrap_or_else(|_| Address::from_label(from)))
    }

    fn chain_id(&self, chain: &Json) -> Result<u64, Failure> {
        match self.resolve(chain)? {
            Json::Number(n) => n
                .as_u64()
                .ok_or_else(|| Failure::Malformed(format!("`{n}` is not a chain id"))),
            other => Err(Failure::Malformed(format!("`{other}` is not a chain id"))),
        }
    }

    fn chain_mut(&mut self, id: u64) -> Result<&mut SimChain, Failure> {
        self.chains
            .get_mut(&id)
            .ok_or_else(|| Failure::Op(format!("chain {id} has no simulated ledger")))
    }

    fn contract(&self, reference: &str) -> Result<(u64, Address), Failure> {
        match self.artifact(reference)? {
            Artifact::Contract { chain, address } => Ok((*chain, *address)),
            _ => Err(Failure::Malformed(format!("`{reference}` is not a contract"))),
        }
    }

    fn keys(&self, reference: Option<&str>) -> Result<Option<KeyPair>, Failure> {
        reference
            .map(|r| match self.artifact(r)? {
                Artifact::Key(k) => Ok((**k).clone()),
                _ => Err(Failure::Malformed(format!("`{r}` is not a key pair"))),
            })
            .transpose()
    }

    fn schema_stores(&mut self, schema: &str, from: Option<&str>) -> Result<SchemaStores<'_>, Failure> {
        let chain = match self.artifacts.get(schema) {
            Some(Artifact::Schema { chain }) => *chain,
            _ => return Err(Failure::Malformed(format!("unknown schema `{schema}`"))),
        };
        let sender = self.account(from)?;
        let chain = self
            .chains
            .get_mut(&chain)
            .ok_or_else(|| Failure::Op(format!("chain {chain} has no simulated ledger")))?;
        SchemaStores::open(&self.store, chain, schema, sender).map_err(op)
    }

    fn execute(&mut self, action: &Action) -> Result<Outcome, Failure> {
        match action {
            Action::DeployChain {
                name,
                chain_id,
                difficulty,
                chain_type,
                nodes,
                inventory,
                transport,
                fail_at,
                ..
            } => {
                let genesis = GenesisConfig::new(chain_type.unwrap_or(ChainType::EthereumLike), difficulty, *chain_id);
                let inventory = match (inventory, nodes) {
                    (Some(inv), _) => inv.clone(),
                    (None, Some(n)) => NodeInventory::synthetic(*n),
                    (None, None) => return Err(Failure::Malformed("give either `nodes` or `inventory`".into())),
                };
                let sim = SimulatedTransport::failing_at(fail_at.iter().copied());
                let script = ScriptTransport::new();
                let t: &dyn Transport = match transport.as_deref().unwrap_or("sim") {
                    "sim" => &sim,
                    "script" => &script,
                    other => return Err(Failure::Malformed(format!("unknown transport `{other}`"))),
                };
                let record = deploy_chain(&self.store, &genesis, &inventory, t).map_err(op)?;
                if t.materializes_ledger() {
                    self.chains.insert(*chain_id, SimChain::new(genesis));
                }
                self.define(name, Artifact::Chain(*chain_id))?;
                Ok(Outcome::ok(format!(
                    "chain {chain_id}: {} steps on {} nodes",
                    record.outcomes.len(),
                    inventory.nodes.len()
                )))
            }
            Action::Hash { name, content, .. } => {
                let h = hash_content(&self.bytes(content)?);
                self.define(name, Artifact::Hash(h))?;
                Ok(Outcome::ok(h.to_string()))
            }
            Action::GenerateKeys { name, .. } => {
                let keys = generate_keypair().map_err(op)?;
                let id = keys.key_id.clone();
                self.store.put_as(Collection::Keys, &id, &keys).map_err(op)?;
                self.define(name, Artifact::Key(Box::new(keys)))?;
                Ok(Outcome::ok(format!("key {id}")))
            }
            Action::Weave {
                name,
                source,
                request,
                expect_source,
                ..
            } => {
                let unit = parse(&self.text(source)?).map_err(op)?;
                let request: WeaveRequest = serde_json::from_value(self.resolve(request)?)
                    .map_err(|e| Failure::Malformed(format!("weave request: {e}")))?;
                let woven = weave(&unit, &request).map_err(op)?;
                let text = render(&woven.unit);
                let mismatch = match expect_source {
                    Some(golden) => {
                        let golden =
                            parse(&self.text(golden)?).map_err(|e| Failure::Malformed(format!("golden: {e}")))?;
                        (!ubaas_core::contract::ast_equal(&golden, &woven.unit))
                            .then(|| "woven source differs from the expected source".to_string())
                    }
                    None => None,
                };
                self.define(name, Artifact::Source(text))?;
                Ok(Outcome {
                    actual: "ok".into(),
                    detail: format!(
                        "{} woven into {}.{}",
                        request.params.pattern(),
                        request.contract,
                        request.function
                    ),
                    mismatch,
                })
            }
            Action::DeployContract {
                name,
                chain,
                source,
                contract,
                from,
                args,
                ..
            } => {
                let id = self.chain_id(chain)?;
                let unit = parse(&self.text(source)?).map_err(op)?;
                let args = constructor_args(
                    &unit,
                    contract.as_deref(),
                    &self
                        .resolve(&Json::Array(args.clone()))?
                        .as_array()
                        .cloned()
                        .unwrap_or_default(),
                )
                .map_err(op)?;
                let sender = self.account(from.as_deref())?;
                let store = &self.store;
                let chain = self
                    .chains
                    .get_mut(&id)
                    .ok_or_else(|| Failure::Op(format!("chain {id} has no simulated ledger")))?;
                let record = deploy_contract_on(store, chain, &unit, contract.as_deref(), sender, args).map_err(op)?;
                self.define(
                    name,
                    Artifact::Contract {
                        chain: id,
                        address: record.address,
                    },
                )?;
                Ok(Outcome::ok(format!(
                    "{} at {} (block {})",
                    record.name, record.address, record.height
                )))
            }
            Action::Call {
                contract,
                function,
                from,
                args,
                returns,
                storage,
                ..
            } => self.call(
                contract,
                function,
                from.as_deref(),
                args,
                returns.as_ref(),
                storage.as_ref(),
                false,
            ),
            Action::Query {
                contract,
                function,
                from,
                args,
                returns,
                ..
            } => self.call(contract, function, from.as_deref(), args, returns.as_ref(), None, true),
            Action::DeploySchema {
                name,
                chain,
                schema,
                from,
                offchain_ciphertext,
                ..
            } => {
                let id = self.chain_id(chain)?;
                let schema: DataSchema = match schema {
                    Json::String(s) => serde_json::from_str(&self.text(s)?),
                    other => serde_json::from_value(other.clone()),
                }
                .map_err(|e| Failure::Malformed(format!("schema: {e}")))?;
                if &schema.name != name {
                    return Err(Failure::Malformed(format!(
                        "schema is named `{}` but the action names it `{name}`",
                        schema.name
                    )));
                }
                let sender = self.account(from.as_deref())?;
                let store = &self.store;
                let chain = self
                    .chains
                    .get_mut(&id)
                    .ok_or_else(|| Failure::Op(format!("chain {id} has no simulated ledger")))?;
                let options = SchemaOptions {
                    offchain_ciphertext: *offchain_ciphertext,
                };
                let link = deploy_schema(store, chain, sender, &schema, options).map_err(op)?;
                self.define(name, Artifact::Schema { chain: id })?;
                Ok(Outcome::ok(format!("registry {} on chain {id}", link.registry)))
            }
            Action::WriteRecord {
                schema,
                id,
                values,
                key,
                files,
                from,
                ..
            } => {
                let keys = self.keys(key.as_deref())?;
                let files = files.iter().map(|f| self.bytes(f)).collect::<Result<Vec<_>, _>>()?;
                let values = values
                    .iter()
                    .map(|(k, v)| Ok((k.clone(), self.resolve(v)?)))
                    .collect::<Result<_, Failure>>()?;
                let rec = RecordInstance {
                    schema: schema.clone(),
                    record_id: id.clone(),
                    values,
                    files: vec![],
                };
                let mut stores = self.schema_stores(schema, from.as_deref())?;
                let receipt = stores.write_record(&rec, keys.as_ref(), &files).map_err(op)?;
                Ok(Outcome::ok(format!(
                    "block {}, {} file(s)",
                    receipt.height,
                    receipt.files.len()
                )))
            }
            Action::ReadRecord {
                schema,
                id,
                key,
                values,
                encrypted,
                divergent,
                ..
            } => {
                let keys = self.keys(key.as_deref())?;
                let expected_values = values
                    .as_ref()
                    .map(|v| self.resolve(&serde_json::to_value(v).expect("map serializes")))
                    .transpose()?;
                let stores = self.schema_stores(schema, None)?;
                let report = stores.read_record(id, keys.as_ref()).map_err(op)?;
                let got_divergent: Vec<String> = report.divergences.iter().map(|d| d.attribute.clone()).collect();
                let mut mismatch = None;
                if let Some(v) = expected_values {
                    let got = serde_json::to_value(&report.record.values).expect("map serializes");
                    if got != v {
                        mismatch = Some(format!("values: expected {v}, got {got}"));
                    }
                }
                if let Some(e) = encrypted {
                    if e != &report.encrypted {
                        mismatch = Some(format!("encrypted: expected {e:?}, got {:?}", report.encrypted));
                    }
                }
                if let Some(d) = divergent {
                    if d != &got_divergent {
                        mismatch = Some(format!("divergent: expected {d:?}, got {got_divergent:?}"));
                    }
                }
                Ok(Outcome {
                    actual: "ok".into(),
                    detail: format!(
                        "{} value(s), {} divergent",
                        report.record.values.len(),
                        got_divergent.len()
                    ),
                    mismatch,
                })
            }
            Action::AttachFile {
                schema,
                id,
                content,
                from,
                ..
            } => {
                let bytes = self.bytes(content)?;
                let mut stores = self.schema_stores(schema, from.as_deref())?;
                let receipt = stores.register_file(id, &bytes).map_err(op)?;
                Ok(Outcome::ok(format!("{} at index {}", receipt.hash, receipt.index)))
            }
            Action::VerifyFile {
                schema, id, content, ..
            } => {
                let bytes = self.bytes(content)?;
                let stores = self.schema_stores(schema, None)?;
                let verdict = compare_file(&bytes, id, &stores).map_err(op)?;
                let actual = match verdict {
                    FileVerdict::Authentic => "authentic",
                    FileVerdict::Tampered => "tampered",
                    FileVerdict::Unregistered => "unregistered",
                };
                Ok(Outcome {
                    actual: actual.into(),
                    detail: hash_content(&bytes).to_string(),
                    mismatch: None,
                })
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn call(
        &mut self,
        contract: &str,
        function: &str,
        from: Option<&str>,
        args: &[Json],
        returns: Option<&Vec<Json>>,
        storage: Option<&BTreeMap<String, Json>>,
        query: bool,
    ) -> Result<Outcome, Failure> {
        let (id, address) = self.contract(contract)?;
        let sender = self.account(from)?;
        let args = self.resolve(&Json::Array(args.to_vec()))?;
        let expected_returns = returns.map(|r| self.resolve(&Json::Array(r.clone()))).transpose()?;
        let expected_storage = storage
            .map(|s| self.resolve(&serde_json::to_value(s).expect("map serializes")))
            .transpose()?;
        let chain = self.chain_mut(id)?;
        chain.add_account(sender);
        let args = chain
            .parse_args(&address, function, args.as_array().expect("built as array"))
            .map_err(op)?;
        let result = if query {
            chain.query(sender, address, function, args)
        } else {
            chain.call(sender, address, function, args)
        }
        .map_err(op)?;
        let got_returns = Json::Array(result.returns.iter().map(|v| v.to_json()).collect());
        let mut mismatch = None;
        if let Some(r) = expected_returns {
            if result.status == TxStatus::Applied && r != got_returns {
                mismatch = Some(format!("returns: expected {r}, got {got_returns}"));
            }
        }
        if let Some(Json::Object(vars)) = expected_storage {
            let state = chain.storage(&address).expect("contract exists");
            for (var, want) in vars {
                let got = state.get(&var).map(|v| v.to_json()).unwrap_or(Json::Null);
                if got != want {
                    mismatch = Some(format!("storage `{var}`: expected {want}, got {got}"));
                }
            }
        }
        let detail = match (&result.error, result.height) {
            (Some(e), _) => e.clone(),
            (None, Some(h)) => format!("block {h}, {} change(s), returns {got_returns}", result.delta.len()),
            (None, None) => format!("returns {got_returns}"),
        };
        Ok(Outcome {
            actual: result.status.to_string(),
            detail,
            mismatch,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script(actions: &str) -> ScenarioScript {
        serde_json::from_str(&format!(r#"{{"name": "t", "actions": [{actions}]}}"#)).unwrap()
    }

    fn run(actions: &str) -> Result<ScenarioRun, ScenarioError> {
        run_scenario(&script(actions), Path::new("."))
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"actions": [{"action": "hash", "name": "h", "content": "x", "expect": "ok", "extra": 1}]}"#;
        assert!(serde_json::from_str::<ScenarioScript>(text).is_err());
        let text = r#"{"actions": [], "colour": "red"}"#;
        assert!(serde_json::from_str::<ScenarioScript>(text).is_err());
        let text = r#"{"actions": [{"action": "teleport", "expect": "ok"}]}"#;
        assert!(serde_json::from_str::<ScenarioScript>(text).is_err());
    }

    #[test]
    fn expectation_must_fit_the_action() {
        let err = run(r#"{"action": "hash", "name": "h", "content": "x", "expect": "applied"}"#)
            .err()
            .unwrap();
        assert!(matches!(err, ScenarioError::Malformed(_)));
    }

    #[test]
    fn dangling_reference_is_malformed() {
        let err = run(r#"{"action": "deploy-contract", "name": "c", "chain": "$nope", "source": "contract A { }", "expect": "ok"}"#)
            .err()
            .unwrap();
        assert!(err.to_string().contains("$nope"), "{err}");
    }

    #[test]
    fn failed_deployment_can_be_expected() {
        let r = run(
            r#"{"action": "deploy-chain", "name": "c", "chain_id": 1, "nodes": 2, "fail_at": [3], "expect": "error"}"#,
        )
        .unwrap();
        assert!(r.report.passed);
        assert!(r.chains.is_empty());
    }

    #[test]
    fn run_stops_at_first_unmet_expectation() {
        let r = run(r#"
            {"action": "deploy-chain", "name": "c", "chain_id": 1, "nodes": 1, "expect": "ok"},
            {"action": "deploy-chain", "name": "d", "chain_id": 1, "nodes": 1, "expect": "ok"},
            {"action": "hash", "name": "h", "content": "x", "expect": "ok"}"#)
        .unwrap();
        assert!(!r.report.passed);
        assert_eq!(r.report.actions.len(), 2);
        assert!(!r.report.actions[1].passed);
        assert_eq!(r.report.actions[1].actual, "error");
        assert_eq!(r.chains.len(), 1);
    }

    #[test]
    fn call_checks_returns_and_storage() {
        let src = "contract Counter { uint n; function bump() { n++; } function get() constant returns (uint) { return n; } }";
        let actions = format!(
            r#"{{"action": "deploy-chain", "name": "c", "chain_id": 9, "nodes": 1, "expect": "ok"}},
            {{"action": "deploy-contract", "name": "k", "chain": "$c", "source": "{src}", "expect": "ok"}},
            {{"action": "call", "contract": "$k", "function": "bump", "storage": {{"n": 1}}, "expect": "applied"}},
            {{"action": "query", "contract": "$k", "function": "get", "returns": [1], "expect": "applied"}},
            {{"action": "query", "contract": "$k", "function": "get", "returns": [2], "expect": "applied"}}"#
        );
        let r = run(&actions).unwrap();
        assert!(!r.report.passed);
        let last = r.report.actions.last().unwrap();
        assert_eq!(last.index, 5);
        assert_eq!(last.actual, "applied");
        assert!(!last.passed);
        assert_eq!(r.chains[&9].height(), 2);
    }
}
