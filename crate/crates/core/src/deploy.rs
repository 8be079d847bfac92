//! Deployment as a service: plans, transports and the chain/contract registry.
//!
//! A plan is five steps per node, node after node. Plan structure never
//! depends on the chain type; only the genesis digest carried by the
//! `transfer-genesis` step differs between vendors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::{IpAddr, SocketAddr};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::SourceUnit;
pub use crate::genesis::{ChainType, GenesisConfig, GenesisError};
use crate::ledger::{flatten, LedgerError, SimChain, Value};
use crate::store::{Collection, Store, StoreError};
use crate::types::Address;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub endpoint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInventory {
    pub nodes: Vec<Node>,
}

impl NodeInventory {
    /// Nodes `node-1..=node-n` at `10.0.x.y:30303`.
    pub fn synthetic(n: usize) -> NodeInventory {
        NodeInventory {
            nodes: (1..=n)
                .map(|i| Node {
                    id: format!("node-{i}"),
                    endpoint: format!("10.0.{}.{}:30303", i / 250, i % 250 + 1),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), DeployError> {
        if self.nodes.is_empty() {
            return Err(DeployError::EmptyInventory);
        }
        let mut ids = BTreeSet::new();
        let mut endpoints = BTreeSet::new();
        for n in &self.nodes {
            if n.id.is_empty() || n.id.chars().any(char::is_whitespace) {
                return Err(DeployError::InvalidNodeId(n.id.clone()));
            }
            if !ids.insert(n.id.as_str()) {
                return Err(DeployError::DuplicateNodeId(n.id.clone()));
            }
            if !valid_endpoint(&n.endpoint) {
                return Err(DeployError::InvalidEndpoint(n.endpoint.clone()));
            }
            if !endpoints.insert(n.endpoint.to_ascii_lowercase()) {
                return Err(DeployError::DuplicateEndpoint(n.endpoint.clone()));
            }
        }
        Ok(())
    }
}

/// An IP address, a socket address, or a DNS name with optional port.
fn valid_endpoint(endpoint: &str) -> bool {
    if endpoint.parse::<IpAddr>().is_ok() || endpoint.parse::<SocketAddr>().is_ok() {
        return true;
    }
    let (host, port) = match endpoint.rsplit_once(':') {
        Some((h, p)) => (h, Some(p)),
        None => (endpoint, None),
    };
    if let Some(p) = port {
        if p.parse::<u16>().is_err() {
            return false;
        }
    }
    !host.is_empty()
        && host.len() <= 253
        && host.split('.').all(|label| {
            !label.is_empty()
                && label.len() <= 63
                && !label.starts_with('-')
                && !label.ends_with('-')
                && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    TransferClient,
    TransferGenesis,
    InitNode,
    StartNode,
    ConnectPeers,
}

impl StepKind {
    pub const ORDER: [StepKind; 5] = [
        StepKind::TransferClient,
        StepKind::TransferGenesis,
        StepKind::InitNode,
        StepKind::StartNode,
        StepKind::ConnectPeers,
    ];
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::TransferClient => "transfer-client",
            StepKind::TransferGenesis => "transfer-genesis",
            StepKind::InitNode => "init-node",
            StepKind::StartNode => "start-node",
            StepKind::ConnectPeers => "connect-peers",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    /// 1-based position in the plan.
    pub index: usize,
    pub node_id: String,
    pub kind: StepKind,
    pub params: BTreeMap<String, String>,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04} {} {}", self.index, self.node_id, self.kind)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub genesis: GenesisConfig,
    pub inventory: NodeInventory,
    pub steps: Vec<Step>,
}

impl DeploymentPlan {
    pub fn chain_id(&self) -> u64 {
        self.genesis.chain_id
    }

    /// The plan as a plain-text command list, one step per line.
    pub fn script(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }

    fn validate(&self) -> Result<(), DeployError> {
        self.genesis.validate()?;
        self.inventory.validate()?;
        let ids: BTreeSet<&str> = self.inventory.nodes.iter().map(|n| n.id.as_str()).collect();
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, s) in self.steps.iter().enumerate() {
            if s.index != i + 1 || !ids.contains(s.node_id.as_str()) {
                return Err(DeployError::InvalidPlan(format!("step {} is malformed", i + 1)));
            }
            let pos = seen.entry(&s.node_id).or_insert(0);
            if StepKind::ORDER.get(*pos) != Some(&s.kind) {
                return Err(DeployError::InvalidPlan(format!(
                    "step {} ({}) is out of order for {}",
                    s.index, s.kind, s.node_id
                )));
            }
            *pos += 1;
            if s.kind == StepKind::ConnectPeers {
                let peers = s.params.get("peers").map(String::as_str).unwrap_or("");
                if peers.split(',').filter(|p| !p.is_empty()).any(|p| !ids.contains(p)) {
                    return Err(DeployError::InvalidPlan(format!(
                        "step {} references a node outside the inventory",
                        s.index
                    )));
                }
            }
        }
        if seen.len() != ids.len() || seen.values().any(|n| *n != StepKind::ORDER.len()) {
            return Err(DeployError::InvalidPlan("every node needs all five steps".into()));
        }
        Ok(())
    }
}

pub fn make_plan(genesis: &GenesisConfig, inventory: &NodeInventory) -> Result<DeploymentPlan, DeployError> {
    genesis.validate()?;
    inventory.validate()?;
    let digest = genesis.digest().to_string();
    let mut steps = Vec::with_capacity(inventory.nodes.len() * StepKind::ORDER.len());
    for node in &inventory.nodes {
        let peers: Vec<&str> = inventory
            .nodes
            .iter()
            .filter(|n| n.id != node.id)
            .map(|n| n.id.as_str())
            .collect();
        for kind in StepKind::ORDER {
            let mut params = BTreeMap::new();
            params.insert("endpoint".to_string(), node.endpoint.clone());
            match kind {
                StepKind::TransferClient => {
                    params.insert("artifact".into(), "node-client".into());
                }
                StepKind::TransferGenesis => {
                    params.insert("genesis_digest".into(), digest.clone());
                }
                StepKind::InitNode => {
                    params.insert("chain_id".into(), genesis.chain_id.to_string());
                    params.insert("data_dir".into(), format!("chains/{}/{}", genesis.chain_id, node.id));
                }
                StepKind::StartNode => {
                    params.insert("chain_id".into(), genesis.chain_id.to_string());
                }
                StepKind::ConnectPeers => {
                    params.insert("peers".into(), peers.join(","));
                }
            }
            steps.push(Step {
                index: steps.len() + 1,
                node_id: node.id.clone(),
                kind,
                params,
            });
        }
    }
    Ok(DeploymentPlan {
        genesis: genesis.clone(),
        inventory: inventory.clone(),
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// Carries out individual plan steps on a node.
pub trait Transport: Sync {
    fn name(&self) -> &'static str;

    /// Whether a successful run leaves a live simulated ledger behind.
    fn materializes_ledger(&self) -> bool {
        false
    }

    fn execute(&self, step: &Step) -> Result<String, TransportError>;
}

/// In-memory transport that tracks per-node progress. Steps listed in
/// `fail_at` (1-based plan indices) fail deliberately.
#[derive(Debug, Default)]
pub struct SimulatedTransport {
    fail_at: BTreeSet<usize>,
    progress: Mutex<BTreeMap<String, Vec<StepKind>>>,
}

impl SimulatedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn failing_at(steps: impl IntoIterator<Item = usize>) -> Self {
        SimulatedTransport {
            fail_at: steps.into_iter().collect(),
            progress: Mutex::default(),
        }
    }

    /// Steps completed per node, in execution order.
    pub fn progress(&self) -> BTreeMap<String, Vec<StepKind>> {
        self.progress.lock().expect("transport state poisoned").clone()
    }
}

impl Transport for SimulatedTransport {
    fn name(&self) -> &'static str {
        "sim"
    }

    fn materializes_ledger(&self) -> bool {
        true
    }

    fn execute(&self, step: &Step) -> Result<String, TransportError> {
        if self.fail_at.contains(&step.index) {
            return Err(TransportError(format!(
                "injected failure at step {} ({} on {})",
                step.index, step.kind, step.node_id
            )));
        }
        let mut progress = self.progress.lock().expect("transport state poisoned");
        let done = progress.entry(step.node_id.clone()).or_default();
        let expected = StepKind::ORDER[done.len().min(StepKind::ORDER.len() - 1)];
        if done.len() >= StepKind::ORDER.len() || step.kind != expected {
            return Err(TransportError(format!(
                "{} on {} arrived out of order",
                step.kind, step.node_id
            )));
        }
        done.push(step.kind);
        Ok(format!("{} done on {}", step.kind, step.node_id))
    }
}

/// Transport for real infrastructure: records each step as a script line
/// and reports success without contacting anything.
#[derive(Debug, Default)]
pub struct ScriptTransport {
    lines: Mutex<BTreeMap<usize, String>>,
}

impl ScriptTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Emitted lines in plan order.
    pub fn script(&self) -> String {
        self.lines
            .lock()
            .expect("transport state poisoned")
            .values()
            .map(|l| format!("{l}\n"))
            .collect()
    }
}

impl Transport for ScriptTransport {
    fn name(&self) -> &'static str {
        "script"
    }

    fn execute(&self, step: &Step) -> Result<String, TransportError> {
        let line = step.to_string();
        self.lines
            .lock()
            .expect("transport state poisoned")
            .insert(step.index, line.clone());
        Ok(line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepStatus {
    Succeeded,
    Failed,
    NotAttempted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub index: usize,
    pub node_id: String,
    pub kind: StepKind,
    pub status: StepStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentRecord {
    pub chain_id: u64,
    pub transport: String,
    pub plan: DeploymentPlan,
    pub outcomes: Vec<StepOutcome>,
    /// Endpoints of the nodes, for transports without a simulated ledger.
    pub endpoints: Vec<String>,
}

impl DeploymentRecord {
    pub fn succeeded(&self) -> bool {
        self.outcomes.iter().all(|o| o.status == StepStatus::Succeeded)
    }

    /// Plan indices of failed steps.
    pub fn failures(&self) -> Vec<usize> {
        self.outcomes
            .iter()
            .filter(|o| o.status == StepStatus::Failed)
            .map(|o| o.index)
            .collect()
    }
}

/// Runs every node's steps in order, nodes in parallel. A failed step stops
/// its node; other nodes carry on.
pub fn execute_plan(plan: &DeploymentPlan, transport: &dyn Transport) -> Result<DeploymentRecord, DeployError> {
    plan.validate()?;
    let mut per_node: BTreeMap<&str, Vec<&Step>> = BTreeMap::new();
    for s in &plan.steps {
        per_node.entry(&s.node_id).or_default().push(s);
    }
    let mut outcomes: Vec<StepOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = per_node
            .values()
            .map(|steps| {
                scope.spawn(move || {
                    let mut failed = false;
                    steps
                        .iter()
                        .map(|s| {
                            let (status, detail) = if failed {
                                (StepStatus::NotAttempted, String::new())
                            } else {
                                match transport.execute(s) {
                                    Ok(detail) => (StepStatus::Succeeded, detail),
                                    Err(e) => {
                                        failed = true;
                                        (StepStatus::Failed, e.0)
                                    }
                                }
                            };
                            StepOutcome {
                                index: s.index,
                                node_id: s.node_id.clone(),
                                kind: s.kind,
                                status,
                                detail,
                            }
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("node worker panicked"))
            .collect()
    });
    outcomes.sort_by_key(|o| o.index);
    Ok(DeploymentRecord {
        chain_id: plan.chain_id(),
        transport: transport.name().to_string(),
        plan: plan.clone(),
        outcomes,
        endpoints: plan.inventory.nodes.iter().map(|n| n.endpoint.clone()).collect(),
    })
}

#[derive(Debug, Error)]
pub enum DeployError {
    #[error("node inventory is empty")]
    EmptyInventory,
    #[error("invalid node id `{0}`")]
    InvalidNodeId(String),
    #[error("node id `{0}` appears more than once")]
    DuplicateNodeId(String),
    #[error("`{0}` is not a valid endpoint")]
    InvalidEndpoint(String),
    #[error("endpoint `{0}` appears more than once")]
    DuplicateEndpoint(String),
    #[error(transparent)]
    Genesis(#[from] GenesisError),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("a chain with id {0} is already registered")]
    DuplicateChain(u64),
    #[error("deployment failed at step(s) {failures:?}")]
    StepFailed {
        failures: Vec<usize>,
        record: Box<DeploymentRecord>,
    },
    #[error("unknown chain {0}")]
    UnknownChain(u64),
    #[error("chain {0} has no simulated ledger (deployed with an external transport)")]
    NoLedger(u64),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Plans and executes a chain deployment and registers the result.
/// Failed deployments are returned in the error and not persisted.
pub fn deploy_chain(
    store: &Store,
    genesis: &GenesisConfig,
    inventory: &NodeInventory,
    transport: &dyn Transport,
) -> Result<DeploymentRecord, DeployError> {
    let key = genesis.chain_id.to_string();
    if store.get(Collection::Blockchains, &key)?.is_some() {
        return Err(DeployError::DuplicateChain(genesis.chain_id));
    }
    let plan = make_plan(genesis, inventory)?;
    let record = execute_plan(&plan, transport)?;
    if !record.succeeded() {
        return Err(DeployError::StepFailed {
            failures: record.failures(),
            record: Box::new(record),
        });
    }
    if transport.materializes_ledger() {
        save_chain(store, &SimChain::new(genesis.clone()))?;
    }
    store.put_as(Collection::Blockchains, &key, &record)?;
    Ok(record)
}

pub fn chain_record(store: &Store, chain_id: u64) -> Result<DeploymentRecord, DeployError> {
    store
        .get_as(Collection::Blockchains, &chain_id.to_string())?
        .ok_or(DeployError::UnknownChain(chain_id))
}

pub fn load_chain(store: &Store, chain_id: u64) -> Result<SimChain, DeployError> {
    let key = chain_id.to_string();
    if store.get(Collection::Blockchains, &key)?.is_none() {
        return Err(DeployError::UnknownChain(chain_id));
    }
    let json = store
        .get(Collection::Ledgers, &key)?
        .ok_or(DeployError::NoLedger(chain_id))?;
    let text = serde_json::to_string(&json).expect("json value serializes");
    Ok(SimChain::import(&text)?)
}

pub fn save_chain(store: &Store, chain: &SimChain) -> Result<(), DeployError> {
    let json: serde_json::Value = serde_json::from_str(&chain.export()).expect("chain export is valid JSON");
    store.put(Collection::Ledgers, &chain.chain_id().to_string(), &json)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbiParam {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbiEntry {
    pub name: String,
    pub inputs: Vec<AbiParam>,
    pub outputs: Vec<String>,
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abi {
    pub constructor: Vec<AbiParam>,
    pub functions: Vec<AbiEntry>,
}

impl Abi {
    pub fn function(&self, name: &str) -> Option<&AbiEntry> {
        self.functions.iter().find(|f| f.name == name)
    }
}

fn abi_params(params: &[crate::contract::Param]) -> Vec<AbiParam> {
    params
        .iter()
        .map(|p| AbiParam {
            name: p.name.clone(),
            ty: p.ty.to_string(),
        })
        .collect()
}

/// Externally callable interface of `contract`, inherited functions included.
pub fn abi_of(unit: &SourceUnit, contract: &str) -> Result<Abi, DeployError> {
    let flat = flatten(unit, contract).map_err(LedgerError::from)?;
    Ok(Abi {
        constructor: flat
            .constructor_of(contract)
            .map(|c| abi_params(&c.params))
            .unwrap_or_default(),
        functions: flat
            .def
            .functions
            .iter()
            .filter(|f| !f.is_internal)
            .map(|f| AbiEntry {
                name: f.name.clone(),
                inputs: abi_params(&f.params),
                outputs: f.returns.iter().map(|r| r.ty.to_string()).collect(),
                constant: f.is_constant,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractRecord {
    pub chain_id: u64,
    pub name: String,
    pub address: Address,
    pub source: String,
    pub abi: Abi,
    pub height: u64,
}

impl ContractRecord {
    pub fn key(&self) -> String {
        format!("{}/{}", self.chain_id, self.address)
    }
}

/// Deploys onto an already loaded chain and records address, source and ABI.
pub fn deploy_contract_on(
    store: &Store,
    chain: &mut SimChain,
    unit: &SourceUnit,
    contract: Option<&str>,
    sender: Address,
    args: Vec<Value>,
) -> Result<ContractRecord, DeployError> {
    let name = target_name(unit, contract)?;
    let abi = abi_of(unit, &name)?;
    chain.add_account(sender);
    let deployment = chain.deploy(sender, unit, Some(&name), args)?;
    let record = ContractRecord {
        chain_id: chain.chain_id(),
        name,
        address: deployment.address,
        source: chain
            .contract(&deployment.address)
            .expect("just deployed")
            .source
            .clone(),
        abi,
        height: deployment.height,
    };
    store.put_as(Collection::Contracts, &record.key(), &record)?;
    Ok(record)
}

/// The named contract, or the last one in the unit.
fn target_name(unit: &SourceUnit, contract: Option<&str>) -> Result<String, DeployError> {
    match contract {
        Some(n) => Ok(n.to_string()),
        None => Ok(unit.contracts.last().ok_or(LedgerError::EmptyUnit)?.name.clone()),
    }
}

/// Converts JSON constructor arguments using the constructor's parameter types.
pub fn constructor_args(
    unit: &SourceUnit,
    contract: Option<&str>,
    args: &[serde_json::Value],
) -> Result<Vec<Value>, DeployError> {
    let name = target_name(unit, contract)?;
    let flat = flatten(unit, &name).map_err(LedgerError::from)?;
    let params = flat
        .constructor_of(&name)
        .map(|c| c.params.as_slice())
        .unwrap_or_default();
    if params.len() != args.len() {
        return Err(LedgerError::Arity {
            function: name,
            expected: params.len(),
            got: args.len(),
        }
        .into());
    }
    params
        .iter()
        .zip(args)
        .map(|(p, a)| {
            Value::from_json(a, &p.ty).map_err(|message| {
                LedgerError::Argument {
                    function: name.clone(),
                    param: p.name.clone(),
                    message,
                }
                .into()
            })
        })
        .collect()
}

/// Loads the chain, deploys, and persists both the chain and the record.
pub fn deploy_contract_service(
    store: &Store,
    chain_id: u64,
    unit: &SourceUnit,
    contract: Option<&str>,
    sender: Address,
    args: Vec<Value>,
) -> Result<ContractRecord, DeployError> {
    let mut chain = load_chain(store, chain_id)?;
    let record = deploy_contract_on(store, &mut chain, unit, contract, sender, args)?;
    save_chain(store, &chain)?;
    Ok(record)
}

pub fn contract_records(store: &Store, chain_id: Option<u64>) -> Result<Vec<ContractRecord>, DeployError> {
    let mut out = Vec::new();
    for key in store.list(Collection::Contracts)? {
        if let Some(id) = chain_id {
            if !key.starts_with(&format!("{id}/")) {
                continue;
            }
        }
        if let Some(r) = store.get_as::<ContractRecord>(Collection::Contracts, &key)? {
            out.push(r);
        }
    }
    Ok(out)
}

/// Most recent deployment of a contract with this name.
pub fn find_contract(store: &Store, chain_id: Option<u64>, name: &str) -> Result<Option<ContractRecord>, DeployError> {
    Ok(contract_records(store, chain_id)?
        .into_iter()
        .filter(|r| r.name == name)
        .max_by_key(|r| (r.chain_id, r.height)))
}

/// Block height and contract count: the monitored status of a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainStatus {
    pub chain_id: u64,
    pub chain_type: ChainType,
    pub height: u64,
    pub contracts: usize,
    pub head: String,
}

pub fn chain_status(chain: &SimChain) -> ChainStatus {
    ChainStatus {
        chain_id: chain.chain_id(),
        chain_type: chain.genesis().chain_type,
        height: chain.height(),
        contracts: chain.contracts().len(),
        head: chain.head().digest.to_string(),
    }
}
