//! A deterministic, single-writer simulated blockchain.
//!
//! Every accepted transaction lands in its own block. Contracts are
//! interpreted at the syntax-tree level; there is no gas, so loops are
//! bounded by [`LOOP_ITERATION_CAP`] instead.

mod flatten;
mod interp;
mod value;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use flatten::{flatten, FlatContract, FlattenError};
pub use interp::{Fault, LOOP_ITERATION_CAP};
pub use value::{MapKey, Value};

use crate::contract::{self, FunctionDef, ParseError, SourceUnit};
use crate::genesis::GenesisConfig;
use crate::types::{Address, Bytes32};
use interp::Machine;

/// Contract state: state-variable name to value.
pub type Storage = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("unknown sender account {0}")]
    UnknownSender(Address),
    #[error("no contract deployed at {0}")]
    UnknownContract(Address),
    #[error("source unit contains no contract")]
    EmptyUnit,
    #[error("contract `{contract}` has no function `{function}`")]
    UnknownFunction { contract: String, function: String },
    #[error("function `{0}` is internal and cannot be called from outside")]
    InternalFunction(String),
    #[error("`{function}` expects {expected} argument(s), got {got}")]
    Arity {
        function: String,
        expected: usize,
        got: usize,
    },
    #[error("argument `{param}` of `{function}`: {message}")]
    Argument {
        function: String,
        param: String,
        message: String,
    },
    #[error(transparent)]
    Flatten(#[from] FlattenError),
    #[error("source does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error("constructor of `{contract}` failed: {fault}")]
    Constructor { contract: String, fault: Fault },
    #[error("address {0} is already in use")]
    AddressInUse(Address),
    #[error("chain integrity violated at height {height}: {reason}")]
    Integrity { height: u64, reason: String },
    #[error("malformed chain export: {0}")]
    Import(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxStatus {
    /// The function body ran and its state changes were kept.
    Applied,
    /// A modifier finished without reaching its placeholder; no state change.
    Skipped,
    /// Execution faulted; all state changes were discarded.
    Rejected,
}

impl std::fmt::Display for TxStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TxStatus::Applied => "applied",
            TxStatus::Skipped => "skipped",
            TxStatus::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Deploy {
        contract: String,
        source: String,
        args: Vec<Value>,
    },
    Call {
        target: Address,
        function: String,
        args: Vec<Value>,
    },
}

/// One state variable whose value changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub variable: String,
    pub before: Option<Value>,
    pub after: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Outcome {
    pub created: Option<Address>,
    pub returns: Vec<Value>,
    pub delta: Vec<StateChange>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tx {
    pub sender: Address,
    pub payload: Payload,
    pub status: TxStatus,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub parent: Bytes32,
    pub txs: Vec<Tx>,
    pub digest: Bytes32,
}

impl Block {
    fn new(height: u64, parent: Bytes32, txs: Vec<Tx>) -> Block {
        let digest = Block::compute_digest(height, &parent, &txs);
        Block {
            height,
            parent,
            txs,
            digest,
        }
    }

    pub fn compute_digest(height: u64, parent: &Bytes32, txs: &[Tx]) -> Bytes32 {
        let mut h = Sha256::new();
        h.update(height.to_be_bytes());
        h.update(parent.as_bytes());
        h.update(serde_json::to_vec(txs).expect("transactions serialize"));
        Bytes32(h.finalize().into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeployedContract {
    pub name: String,
    /// Rendered source of the whole unit the contract was deployed from.
    pub source: String,
    pub flat: FlatContract,
    pub storage: Storage,
}

/// What a call or query produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallResult {
    pub status: TxStatus,
    pub returns: Vec<Value>,
    pub delta: Vec<StateChange>,
    pub error: Option<String>,
    /// Height of the block holding the transaction; `None` for queries.
    pub height: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deployment {
    pub address: Address,
    pub height: u64,
}

#[derive(Debug, Clone)]
pub struct SimChain {
    chain_id: u64,
    genesis: GenesisConfig,
    blocks: Vec<Block>,
    contracts: BTreeMap<Address, DeployedContract>,
    accounts: BTreeMap<Address, u64>,
}

#[derive(Serialize, Deserialize)]
struct ContractExport {
    name: String,
    source: String,
    storage: Storage,
}

#[derive(Serialize, Deserialize)]
struct ChainExport {
    chain_id: u64,
    genesis: GenesisConfig,
    accounts: BTreeMap<Address, u64>,
    contracts: BTreeMap<Address, ContractExport>,
    blocks: Vec<Block>,
}

impl SimChain {
    pub fn new(genesis: GenesisConfig) -> SimChain {
        let block0 = Block::new(0, genesis.digest(), Vec::new());
        SimChain {
            chain_id: genesis.chain_id,
            genesis,
            blocks: vec![block0],
            contracts: BTreeMap::new(),
            accounts: BTreeMap::new(),
        }
    }

    pub fn chain_id(&self) -> u64 {
        self.chain_id
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("genesis block exists")
    }

    pub fn contracts(&self) -> &BTreeMap<Address, DeployedContract> {
        &self.contracts
    }

    pub fn contract(&self, address: &Address) -> Option<&DeployedContract> {
        self.contracts.get(address)
    }

    pub fn storage(&self, address: &Address) -> Option<&Storage> {
        self.contracts.get(address).map(|c| &c.storage)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&Address, &u64)> {
        self.accounts.iter()
    }

    pub fn add_account(&mut self, address: Address) {
        self.accounts.entry(address).or_insert(0);
    }

    /// Registers the account derived from a human-readable label.
    pub fn create_account(&mut self, label: &str) -> Address {
        let address = Address::from_label(label);
        self.add_account(address);
        address
    }

    pub fn nonce(&self, address: &Address) -> Option<u64> {
        self.accounts.get(address).copied()
    }

    /// Address the next deployment from `sender` will receive.
    pub fn next_address(&self, sender: &Address) -> Option<Address> {
        self.nonce(sender).map(|n| contract_address(sender, n))
    }

    /// Deploys `contract` (by default the last contract of the unit).
    pub fn deploy(
        &mut self,
        sender: Address,
        unit: &SourceUnit,
        contract: Option<&str>,
        args: Vec<Value>,
    ) -> Result<Deployment, LedgerError> {
        let nonce = self.nonce(&sender).ok_or(LedgerError::UnknownSender(sender))?;
        let name = match contract {
            Some(n) => n.to_string(),
            None => unit.contracts.last().ok_or(LedgerError::EmptyUnit)?.name.clone(),
        };
        let flat = flatten(unit, &name)?;
        if let Some(ctor) = flat.constructor_of(&name) {
            check_args(&name, &ctor.params, &args)?;
        } else if !args.is_empty() {
            return Err(LedgerError::Arity {
                function: name,
                expected: 0,
                got: args.len(),
            });
        }
        let address = contract_address(&sender, nonce);
        if self.contracts.contains_key(&address) {
            return Err(LedgerError::AddressInUse(address));
        }

        let mut machine = Machine::new(&flat, Storage::new(), sender);
        machine
            .construct(args.clone())
            .map_err(|fault| LedgerError::Constructor {
                contract: name.clone(),
                fault,
            })?;
        let storage = machine.storage;
        let delta = diff(&Storage::new(), &storage);
        let source = contract::render(unit);

        let tx = Tx {
            sender,
            payload: Payload::Deploy {
                contract: name.clone(),
                source: source.clone(),
                args,
            },
            status: TxStatus::Applied,
            outcome: Outcome {
                created: Some(address),
                delta,
                ..Outcome::default()
            },
        };
        self.contracts.insert(
            address,
            DeployedContract {
                name,
                source,
                flat,
                storage,
            },
        );
        let height = self.append(tx);
        Ok(Deployment { address, height })
    }

    /// Submits a call transaction. Pre-execution errors (unknown target,
    /// bad arguments) return `Err` and append nothing; runtime outcomes are
    /// recorded in a new block whatever their status.
    pub fn call(
        &mut self,
        sender: Address,
        target: Address,
        function: &str,
        args: Vec<Value>,
    ) -> Result<CallResult, LedgerError> {
        let mut result = self.execute(sender, target, function, args.clone())?;
        let (status, storage) = (result.0.status, result.1);
        if status == TxStatus::Applied {
            if let Some(storage) = storage {
                self.contracts.get_mut(&target).expect("target checked").storage = storage;
            }
        }
        let tx = Tx {
            sender,
            payload: Payload::Call {
                target,
                function: function.to_string(),
                args,
            },
            status,
            outcome: Outcome {
                created: None,
                returns: result.0.returns.clone(),
                delta: result.0.delta.clone(),
                error: result.0.error.clone(),
            },
        };
        result.0.height = Some(self.append(tx));
        Ok(result.0)
    }

    /// Runs a function without recording a transaction; state is untouched.
    pub fn query(
        &self,
        sender: Address,
        target: Address,
        function: &str,
        args: Vec<Value>,
    ) -> Result<CallResult, LedgerError> {
        self.execute(sender, target, function, args).map(|(r, _)| r)
    }

    /// Converts JSON arguments to values using the function's parameter types.
    pub fn parse_args(
        &self,
        target: &Address,
        function: &str,
        args: &[serde_json::Value],
    ) -> Result<Vec<Value>, LedgerError> {
        let contract = self
            .contracts
            .get(target)
            .ok_or(LedgerError::UnknownContract(*target))?;
        let f = lookup_function(contract, function)?;
        if f.params.len() != args.len() {
            return Err(LedgerError::Arity {
                function: function.to_string(),
                expected: f.params.len(),
                got: args.len(),
            });
        }
        f.params
            .iter()
            .zip(args)
            .map(|(p, a)| {
                Value::from_json(a, &p.ty).map_err(|message| LedgerError::Argument {
                    function: function.to_string(),
                    param: p.name.clone(),
                    message,
                })
            })
            .collect()
    }

    fn execute(
        &self,
        sender: Address,
        target: Address,
        function: &str,
        args: Vec<Value>,
    ) -> Result<(CallResult, Option<Storage>), LedgerError> {
        if !self.accounts.contains_key(&sender) {
            return Err(LedgerError::UnknownSender(sender));
        }
        let contract = self
            .contracts
            .get(&target)
            .ok_or(LedgerError::UnknownContract(target))?;
        let f = lookup_function(contract, function)?;
        if f.is_internal {
            return Err(LedgerError::InternalFunction(function.to_string()));
        }
        check_args(function, &f.params, &args)?;

        let before = &contract.storage;
        let mut machine = Machine::new(&contract.flat, before.clone(), sender);
        let run = machine.call_function(f, args);
        let after = machine.storage;
        let rejected = |error: String| CallResult {
            status: TxStatus::Rejected,
            returns: Vec::new(),
            delta: Vec::new(),
            error: Some(error),
            height: None,
        };
        Ok(match run {
            Err(fault) => (rejected(fault.to_string()), None),
            Ok(inv) if !inv.body_ran => (
                CallResult {
                    status: TxStatus::Skipped,
                    returns: Vec::new(),
                    delta: Vec::new(),
                    error: None,
                    height: None,
                },
                None,
            ),
            Ok(_) if f.is_constant && after != *before => (
                rejected(format!("constant function `{function}` attempted to modify state")),
                None,
            ),
            Ok(inv) => (
                CallResult {
                    status: TxStatus::Applied,
                    returns: inv.returns,
                    delta: diff(before, &after),
                    error: None,
                    height: None,
                },
                Some(after),
            ),
        })
    }

    fn append(&mut self, tx: Tx) -> u64 {
        *self.accounts.get_mut(&tx.sender).expect("sender checked") += 1;
        let height = self.height() + 1;
        let parent = self.head().digest;
        self.blocks.push(Block::new(height, parent, vec![tx]));
        height
    }

    /// Recomputes every digest and parent link.
    pub fn verify(&self) -> Result<(), LedgerError> {
        verify_blocks(&self.blocks, &self.genesis)
    }

    /// All transactions in block order.
    pub fn tx_log(&self) -> Vec<Tx> {
        self.blocks.iter().flat_map(|b| b.txs.iter().cloned()).collect()
    }

    /// Rebuilds a chain by resubmitting a transaction log.
    pub fn replay(genesis: GenesisConfig, log: &[Tx]) -> Result<SimChain, LedgerError> {
        let mut chain = SimChain::new(genesis);
        for tx in log {
            chain.add_account(tx.sender);
            match &tx.payload {
                Payload::Deploy { contract, source, args } => {
                    let unit = contract::parse(source)?;
                    chain.deploy(tx.sender, &unit, Some(contract), args.clone())?;
                }
                Payload::Call { target, function, args } => {
                    chain.call(tx.sender, *target, function, args.clone())?;
                }
            }
        }
        Ok(chain)
    }

    /// Canonical JSON document of the full chain state. Identical chains
    /// export byte-identical documents.
    pub fn export(&self) -> String {
        let doc = ChainExport {
            chain_id: self.chain_id,
            genesis: self.genesis.clone(),
            accounts: self.accounts.clone(),
            contracts: self
                .contracts
                .iter()
                .map(|(a, c)| {
                    (
                        *a,
                        ContractExport {
                            name: c.name.clone(),
                            source: c.source.clone(),
                            storage: c.storage.clone(),
                        },
                    )
                })
                .collect(),
            blocks: self.blocks.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("chain serializes");
        text.push('\n');
        text
    }

    pub fn import(text: &str) -> Result<SimChain, LedgerError> {
        let doc: ChainExport = serde_json::from_str(text).map_err(|e| LedgerError::Import(e.to_string()))?;
        if doc.genesis.chain_id != doc.chain_id {
            return Err(LedgerError::Import("chain id differs from genesis chain id".into()));
        }
        verify_blocks(&doc.blocks, &doc.genesis)?;
        let mut contracts = BTreeMap::new();
        for (address, c) in doc.contracts {
            let unit = contract::parse(&c.source)?;
            let flat = flatten(&unit, &c.name)?;
            contracts.insert(
                address,
                DeployedContract {
                    name: c.name,
                    source: c.source,
                    flat,
                    storage: c.storage,
                },
            );
        }
        Ok(SimChain {
            chain_id: doc.chain_id,
            genesis: doc.genesis,
            blocks: doc.blocks,
            contracts,
            accounts: doc.accounts,
        })
    }
}

/// First 20 bytes of SHA-256(sender ‖ nonce as big-endian u64).
pub fn contract_address(sender: &Address, nonce: u64) -> Address {
    let mut h = Sha256::new();
    h.update(sender.as_bytes());
    h.update(nonce.to_be_bytes());
    let digest = h.finalize();
    let mut out = [0u8; 20];
    out.copy_from_slice(&digest[..20]);
    Address(out)
}

fn lookup_function<'c>(contract: &'c DeployedContract, function: &str) -> Result<&'c FunctionDef, LedgerError> {
    contract
        .flat
        .def
        .function(function)
        .ok_or_else(|| LedgerError::UnknownFunction {
            contract: contract.name.clone(),
            function: function.to_string(),
        })
}

fn check_args(function: &str, params: &[contract::Param], args: &[Value]) -> Result<(), LedgerError> {
    if params.len() != args.len() {
        return Err(LedgerError::Arity {
            function: function.to_string(),
            expected: params.len(),
            got: args.len(),
        });
    }
    for (p, a) in params.iter().zip(args) {
        if !a.conforms_to(&p.ty) {
            return Err(LedgerError::Argument {
                function: function.to_string(),
                param: p.name.clone(),
                message: format!("expected {}, got {}", p.ty, a.type_name()),
            });
        }
    }
    Ok(())
}

fn diff(before: &Storage, after: &Storage) -> Vec<StateChange> {
    after
        .iter()
        .filter(|(k, v)| before.get(*k) != Some(*v))
        .map(|(k, v)| StateChange {
            variable: k.clone(),
            before: before.get(k).cloned(),
            after: v.clone(),
        })
        .collect()
}

fn verify_blocks(blocks: &[Block], genesis: &GenesisConfig) -> Result<(), LedgerError> {
    let fail = |height: u64, reason: &str| LedgerError::Integrity {
        height,
        reason: reason.to_string(),
    };
    if blocks.is_empty() {
        return Err(fail(0, "missing genesis block"));
    }
    for (i, b) in blocks.iter().enumerate() {
        let expected_height = i as u64;
        if b.height != expected_height {
            return Err(fail(expected_height, "height out of sequence"));
        }
        let parent = if i == 0 { genesis.digest() } else { blocks[i - 1].digest };
        if b.parent != parent {
            return Err(fail(b.height, "parent digest mismatch"));
        }
        if Block::compute_digest(b.height, &b.parent, &b.txs) != b.digest {
            return Err(fail(b.height, "block digest mismatch"));
        }
    }
    Ok(())
}
