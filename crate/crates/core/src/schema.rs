//! Compiles a user data model into an on-chain registry contract, an
//! off-chain table and, when files are attached, an on-chain file registry.
//!
//! Records are keyed by a caller-supplied `record_id` shared by all three.
//! On-chain copies are authoritative: reads report divergence between the
//! copies but never repair it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::contract::{is_reserved_word, ContractDef, ElementaryType, Expr, ReturnParam, SourceUnit, Span, TypeName};
use crate::crypto::{decrypt, encrypt, hash_content, CryptoError, Digest, FileHashSource, KeyPair};
use crate::deploy::{deploy_contract_on, DeployError};
use crate::ledger::{LedgerError, SimChain, TxStatus, Value};
use crate::store::{Collection, Store, StoreError};
use crate::types::{Address, Bytes32};
use crate::weaver::build;

/// Primary key column of every table.
pub const RECORD_ID: &str = "record_id";

/// Identifiers the generated registry uses besides attribute names.
const TEMPLATE_NAMES: &[&str] = &[
    "setRecord",
    "getRecord",
    "hasRecord",
    "recordExists",
    "recordId",
    "msg",
    "sha256",
    "length",
    "push",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    String,
    /// Unsigned integer, held on-chain as `uint`.
    Integer,
    Boolean,
    Bytes32,
}

impl AttrType {
    fn elementary(self) -> ElementaryType {
        match self {
            AttrType::String => ElementaryType::String,
            AttrType::Integer => ElementaryType::Uint,
            AttrType::Boolean => ElementaryType::Bool,
            AttrType::Bytes32 => ElementaryType::Bytes32,
        }
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrType::String => "string",
            AttrType::Integer => "integer",
            AttrType::Boolean => "boolean",
            AttrType::Bytes32 => "bytes32",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    OnChain,
    OffChain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: AttrType,
    pub placement: Placement,
    #[serde(default)]
    pub encrypted: bool,
}

impl AttributeDef {
    pub fn on_chain(&self) -> bool {
        self.placement == Placement::OnChain
    }

    /// Type of the registry mapping value; ciphertext is held as hex text.
    fn stored_type(&self) -> ElementaryType {
        if self.encrypted {
            ElementaryType::String
        } else {
            self.value_type.elementary()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSchema {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
    #[serde(default)]
    pub has_files: bool,
}

impl DataSchema {
    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn on_chain(&self) -> impl Iterator<Item = &AttributeDef> {
        self.attributes.iter().filter(|a| a.on_chain())
    }

    pub fn file_registry_name(&self) -> String {
        format!("{}FileRegistry", self.name)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        if !is_identifier(&self.name) || is_reserved_word(&self.name) {
            return Err(SchemaError::InvalidName(self.name.clone()));
        }
        let mut seen = BTreeSet::new();
        for a in &self.attributes {
            if !is_identifier(&a.name) || is_reserved_word(&a.name) {
                return Err(SchemaError::InvalidName(a.name.clone()));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(SchemaError::DuplicateAttribute(a.name.clone()));
            }
            if a.encrypted && !a.on_chain() {
                return Err(SchemaError::EncryptedOffChain(a.name.clone()));
            }
        }
        if self.on_chain().next().is_none() {
            return Err(SchemaError::NoOnChainAttribute);
        }
        let mut taken: BTreeSet<String> = TEMPLATE_NAMES.iter().map(|s| s.to_string()).collect();
        taken.insert(self.name.clone());
        taken.insert(RECORD_ID.to_string());
        taken.extend(self.on_chain().map(|a| setter_param(&a.name)));
        for a in &self.attributes {
            if taken.contains(&a.name) {
                return Err(SchemaError::ReservedCollision(a.name.clone()));
            }
        }
        Ok(())
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && s != "_"
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn setter_param(attribute: &str) -> String {
    let mut chars = attribute.chars();
    let first = chars.next().map(|c| c.to_ascii_uppercase()).unwrap_or_default();
    format!("new{first}{}", chars.as_str())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: AttrType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDescriptor {
    pub table: String,
    pub primary_key: String,
    pub columns: Vec<Column>,
}

#[derive(Debug, Clone)]
pub struct CompiledSchema {
    pub registry: SourceUnit,
    pub table: TableDescriptor,
    pub file_registry: Option<SourceUnit>,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("`{0}` is not a usable identifier")]
    InvalidName(String),
    #[error("attribute `{0}` is declared more than once")]
    DuplicateAttribute(String),
    #[error("attribute `{0}` is encrypted but stored off-chain; only on-chain attributes can be encrypted")]
    EncryptedOffChain(String),
    #[error("the schema has no on-chain attribute")]
    NoOnChainAttribute,
    #[error("attribute `{0}` collides with an identifier of the generated registry")]
    ReservedCollision(String),
    #[error("schema `{0}` is already deployed")]
    SchemaExists(String),
    #[error("unknown schema `{0}`")]
    UnknownSchema(String),
    #[error("schema `{schema}` lives on chain {expected}, not chain {got}")]
    ChainMismatch { schema: String, expected: u64, got: u64 },
    #[error("record belongs to schema `{got}`, not `{expected}`")]
    WrongSchema { expected: String, got: String },
    #[error("record id must not be empty")]
    EmptyRecordId,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("missing value for attribute `{0}`")]
    MissingAttribute(String),
    #[error("attribute `{attribute}` expects {expected}, got {got}")]
    TypeMismatch {
        attribute: String,
        expected: AttrType,
        got: Json,
    },
    #[error("attribute `{0}` is encrypted and no key was supplied")]
    MissingKey(String),
    #[error("cannot decrypt attribute `{attribute}`: {source}")]
    Decryption {
        attribute: String,
        #[source]
        source: CryptoError,
    },
    #[error("unknown record `{0}`")]
    UnknownRecord(String),
    #[error("schema `{0}` has no file registry")]
    NoFileRegistry(String),
    #[error("ledger rejected `{function}` ({status}): {reason}")]
    Rejected {
        function: String,
        status: TxStatus,
        reason: String,
    },
    #[error("off-chain data for `{0}` is malformed")]
    Malformed(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Deploy(#[from] DeployError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub fn compile_schema(schema: &DataSchema) -> Result<CompiledSchema, SchemaError> {
    schema.validate()?;
    let table = TableDescriptor {
        table: schema.name.clone(),
        primary_key: RECORD_ID.to_string(),
        columns: schema
            .attributes
            .iter()
            .map(|a| Column {
                name: a.name.clone(),
                value_type: a.value_type,
            })
            .collect(),
    };
    let file_registry = schema.has_files.then(|| SourceUnit {
        contracts: vec![file_registry_contract(&schema.file_registry_name())],
    });
    Ok(CompiledSchema {
        registry: SourceUnit {
            contracts: vec![registry_contract(schema)],
        },
        table,
        file_registry,
    })
}

fn mapping(value: TypeName) -> TypeName {
    TypeName::Mapping {
        key: ElementaryType::String,
        value: Box::new(value),
    }
}

fn returns(types: impl IntoIterator<Item = TypeName>) -> Vec<ReturnParam> {
    types
        .into_iter()
        .map(|ty| ReturnParam {
            ty,
            name: None,
            span: Span::default(),
        })
        .collect()
}

fn at_record(name: &str) -> Expr {
    build::index(build::ident(name), build::ident("recordId"))
}

fn registry_contract(schema: &DataSchema) -> ContractDef {
    let on_chain: Vec<&AttributeDef> = schema.on_chain().collect();
    let mut c = ContractDef::new(schema.name.clone());
    c.state_vars
        .push(build::var(mapping(TypeName::bool()), "recordExists", None));
    for a in &on_chain {
        c.state_vars.push(build::var(
            mapping(TypeName::Elementary(a.stored_type())),
            &a.name,
            None,
        ));
    }

    let mut params = vec![build::param(TypeName::string(), "recordId")];
    let mut body = vec![build::assign(at_record("recordExists"), build::boolean(true))];
    for a in &on_chain {
        let p = setter_param(&a.name);
        params.push(build::param(TypeName::Elementary(a.stored_type()), &p));
        body.push(build::assign(at_record(&a.name), build::ident(&p)));
    }
    c.functions.push(build::function("setRecord", params, body));

    let mut get = build::function(
        "getRecord",
        vec![build::param(TypeName::string(), "recordId")],
        vec![build::ret(on_chain.iter().map(|a| at_record(&a.name)).collect())],
    );
    get.is_constant = true;
    get.returns = returns(on_chain.iter().map(|a| TypeName::Elementary(a.stored_type())));
    c.functions.push(get);

    let mut has = build::function(
        "hasRecord",
        vec![build::param(TypeName::string(), "recordId")],
        vec![build::ret(vec![at_record("recordExists")])],
    );
    has.is_constant = true;
    has.returns = returns([TypeName::bool()]);
    c.functions.push(has);
    c
}

fn file_registry_contract(name: &str) -> ContractDef {
    let mut c = ContractDef::new(name);
    c.state_vars.push(build::var(
        mapping(TypeName::Array(ElementaryType::Bytes32)),
        "fileHashes",
        None,
    ));
    c.functions.push(build::function(
        "registerFile",
        vec![
            build::param(TypeName::string(), "recordId"),
            build::param(TypeName::bytes32(), "fileHash"),
        ],
        vec![build::push(at_record("fileHashes"), build::ident("fileHash"))],
    ));
    let mut count = build::function(
        "fileCount",
        vec![build::param(TypeName::string(), "recordId")],
        vec![build::ret(vec![build::member(at_record("fileHashes"), "length")])],
    );
    count.is_constant = true;
    count.returns = returns([TypeName::uint()]);
    c.functions.push(count);
    let mut at = build::function(
        "fileHashAt",
        vec![
            build::param(TypeName::string(), "recordId"),
            build::param(TypeName::uint(), "index"),
        ],
        vec![build::ret(vec![build::index(
            at_record("fileHashes"),
            build::ident("index"),
        )])],
    );
    at.is_constant = true;
    at.returns = returns([TypeName::bytes32()]);
    c.functions.push(at);
    c
}

/// Where a deployed schema lives; persisted in the schemas collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaLink {
    pub schema: DataSchema,
    pub table: TableDescriptor,
    pub chain_id: u64,
    pub registry: Address,
    pub file_registry: Option<Address>,
    /// Keep ciphertext rather than plaintext in the off-chain copy of
    /// encrypted attributes.
    #[serde(default)]
    pub offchain_ciphertext: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SchemaOptions {
    pub offchain_ciphertext: bool,
}

/// Compiles the schema, deploys its contracts onto `chain` and records the link.
pub fn deploy_schema(
    store: &Store,
    chain: &mut SimChain,
    sender: Address,
    schema: &DataSchema,
    options: SchemaOptions,
) -> Result<SchemaLink, SchemaError> {
    let compiled = compile_schema(schema)?;
    if store.get(Collection::Schemas, &schema.name)?.is_some() {
        return Err(SchemaError::SchemaExists(schema.name.clone()));
    }
    let registry = deploy_contract_on(store, chain, &compiled.registry, None, sender, vec![])?;
    let file_registry = match &compiled.file_registry {
        Some(unit) => Some(deploy_contract_on(store, chain, unit, None, sender, vec![])?.address),
        None => None,
    };
    let link = SchemaLink {
        schema: schema.clone(),
        table: compiled.table,
        chain_id: chain.chain_id(),
        registry: registry.address,
        file_registry,
        offchain_ciphertext: options.offchain_ciphertext,
    };
    store.put_as(Collection::Schemas, &schema.name, &link)?;
    Ok(link)
}

pub fn schema_link(store: &Store, name: &str) -> Result<SchemaLink, SchemaError> {
    store
        .get_as(Collection::Schemas, name)?
        .ok_or_else(|| SchemaError::UnknownSchema(name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordInstance {
    pub schema: String,
    pub record_id: String,
    pub values: BTreeMap<String, Json>,
    /// Hashes of attached files, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<Digest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WriteReceipt {
    pub record_id: String,
    pub height: u64,
    /// On-chain arguments as submitted, ciphertext included.
    pub on_chain: BTreeMap<String, Json>,
    pub files: Vec<FileReceipt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileReceipt {
    pub record_id: String,
    pub hash: Digest,
    pub size: usize,
    /// Position in the record's on-chain hash list.
    pub index: u64,
    pub height: u64,
    /// Set for zero-length files, which are registered but suspicious.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub attribute: String,
    pub on_chain: Json,
    pub off_chain: Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReadReport {
    pub record: RecordInstance,
    /// Attributes returned as ciphertext because no key was supplied.
    pub encrypted: Vec<String>,
    pub divergences: Vec<Divergence>,
    /// Attributes whose copies could not be compared without a key.
    pub unverified: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Row {
    record_id: String,
    values: BTreeMap<String, Json>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct StoredFile {
    size: usize,
    data: String,
}

/// The registry, table and file registry of one deployed schema. Holding the
/// chain mutably keeps writes to a schema single-writer.
pub struct SchemaStores<'a> {
    pub store: &'a Store,
    pub chain: &'a mut SimChain,
    pub link: SchemaLink,
    pub sender: Address,
}

impl<'a> SchemaStores<'a> {
    pub fn open(store: &'a Store, chain: &'a mut SimChain, schema: &str, sender: Address) -> Result<Self, SchemaError> {
        let link = schema_link(store, schema)?;
        if link.chain_id != chain.chain_id() {
            return Err(SchemaError::ChainMismatch {
                schema: schema.to_string(),
                expected: link.chain_id,
                got: chain.chain_id(),
            });
        }
        chain.add_account(sender);
        Ok(SchemaStores {
            store,
            chain,
            link,
            sender,
        })
    }

    fn schema(&self) -> &DataSchema {
        &self.link.schema
    }

    fn row_key(&self, record_id: &str) -> String {
        format!("{}/{}", self.schema().name, record_id)
    }

    fn file_key(&self, record_id: &str, hash: &Digest) -> String {
        format!("{}/{}/{}", self.schema().name, record_id, hash)
    }

    /// Validates and normalizes a record's values against the schema.
    fn typed_values(&self, rec: &RecordInstance) -> Result<BTreeMap<String, Value>, SchemaError> {
        if rec.schema != self.schema().name {
            return Err(SchemaError::WrongSchema {
                expected: self.schema().name.clone(),
                got: rec.schema.clone(),
            });
        }
        if rec.record_id.is_empty() {
            return Err(SchemaError::EmptyRecordId);
        }
        if let Some(unknown) = rec.values.keys().find(|k| self.schema().attribute(k).is_none()) {
            return Err(SchemaError::UnknownAttribute(unknown.clone()));
        }
        self.schema()
            .attributes
            .iter()
            .map(|a| {
                let json = rec
                    .values
                    .get(&a.name)
                    .ok_or_else(|| SchemaError::MissingAttribute(a.name.clone()))?;
                let value = Value::from_json(json, &TypeName::Elementary(a.value_type.elementary())).map_err(|_| {
                    SchemaError::TypeMismatch {
                        attribute: a.name.clone(),
                        expected: a.value_type,
                        got: json.clone(),
                    }
                })?;
                Ok((a.name.clone(), value))
            })
            .collect()
    }

    /// Writes on-chain first, so a rejected transaction leaves no table row.
    pub fn write_record(
        &mut self,
        rec: &RecordInstance,
        keys: Option<&KeyPair>,
        files: &[Vec<u8>],
    ) -> Result<WriteReceipt, SchemaError> {
        let values = self.typed_values(rec)?;
        if !files.is_empty() && self.link.file_registry.is_none() {
            return Err(SchemaError::NoFileRegistry(self.schema().name.clone()));
        }
        let mut args = vec![Value::String(rec.record_id.clone())];
        let mut on_chain = BTreeMap::new();
        let mut row = BTreeMap::new();
        for a in &self.schema().attributes {
            let value = &values[&a.name];
            let mut offchain = value.to_json();
            if a.on_chain() {
                let arg = if a.encrypted {
                    let key = keys.ok_or_else(|| SchemaError::MissingKey(a.name.clone()))?;
                    let ct = hex::encode(encrypt(plain_text(value).as_bytes(), &key.encryption_key)?);
                    if self.link.offchain_ciphertext {
                        offchain = Json::from(ct.clone());
                    }
                    Value::String(ct)
                } else {
                    value.clone()
                };
                on_chain.insert(a.name.clone(), arg.to_json());
                args.push(arg);
            }
            row.insert(a.name.clone(), offchain);
        }
        let registry = self.link.registry;
        let height = self.submit(registry, "setRecord", args)?;
        self.store.put_as(
            Collection::Rows,
            &self.row_key(&rec.record_id),
            &Row {
                record_id: rec.record_id.clone(),
                values: row,
            },
        )?;
        let files = files
            .iter()
            .map(|f| self.attach_file(&rec.record_id, f))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WriteReceipt {
            record_id: rec.record_id.clone(),
            height,
            on_chain,
            files,
        })
    }

    fn submit(&mut self, target: Address, function: &str, args: Vec<Value>) -> Result<u64, SchemaError> {
        let result = self.chain.call(self.sender, target, function, args)?;
        if result.status != TxStatus::Applied {
            return Err(SchemaError::Rejected {
                function: function.to_string(),
                status: result.status,
                reason: result.error.unwrap_or_default(),
            });
        }
        Ok(result.height.expect("calls are recorded"))
    }

    fn query(&self, target: Address, function: &str, args: Vec<Value>) -> Result<Vec<Value>, SchemaError> {
        let result = self.chain.query(self.sender, target, function, args)?;
        if result.status != TxStatus::Applied {
            return Err(SchemaError::Rejected {
                function: function.to_string(),
                status: result.status,
                reason: result.error.unwrap_or_default(),
            });
        }
        Ok(result.returns)
    }

    fn on_chain_exists(&self, record_id: &str) -> Result<bool, SchemaError> {
        let r = self.query(
            self.link.registry,
            "hasRecord",
            vec![Value::String(record_id.to_string())],
        )?;
        Ok(r.first().and_then(Value::as_bool).unwrap_or(false))
    }

    fn row(&self, record_id: &str) -> Result<Option<Row>, SchemaError> {
        self.store
            .get(Collection::Rows, &self.row_key(record_id))?
            .map(|j| serde_json::from_value(j).map_err(|_| SchemaError::Malformed(record_id.to_string())))
            .transpose()
    }

    /// Merged view of a record. On-chain values win; differing off-chain
    /// copies are reported as divergences.
    pub fn read_record(&self, record_id: &str, keys: Option<&KeyPair>) -> Result<ReadReport, SchemaError> {
        let row = self.row(record_id)?;
        let exists = self.on_chain_exists(record_id)?;
        if row.is_none() && !exists {
            return Err(SchemaError::UnknownRecord(record_id.to_string()));
        }
        let on_chain: Vec<&AttributeDef> = self.schema().on_chain().collect();
        let chain_values = if exists {
            self.query(
                self.link.registry,
                "getRecord",
                vec![Value::String(record_id.to_string())],
            )?
        } else {
            Vec::new()
        };
        let offchain = row.map(|r| r.values).unwrap_or_default();

        let mut values = BTreeMap::new();
        let mut encrypted = Vec::new();
        let mut divergences = Vec::new();
        let mut unverified = Vec::new();
        for a in &self.schema().attributes {
            let off = offchain.get(&a.name).cloned();
            if !a.on_chain() {
                if let Some(v) = off {
                    values.insert(a.name.clone(), v);
                }
                continue;
            }
            let Some(stored) = on_chain
                .iter()
                .position(|x| x.name == a.name)
                .and_then(|i| chain_values.get(i))
            else {
                // Only in the table: nothing authoritative to compare with.
                divergences.push(Divergence {
                    attribute: a.name.clone(),
                    on_chain: Json::Null,
                    off_chain: off.clone().unwrap_or(Json::Null),
                });
                if let Some(v) = off {
                    values.insert(a.name.clone(), v);
                }
                continue;
            };
            let (value, reference) = if a.encrypted {
                let ct = stored.as_str().unwrap_or_default();
                let plain = keys.map(|k| decrypt_attribute(a, ct, k)).transpose()?;
                if plain.is_none() {
                    encrypted.push(a.name.clone());
                }
                let reference = if self.link.offchain_ciphertext {
                    Some(Json::from(ct))
                } else {
                    plain.clone()
                };
                (plain.unwrap_or_else(|| Json::from(ct)), reference)
            } else {
                let v = stored.to_json();
                (v.clone(), Some(v))
            };
            match reference {
                Some(reference) if off.as_ref() != Some(&reference) => divergences.push(Divergence {
                    attribute: a.name.clone(),
                    on_chain: reference,
                    off_chain: off.unwrap_or(Json::Null),
                }),
                Some(_) => {}
                None => unverified.push(a.name.clone()),
            }
            values.insert(a.name.clone(), value);
        }
        Ok(ReadReport {
            record: RecordInstance {
                schema: self.schema().name.clone(),
                record_id: record_id.to_string(),
                values,
                files: self.file_hashes(record_id)?,
            },
            encrypted,
            divergences,
            unverified,
        })
    }

    /// Stores the file off-chain and appends its SHA-256 hash on-chain.
    pub fn register_file(&mut self, record_id: &str, bytes: &[u8]) -> Result<FileReceipt, SchemaError> {
        if self.link.file_registry.is_none() {
            return Err(SchemaError::NoFileRegistry(self.schema().name.clone()));
        }
        if self.row(record_id)?.is_none() && !self.on_chain_exists(record_id)? {
            return Err(SchemaError::UnknownRecord(record_id.to_string()));
        }
        self.attach_file(record_id, bytes)
    }

    fn attach_file(&mut self, record_id: &str, bytes: &[u8]) -> Result<FileReceipt, SchemaError> {
        let registry = self
            .link
            .file_registry
            .ok_or_else(|| SchemaError::NoFileRegistry(self.schema().name.clone()))?;
        let hash = hash_content(bytes);
        self.store.put_as(
            Collection::Files,
            &self.file_key(record_id, &hash),
            &StoredFile {
                size: bytes.len(),
                data: base64::engine::general_purpose::STANDARD.encode(bytes),
            },
        )?;
        let index = self.file_count(record_id)?;
        let height = self.submit(
            registry,
            "registerFile",
            vec![Value::String(record_id.to_string()), Value::Bytes32(hash)],
        )?;
        Ok(FileReceipt {
            record_id: record_id.to_string(),
            hash,
            size: bytes.len(),
            index,
            height,
            empty: bytes.is_empty(),
        })
    }

    fn file_count(&self, record_id: &str) -> Result<u64, SchemaError> {
        let Some(registry) = self.link.file_registry else {
            return Ok(0);
        };
        let r = self.query(registry, "fileCount", vec![Value::String(record_id.to_string())])?;
        Ok(r.first().and_then(Value::as_uint).unwrap_or(0) as u64)
    }

    /// On-chain file hashes of a record, oldest first.
    pub fn file_hashes(&self, record_id: &str) -> Result<Vec<Digest>, SchemaError> {
        let Some(registry) = self.link.file_registry else {
            return Ok(Vec::new());
        };
        (0..self.file_count(record_id)?)
            .map(|i| {
                let r = self.query(
                    registry,
                    "fileHashAt",
                    vec![Value::String(record_id.to_string()), Value::Uint(i as u128)],
                )?;
                r.first()
                    .and_then(Value::as_bytes32)
                    .ok_or_else(|| SchemaError::Malformed(record_id.to_string()))
            })
            .collect()
    }

    /// The off-chain copy of a registered file.
    pub fn file(&self, record_id: &str, hash: &Digest) -> Result<Option<Vec<u8>>, SchemaError> {
        let Some(stored) = self
            .store
            .get_as::<StoredFile>(Collection::Files, &self.file_key(record_id, hash))?
        else {
            return Ok(None);
        };
        base64::engine::general_purpose::STANDARD
            .decode(stored.data)
            .map(Some)
            .map_err(|_| SchemaError::Malformed(record_id.to_string()))
    }
}

impl FileHashSource for SchemaStores<'_> {
    type Error = SchemaError;

    fn registered_hashes(&self, record_id: &str) -> Result<Vec<Digest>, SchemaError> {
        self.file_hashes(record_id)
    }
}

/// Text form of a value as encrypted on-chain.
fn plain_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Uint(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Bytes32(b) => b.to_string(),
        other => other.to_json().to_string(),
    }
}

fn decrypt_attribute(a: &AttributeDef, ciphertext_hex: &str, keys: &KeyPair) -> Result<Json, SchemaError> {
    let failed = |source| SchemaError::Decryption {
        attribute: a.name.clone(),
        source,
    };
    let bytes = hex::decode(ciphertext_hex).map_err(|_| failed(CryptoError::Truncated(0)))?;
    let plain = decrypt(&bytes, &keys.decryption_key).map_err(failed)?;
    let text = String::from_utf8(plain).map_err(|_| failed(CryptoError::Authentication))?;
    let value = match a.value_type {
        AttrType::String => Some(Value::String(text)),
        AttrType::Integer => text.parse().ok().map(Value::Uint),
        AttrType::Boolean => text.parse().ok().map(Value::Bool),
        AttrType::Bytes32 => text.parse::<Bytes32>().ok().map(Value::Bytes32),
    };
    value
        .map(|v| v.to_json())
        .ok_or_else(|| failed(CryptoError::Authentication))
}
