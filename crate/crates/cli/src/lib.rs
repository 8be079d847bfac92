//! Command-line front end: every service is reachable as a subcommand.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 when an operation
//! fails; the failing module's error message is printed verbatim.

pub mod scenario;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use ubaas_core::contract::{ast_equal, parse, render, ParseError, SourceUnit};
use ubaas_core::crypto::{
    compare_file, decrypt, encrypt, generate_keypair, hash_content, CryptoError, DecryptionKey, EncryptionKey,
    FileVerdict, KeyPair,
};
use ubaas_core::deploy::{
    chain_status, constructor_args, contract_records, deploy_chain, deploy_contract_service, find_contract, load_chain,
    save_chain, DeployError, GenesisConfig, NodeInventory, ScriptTransport, SimulatedTransport, Transport,
};
use ubaas_core::ledger::LedgerError;
use ubaas_core::schema::{
    compile_schema, deploy_schema, schema_link, DataSchema, RecordInstance, SchemaError, SchemaOptions, SchemaStores,
};
use ubaas_core::store::{Collection, Store, StoreError};
use ubaas_core::types::{Address, Bytes32};
use ubaas_core::weaver::{weave, Pattern, PatternParams, WeaveError, WeaveRequest};

use scenario::{run_scenario_file, ScenarioError};

#[derive(Debug, Parser)]
#[command(
    name = "ubaas",
    version,
    about = "Blockchain application design and deployment toolkit",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Registry store directory.
    #[arg(long, global = true, env = "UBAAS_STORE")]
    pub store: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deploy a chain or a contract.
    #[command(subcommand)]
    Deploy(DeployCmd),
    /// Apply a design pattern to a contract source file.
    Weave(WeaveArgs),
    /// Compile or deploy a data schema.
    #[command(subcommand)]
    Schema(SchemaCmd),
    /// Write, read and attach files to schema records.
    #[command(subcommand)]
    Data(DataCmd),
    /// Manage encryption key pairs.
    #[command(subcommand)]
    Keys(KeysCmd),
    /// Encrypt a file for a public key.
    Encrypt(CryptArgs),
    /// Decrypt a file with a private key.
    Decrypt(CryptArgs),
    /// Print the SHA-256 digest of a file.
    Hash { file: PathBuf },
    /// Compare a file against the hashes registered for a record.
    VerifyFile {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        id: String,
        file: PathBuf,
    },
    /// Call, inspect or export a simulated chain.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Run scripted scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Debug, Subcommand)]
pub enum DeployCmd {
    /// Plan and execute a chain deployment.
    Chain {
        #[arg(long)]
        genesis: PathBuf,
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long, value_enum, default_value_t = TransportKind::Sim)]
        transport: TransportKind,
    },
    /// Deploy a contract onto a simulated chain.
    Contract {
        #[arg(long)]
        chain: u64,
        #[arg(long)]
        source: PathBuf,
        /// Contract to deploy; defaults to the last one in the file.
        #[arg(long)]
        contract: Option<String>,
        /// Sender: an address or an account label.
        #[arg(long, default_value = "owner")]
        from: String,
        /// Constructor arguments as a JSON array.
        #[arg(long, default_value = "[]")]
        args: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    Sim,
    Script,
}

#[derive(Debug, Args)]
pub struct WeaveArgs {
    #[arg(long, required_unless_present = "request")]
    pub pattern: Option<String>,
    #[arg(long, required_unless_present = "request")]
    pub contract: Option<String>,
    #[arg(long, required_unless_present = "request")]
    pub function: Option<String>,
    /// Authority (multiple-authorities) or authorized caller (embedded-permission).
    #[arg(long = "authority")]
    pub authorities: Vec<String>,
    #[arg(long)]
    pub threshold: Option<u64>,
    #[arg(long)]
    pub secret_hash: Option<String>,
    /// JSON weave request instead of the individual flags.
    #[arg(long, conflicts_with_all = ["pattern", "contract", "function"])]
    pub request: Option<PathBuf>,
    /// Write the woven source here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fail unless the result is structurally equal to this source.
    #[arg(long)]
    pub expect: Option<PathBuf>,
    pub source: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SchemaCmd {
    /// Generate the registry contracts and table descriptor.
    Compile {
        file: PathBuf,
        /// Write `<Name>.sol`, `<Name>FileRegistry.sol` and `<Name>.table.json` here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compile and deploy onto a simulated chain.
    Deploy {
        file: PathBuf,
        #[arg(long)]
        chain: u64,
        #[arg(long, default_value = "owner")]
        from: String,
        /// Keep ciphertext instead of plaintext in the off-chain copy of encrypted attributes.
        #[arg(long)]
        offchain_ciphertext: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum DataCmd {
    Write {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        id: String,
        /// Attribute values as a JSON object, or `@file`.
        #[arg(long)]
        values: String,
        /// Key id for encrypted attributes.
        #[arg(long)]
        key: Option<String>,
        #[arg(long = "attach")]
        attach: Vec<PathBuf>,
        #[arg(long, default_value = "owner")]
        from: String,
    },
    Read {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        id: String,
        #[arg(long)]
        key: Option<String>,
    },
    Attach {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        id: String,
        file: PathBuf,
        #[arg(long, default_value = "owner")]
        from: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum KeysCmd {
    Generate,
    /// Print a key pair; the private half only with `--private`.
    Export {
        #[arg(long)]
        id: String,
        #[arg(long)]
        private: bool,
    },
    /// Import a key pair JSON document.
    Import {
        file: PathBuf,
    },
    List,
}

#[derive(Debug, Args)]
pub struct CryptArgs {
    /// Hex public key (encrypt) or private key (decrypt).
    #[arg(long)]
    pub key: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write raw bytes here; otherwise ciphertext is printed as hex.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ChainCmd {
    Call {
        #[arg(long)]
        chain: u64,
        /// Contract address or name.
        #[arg(long)]
        contract: String,
        #[arg(long)]
        function: String,
        #[arg(long, default_value = "[]")]
        args: String,
        #[arg(long, default_value = "owner")]
        from: String,
        /// Evaluate without recording a transaction.
        #[arg(long)]
        query: bool,
    },
    Inspect {
        #[arg(long)]
        chain: u64,
        /// Show storage of this contract (address or name).
        #[arg(long)]
        contract: Option<String>,
    },
    Export {
        #[arg(long)]
        chain: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check block links and digests.
    Verify {
        #[arg(long)]
        chain: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCmd {
    Run { file: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Weave(#[from] WeaveError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Deploy(#[from] DeployError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

/// A command's result in both output formats.
pub struct Report {
    pub json: Json,
    pub text: String,
    pub code: i32,
}

impl Report {
    fn new(json: Json, text: impl Into<String>) -> Self {
        Report {
            json,
            text: text.into(),
            code: 0,
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                1
            } else {
                code
            };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let _ = match cli.format {
                Format::Json => writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&report.json).expect("json serializes")
                ),
                Format::Text => write!(out, "{}", with_newline(&report.text)),
            };
            report.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn with_newline(s: &str) -> String {
    if s.is_empty() || s.ends_with('\n') {
        s.to_string()
    } else {
        format!("{s}\n")
    }
}

fn to_json<T: Serialize>(v: &T) -> Json {
    serde_json::to_value(v).expect("value serializes")
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, data: &[u8]) -> Result<(), CliError> {
    fs::write(path, data).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// JSON given inline or as `@file`.
fn inline_json(text: &str) -> Result<Json, CliError> {
    let text = match text.strip_prefix('@') {
        Some(path) => read_text(Path::new(path))?,
        None => text.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("invalid JSON: {e}")))
}

fn json_array(text: &str) -> Result<Vec<Json>, CliError> {
    match inline_json(text)? {
        Json::Array(items) => Ok(items),
        other => Err(CliError::Invalid(format!("expected a JSON array, got {other}"))),
    }
}

/// An address literal, or the account derived from a label.
fn account(s: &str) -> Address {
    s.parse().unwrap_or_else(|_| Address::from_label(s))
}

fn parse_source(path: &Path) -> Result<SourceUnit, CliError> {
    Ok(parse(&read_text(path)?)?)
}

fn open_store(cli: &Cli) -> Result<Store, CliError> {
    let root = cli
        .store
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs a store: pass --store <dir> or set UBAAS_STORE".into()))?;
    Ok(Store::open(root)?)
}

fn load_keys(store: &Store, id: &str) -> Result<KeyPair, CliError> {
    store
        .get_as(Collection::Keys, id)?
        .ok_or_else(|| CliError::Invalid(format!("unknown key `{id}`")))
}

fn resolve_contract(store: &Store, chain: u64, contract: &str) -> Result<Address, CliError> {
    if let Ok(a) = contract.parse() {
        return Ok(a);
    }
    find_contract(store, Some(chain), contract)?
        .map(|r| r.address)
        .ok_or_else(|| CliError::Invalid(format!("no contract named `{contract}` on chain {chain}")))
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Deploy(cmd) => deploy(cli, cmd),
        Command::Weave(args) => weave_cmd(args),
        Command::Schema(cmd) => schema_cmd(cli, cmd),
        Command::Data(cmd) => data_cmd(cli, cmd),
        Command::Keys(cmd) => keys_cmd(cli, cmd),
        Command::Encrypt(args) => {
            let key = EncryptionKey::from_hex(&args.key).map_err(|_| CliError::Invalid("invalid public key".into()))?;
            let ct = encrypt(&read(&args.input)?, &key)?;
            output_bytes(args.out.as_deref(), &ct, hex::encode(&ct))
        }
        Command::Decrypt(args) => {
            let key =
                DecryptionKey::from_hex(&args.key).map_err(|_| CliError::Invalid("invalid private key".into()))?;
            let raw = read(&args.input)?;
            // Accept both raw ciphertext and the hex text `encrypt` prints.
            let ct = std::str::from_utf8(&raw)
                .ok()
                .and_then(|s| hex::decode(s.trim()).ok())
                .unwrap_or(raw);
            let plain = decrypt(&ct, &key)?;
            let text = String::from_utf8(plain.clone()).unwrap_or_else(|_| hex::encode(&plain));
            output_bytes(args.out.as_deref(), &plain, text)
        }
        Command::Hash { file } => {
            let digest = hex::encode(hash_content(&read(file)?).0);
            Ok(Report::new(
                json!({"file": file.display().to_string(), "sha256": digest}),
                format!("{digest}  {}", file.display()),
            ))
        }
        Command::VerifyFile { schema, id, file } => {
            let store = open_store(cli)?;
            let link = schema_link(&store, schema)?;
            let mut chain = load_chain(&store, link.chain_id)?;
            let stores = SchemaStores::open(&store, &mut chain, schema, account("owner"))?;
            let data = read(file)?;
            let verdict = compare_file(&data, id, &stores)?;
            let name = match verdict {
                FileVerdict::Authentic => "authentic",
                FileVerdict::Tampered => "tampered",
                FileVerdict::Unregistered => "unregistered",
            };
            let digest = hex::encode(hash_content(&data).0);
            let mut report = Report::new(
                json!({"schema": schema, "record_id": id, "sha256": digest, "verdict": name}),
                format!("{name}  {digest}"),
            );
            report.code = if verdict == FileVerdict::Authentic { 0 } else { 2 };
            Ok(report)
        }
        Command::Chain(cmd) => chain_cmd(cli, cmd),
        Command::Scenario(ScenarioCmd::Run { file }) => {
            let run = run_scenario_file(file)?;
            let mut text = String::new();
            for a in &run.report.actions {
                text.push_str(&format!(
                    "[{}] {:>3} {} {}: {}{}\n",
                    if a.passed { "pass" } else { "FAIL" },
                    a.index,
                    a.action,
                    a.label,
                    a.actual,
                    if a.detail.is_empty() {
                        String::new()
                    } else {
                        format!(" ({})", a.detail)
                    }
                ));
            }
            text.push_str(&format!(
                "scenario {}: {}\n",
                run.report.name,
                if run.report.passed { "passed" } else { "failed" }
            ));
            let mut report = Report::new(to_json(&run.report), text);
            report.code = if run.report.passed { 0 } else { 2 };
            Ok(report)
        }
    }
}

fn output_bytes(out: Option<&Path>, bytes: &[u8], text: String) -> Result<Report, CliError> {
    match out {
        Some(path) => {
            write_file(path, bytes)?;
            Ok(Report::new(
                json!({"out": path.display().to_string(), "bytes": bytes.len()}),
                format!("wrote {} bytes to {}", bytes.len(), path.display()),
            ))
        }
        None => Ok(Report::new(json!({"data": text}), text)),
    }
}

fn deploy(cli: &Cli, cmd: &DeployCmd) -> Result<Report, CliError> {
    let store = open_store(cli)?;
    match cmd {
        DeployCmd::Chain {
            genesis,
            inventory,
            transport,
        } => {
            let genesis: GenesisConfig = read_json(genesis)?;
            let inventory: NodeInventory = read_json(inventory)?;
            let sim = SimulatedTransport::new();
            let script = ScriptTransport::new();
            let t: &dyn Transport = match transport {
                TransportKind::Sim => &sim,
                TransportKind::Script => &script,
            };
            let record = deploy_chain(&store, &genesis, &inventory, t)?;
            let mut text = format!(
                "chain {} ({}) deployed: {} steps on {} nodes via {}\n",
                record.chain_id,
                genesis.chain_type,
                record.outcomes.len(),
                inventory.nodes.len(),
                record.transport
            );
            if *transport == TransportKind::Script {
                text.push_str(&script.script());
            }
            let mut doc = to_json(&record);
            if *transport == TransportKind::Script {
                doc["script"] = Json::from(script.script());
            }
            Ok(Report::new(doc, text))
        }
        DeployCmd::Contract {
            chain,
            source,
            contract,
            from,
            args,
        } => {
            let unit = parse_source(source)?;
            let args = constructor_args(&unit, contract.as_deref(), &json_array(args)?)?;
            let record = deploy_contract_service(&store, *chain, &unit, contract.as_deref(), account(from), args)?;
            let mut text = format!(
                "{} deployed at {} (block {})\n",
                record.name, record.address, record.height
            );
            for f in &record.abi.functions {
                let inputs: Vec<String> = f.inputs.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
                text.push_str(&format!(
                    "  {}({}){}{}\n",
                    f.name,
                    inputs.join(", "),
                    if f.constant { " constant" } else { "" },
                    if f.outputs.is_empty() {
                        String::new()
                    } else {
                        format!(" returns ({})", f.outputs.join(", "))
                    }
                ));
            }
            Ok(Report::new(to_json(&record), text))
        }
    }
}

fn weave_cmd(args: &WeaveArgs) -> Result<Report, CliError> {
    let unit = parse_source(&args.source)?;
    let request = match &args.request {
        Some(path) => read_json::<WeaveRequest>(path)?,
        None => {
            let pattern: Pattern = args.pattern.as_deref().unwrap_or_default().parse()?;
            let addresses = || args.authorities.iter().map(|a| account(a)).collect::<Vec<_>>();
            let params = match pattern {
                Pattern::MultipleAuthorities => PatternParams::MultipleAuthorities {
                    authorities: addresses(),
                    threshold: args
                        .threshold
                        .ok_or_else(|| CliError::Usage("multiple-authorities needs --threshold".into()))?,
                },
                Pattern::DynamicBinding => PatternParams::DynamicBinding {
                    secret_hash: args
                        .secret_hash
                        .as_deref()
                        .ok_or_else(|| CliError::Usage("dynamic-binding needs --secret-hash".into()))?
                        .parse::<Bytes32>()
                        .map_err(|_| CliError::Invalid("--secret-hash must be 32 bytes of hex".into()))?,
                },
                Pattern::EmbeddedPermission => PatternParams::EmbeddedPermission {
                    authorized: addresses(),
                },
            };
            WeaveRequest {
                contract: args.contract.clone().unwrap_or_default(),
                function: args.function.clone().unwrap_or_default(),
                params,
            }
        }
    };
    let result = weave(&unit, &request)?;
    let source = render(&result.unit);
    if let Some(golden) = &args.expect {
        if !ast_equal(&parse_source(golden)?, &result.unit) {
            return Err(CliError::Invalid(format!(
                "woven source is not structurally equal to {}",
                golden.display()
            )));
        }
    }
    let doc = json!({"source": source, "report": to_json(&result.report)});
    let text = match &args.out {
        Some(path) => {
            write_file(path, source.as_bytes())?;
            let mut t = format!(
                "{} woven into {}.{}; wrote {}\n",
                result.report.pattern,
                request.contract,
                request.function,
                path.display()
            );
            for w in &result.report.warnings {
                t.push_str(&format!("warning: {w}\n"));
            }
            t
        }
        None => source,
    };
    Ok(Report::new(doc, text))
}

fn schema_cmd(cli: &Cli, cmd: &SchemaCmd) -> Result<Report, CliError> {
    match cmd {
        SchemaCmd::Compile { file, out_dir } => {
            let schema: DataSchema = read_json(file)?;
            let compiled = compile_schema(&schema)?;
            let registry = render(&compiled.registry);
            let file_registry = compiled.file_registry.as_ref().map(render);
            let table = to_json(&compiled.table);
            let mut text = registry.clone();
            if let Some(f) = &file_registry {
                text.push('\n');
                text.push_str(f);
            }
            if let Some(dir) = out_dir {
                fs::create_dir_all(dir).map_err(|source| CliError::Io {
                    path: dir.clone(),
                    source,
                })?;
                write_file(&dir.join(format!("{}.sol", schema.name)), registry.as_bytes())?;
                if let Some(f) = &file_registry {
                    write_file(&dir.join(format!("{}.sol", schema.file_registry_name())), f.as_bytes())?;
                }
                let table_text = serde_json::to_string_pretty(&table).expect("json serializes") + "\n";
                write_file(&dir.join(format!("{}.table.json", schema.name)), table_text.as_bytes())?;
                text = format!("compiled {} into {}\n", schema.name, dir.display());
            }
            Ok(Report::new(
                json!({"registry": registry, "file_registry": file_registry, "table": table}),
                text,
            ))
        }
        SchemaCmd::Deploy {
            file,
            chain,
            from,
            offchain_ciphertext,
        } => {
            let store = open_store(cli)?;
            let schema: DataSchema = read_json(file)?;
            let mut sim = load_chain(&store, *chain)?;
            let options = SchemaOptions {
                offchain_ciphertext: *offchain_ciphertext,
            };
            let link = deploy_schema(&store, &mut sim, account(from), &schema, options)?;
            save_chain(&store, &sim)?;
            let mut text = format!(
                "schema {} deployed on chain {}: registry {}",
                schema.name, chain, link.registry
            );
            if let Some(f) = link.file_registry {
                text.push_str(&format!(", file registry {f}"));
            }
            Ok(Report::new(to_json(&link), text))
        }
    }
}

fn data_cmd(cli: &Cli, cmd: &DataCmd) -> Result<Report, CliError> {
    let store = open_store(cli)?;
    let (schema, from) = match cmd {
        DataCmd::Write { schema, from, .. } | DataCmd::Attach { schema, from, .. } => (schema, from.as_str()),
        DataCmd::Read { schema, .. } => (schema, "owner"),
    };
    let link = schema_link(&store, schema)?;
    let mut chain = load_chain(&store, link.chain_id)?;
    let report = {
        let mut stores = SchemaStores::open(&store, &mut chain, schema, account(from))?;
        match cmd {
            DataCmd::Write {
                id,
                values,
                key,
                attach,
                ..
            } => {
                let values = match inline_json(values)? {
                    Json::Object(map) => map.into_iter().collect(),
                    other => {
                        return Err(CliError::Invalid(format!(
                            "--values must be a JSON object, got {other}"
                        )))
                    }
                };
                let keys = key.as_deref().map(|k| load_keys(&store, k)).transpose()?;
                let files = attach.iter().map(|p| read(p)).collect::<Result<Vec<_>, _>>()?;
                let rec = RecordInstance {
                    schema: schema.clone(),
                    record_id: id.clone(),
                    values,
                    files: vec![],
                };
                let receipt = stores.write_record(&rec, keys.as_ref(), &files)?;
                let mut text = format!("record {id} written in block {}", receipt.height);
                for f in &receipt.files {
                    text.push_str(&format!(
                        "\nfile {} registered ({} bytes)",
                        hex::encode(f.hash.0),
                        f.size
                    ));
                    if f.empty {
                        text.push_str(" warning: empty file");
                    }
                }
                Report::new(to_json(&receipt), text)
            }
            DataCmd::Read { id, key, .. } => {
                let keys = key.as_deref().map(|k| load_keys(&store, k)).transpose()?;
                let report = stores.read_record(id, keys.as_ref())?;
                let mut text = format!("record {id}\n");
                for (k, v) in &report.record.values {
                    let mark = if report.encrypted.contains(k) {
                        " (encrypted)"
                    } else {
                        ""
                    };
                    text.push_str(&format!("  {k} = {v}{mark}\n"));
                }
                for f in &report.record.files {
                    text.push_str(&format!("  file {}\n", hex::encode(f.0)));
                }
                for d in &report.divergences {
                    text.push_str(&format!(
                        "  divergence on {}: on-chain {} vs off-chain {}\n",
                        d.attribute, d.on_chain, d.off_chain
                    ));
                }
                for u in &report.unverified {
                    text.push_str(&format!("  {u} not compared (no key)\n"));
                }
                Report::new(to_json(&report), text)
            }
            DataCmd::Attach { id, file, .. } => {
                let receipt = stores.register_file(id, &read(file)?)?;
                let mut text = format!(
                    "file {} registered for {id} at index {}",
                    hex::encode(receipt.hash.0),
                    receipt.index
                );
                if receipt.empty {
                    text.push_str(" (warning: empty file)");
                }
                Report::new(to_json(&receipt), text)
            }
        }
    };
    save_chain(&store, &chain)?;
    Ok(report)
}

#[derive(Serialize)]
struct PublicKey<'a> {
    key_id: &'a str,
    encryption_key: String,
    created_at: u64,
}

fn keys_cmd(cli: &Cli, cmd: &KeysCmd) -> Result<Report, CliError> {
    let store = open_store(cli)?;
    let public = |k: &KeyPair| {
        to_json(&PublicKey {
            key_id: &k.key_id,
            encryption_key: k.encryption_key.to_hex(),
            created_at: k.created_at,
        })
    };
    match cmd {
        KeysCmd::Generate => {
            let keys = generate_keypair()?;
            store.put_as(Collection::Keys, &keys.key_id, &keys)?;
            Ok(Report::new(
                public(&keys),
                format!("{}  {}", keys.key_id, keys.encryption_key.to_hex()),
            ))
        }
        KeysCmd::Export { id, private } => {
            let keys = load_keys(&store, id)?;
            let doc = if *private { to_json(&keys) } else { public(&keys) };
            let text = serde_json::to_string_pretty(&doc).expect("json serializes");
            Ok(Report::new(doc, text))
        }
        KeysCmd::Import { file } => {
            let keys: KeyPair = read_json(file)?;
            let derived = KeyPair::from_decryption_key(keys.decryption_key.clone(), keys.created_at);
            if derived.encryption_key != keys.encryption_key || derived.key_id != keys.key_id {
                return Err(CliError::Invalid("key pair halves do not match".into()));
            }
            store.put_as(Collection::Keys, &keys.key_id, &keys)?;
            Ok(Report::new(public(&keys), format!("imported {}", keys.key_id)))
        }
        KeysCmd::List => {
            let ids = store.list(Collection::Keys)?;
            Ok(Report::new(json!(ids), ids.join("\n")))
        }
    }
}

fn chain_cmd(cli: &Cli, cmd: &ChainCmd) -> Result<Report, CliError> {
    let store = open_store(cli)?;
    match cmd {
        ChainCmd::Call {
            chain,
            contract,
            function,
            args,
            from,
            query,
        } => {
            let mut sim = load_chain(&store, *chain)?;
            let target = resolve_contract(&store, *chain, contract)?;
            let sender = account(from);
            sim.add_account(sender);
            let args = sim.parse_args(&target, function, &json_array(args)?)?;
            let result = if *query {
                sim.query(sender, target, function, args)?
            } else {
                let r = sim.call(sender, target, function, args)?;
                save_chain(&store, &sim)?;
                r
            };
            let returns: Vec<Json> = result.returns.iter().map(|v| v.to_json()).collect();
            let delta: Vec<Json> = result
                .delta
                .iter()
                .map(|c| {
                    json!({
                        "variable": c.variable,
                        "before": c.before.as_ref().map(|v| v.to_json()),
                        "after": c.after.to_json(),
                    })
                })
                .collect();
            let doc = json!({
                "status": result.status.to_string(),
                "returns": returns,
                "delta": delta,
                "error": result.error,
                "height": result.height,
            });
            let mut text = format!("{}", result.status);
            if let Some(h) = result.height {
                text.push_str(&format!(" in block {h}"));
            }
            if !returns.is_empty() {
                text.push_str(&format!(", returns {}", Json::Array(returns)));
            }
            if let Some(e) = &result.error {
                text.push_str(&format!(": {e}"));
            }
            Ok(Report::new(doc, text))
        }
        ChainCmd::Inspect { chain, contract } => {
            let sim = load_chain(&store, *chain)?;
            match contract {
                Some(c) => {
                    let address = resolve_contract(&store, *chain, c)?;
                    let deployed = sim.contract(&address).ok_or(LedgerError::UnknownContract(address))?;
                    let storage: serde_json::Map<String, Json> =
                        deployed.storage.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
                    let mut text = format!("{} at {}\n", deployed.name, address);
                    for (k, v) in &storage {
                        text.push_str(&format!("  {k} = {v}\n"));
                    }
                    Ok(Report::new(
                        json!({"name": deployed.name, "address": address.to_string(), "storage": storage}),
                        text,
                    ))
                }
                None => {
                    let status = chain_status(&sim);
                    let contracts = contract_records(&store, Some(*chain))?;
                    let mut text = format!(
                        "chain {} ({}): height {}, {} contract(s), head {}\n",
                        status.chain_id, status.chain_type, status.height, status.contracts, status.head
                    );
                    for c in &contracts {
                        text.push_str(&format!("  {} {} (block {})\n", c.address, c.name, c.height));
                    }
                    let listing: Vec<Json> = contracts
                        .iter()
                        .map(|c| json!({"name": c.name, "address": c.address.to_string(), "height": c.height}))
                        .collect();
                    let mut doc = to_json(&status);
                    doc["deployed"] = Json::Array(listing);
                    Ok(Report::new(doc, text))
                }
            }
        }
        ChainCmd::Export { chain, out } => {
            let sim = load_chain(&store, *chain)?;
            let export = sim.export();
            match out {
                Some(path) => {
                    write_file(path, export.as_bytes())?;
                    Ok(Report::new(
                        json!({"chain_id": chain, "out": path.display().to_string()}),
                        format!("exported chain {chain} to {}", path.display()),
                    ))
                }
                None => {
                    let doc: Json = serde_json::from_str(&export).expect("export is JSON");
                    Ok(Report::new(doc, export))
                }
            }
        }
        ChainCmd::Verify { chain } => {
            let sim = load_chain(&store, *chain)?;
            sim.verify()?;
            Ok(Report::new(
                json!({"chain_id": chain, "height": sim.height(), "valid": true}),
                format!("chain {chain}: {} blocks verified", sim.height() + 1),
            ))
        }
    }
}
