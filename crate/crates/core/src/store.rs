//! File-backed registry store.
//!
//! One directory per collection and one file per record. A record file holds
//! pretty-printed JSON (object keys sorted) followed by a `sha256:<hex>`
//! line covering the JSON text. Writes go to a temporary file that is
//! renamed into place, so a record is either the old or the new version.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::RwLock;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value as Json;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable naming the default store root.
pub const STORE_ENV: &str = "UBAAS_STORE";
const LOCK_FILE: &str = ".lock";
const CHECKSUM_PREFIX: &str = "sha256:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Collection {
    Blockchains,
    Ledgers,
    Contracts,
    Schemas,
    Rows,
    Files,
    Keys,
}

impl Collection {
    pub const ALL: [Collection; 7] = [
        Collection::Blockchains,
        Collection::Ledgers,
        Collection::Contracts,
        Collection::Schemas,
        Collection::Rows,
        Collection::Files,
        Collection::Keys,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Collection::Blockchains => "blockchains",
            Collection::Ledgers => "ledgers",
            Collection::Contracts => "contracts",
            Collection::Schemas => "schemas",
            Collection::Rows => "rows",
            Collection::Files => "files",
            Collection::Keys => "keys",
        }
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Collection {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Collection::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| StoreError::UnknownCollection(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown collection `{0}`")]
    UnknownCollection(String),
    #[error("record keys must be non-empty")]
    EmptyKey,
    #[error("store at {0} is already open in another process")]
    Locked(PathBuf),
    #[error("record {collection}/{key} is corrupted: {reason}")]
    Corrupted {
        collection: Collection,
        key: String,
        reason: String,
    },
    #[error("blockchain {0} still has deployed contracts or schemas")]
    ChainInUse(String),
    #[error("record {collection}/{key} does not match the expected shape: {message}")]
    Shape {
        collection: Collection,
        key: String,
        message: String,
    },
    #[error("store i/o error: {0}")]
    Io(#[from] io::Error),
}

pub struct Store {
    root: PathBuf,
    locks: BTreeMap<Collection, RwLock<()>>,
    _lock: File,
}

impl fmt::Debug for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Store").field("root", &self.root).finish()
    }
}

impl Store {
    /// Opens (creating if needed) the store at `root`. A second opener,
    /// in this process or another, gets [`StoreError::Locked`].
    pub fn open(root: impl AsRef<Path>) -> Result<Store, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(root.join(LOCK_FILE))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Locked(root)),
            Err(fs::TryLockError::Error(e)) => return Err(e.into()),
        }
        for c in Collection::ALL {
            fs::create_dir_all(root.join(c.name()))?;
        }
        Ok(Store {
            root,
            locks: Collection::ALL.into_iter().map(|c| (c, RwLock::new(()))).collect(),
            _lock: lock,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, collection: Collection, key: &str) -> PathBuf {
        self.root.join(collection.name()).join(encode_key(key))
    }

    pub fn put(&self, collection: Collection, key: &str, value: &Json) -> Result<(), StoreError> {
        if key.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        let text = encode_record(value);
        let _guard = self.locks[&collection].write().expect("store lock poisoned");
        let path = self.path(collection, key);
        let tmp = path.with_file_name(format!(".{}.tmp", encode_key(key)));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        if let Ok(dir) = File::open(path.parent().expect("record has a directory")) {
            let _ = dir.sync_all();
        }
        Ok(())
    }

    pub fn get(&self, collection: Collection, key: &str) -> Result<Option<Json>, StoreError> {
        if key.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        let _guard = self.locks[&collection].read().expect("store lock poisoned");
        let bytes = match fs::read(self.path(collection, key)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        decode_record(&bytes).map(Some).map_err(|reason| StoreError::Corrupted {
            collection,
            key: key.to_string(),
            reason,
        })
    }

    /// Keys in lexicographic order.
    pub fn list(&self, collection: Collection) -> Result<Vec<String>, StoreError> {
        let _guard = self.locks[&collection].read().expect("store lock poisoned");
        let mut keys = Vec::new();
        for entry in fs::read_dir(self.root.join(collection.name()))? {
            let name = entry?.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.starts_with('.') {
                continue;
            }
            if let Some(key) = decode_key(name) {
                keys.push(key);
            }
        }
        keys.sort();
        Ok(keys)
    }

    /// Removes a record; returns whether it existed.
    pub fn delete(&self, collection: Collection, key: &str) -> Result<bool, StoreError> {
        if key.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        if collection == Collection::Blockchains && self.chain_in_use(key)? {
            return Err(StoreError::ChainInUse(key.to_string()));
        }
        let _guard = self.locks[&collection].write().expect("store lock poisoned");
        match fs::remove_file(self.path(collection, key)) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    fn chain_in_use(&self, chain: &str) -> Result<bool, StoreError> {
        let prefix = format!("{chain}/");
        if self.list(Collection::Contracts)?.iter().any(|k| k.starts_with(&prefix)) {
            return Ok(true);
        }
        for key in self.list(Collection::Schemas)? {
            if let Some(link) = self.get(Collection::Schemas, &key)? {
                if link.get("chain_id").map(|v| v.to_string()).as_deref() == Some(chain) {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    pub fn put_as<T: Serialize>(&self, collection: Collection, key: &str, value: &T) -> Result<(), StoreError> {
        let json = serde_json::to_value(value).map_err(|e| StoreError::Shape {
            collection,
            key: key.to_string(),
            message: e.to_string(),
        })?;
        self.put(collection, key, &json)
    }

    pub fn get_as<T: DeserializeOwned>(&self, collection: Collection, key: &str) -> Result<Option<T>, StoreError> {
        match self.get(collection, key)? {
            None => Ok(None),
            Some(json) => serde_json::from_value(json).map(Some).map_err(|e| StoreError::Shape {
                collection,
                key: key.to_string(),
                message: e.to_string(),
            }),
        }
    }
}

fn encode_record(value: &Json) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    let sum = hex::encode(Sha256::digest(text.as_bytes()));
    text.push_str(CHECKSUM_PREFIX);
    text.push_str(&sum);
    text.push('\n');
    text
}

fn decode_record(bytes: &[u8]) -> Result<Json, String> {
    let text = std::str::from_utf8(bytes).map_err(|_| "record is not valid UTF-8".to_string())?;
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or("missing checksum line")?;
    let (body, trailer) = text.split_at(body_end);
    let expected = trailer
        .strip_prefix(CHECKSUM_PREFIX)
        .and_then(|s| s.strip_suffix('\n'))
        .ok_or("malformed checksum line")?;
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if expected != actual {
        return Err("checksum mismatch".to_string());
    }
    serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))
}

fn encode_key(key: &str) -> String {
    let mut out = String::new();
    for (i, b) in key.bytes().enumerate() {
        let plain = b.is_ascii_alphanumeric() || b == b'-' || b == b'_' || (b == b'.' && i > 0);
        if plain {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn decode_key(name: &str) -> Option<String> {
    let bytes = name.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = name.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    #[test]
    fn put_get_list_delete() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.put(Collection::Keys, "b", &json!({"x": 1})).unwrap();
        store.put(Collection::Keys, "a/1", &json!([1, 2])).unwrap();
        assert_eq!(store.get(Collection::Keys, "b").unwrap(), Some(json!({"x": 1})));
        assert_eq!(store.list(Collection::Keys).unwrap(), vec!["a/1", "b"]);
        assert!(store.delete(Collection::Keys, "b").unwrap());
        assert!(!store.delete(Collection::Keys, "b").unwrap());
        assert_eq!(store.get(Collection::Keys, "b").unwrap(), None);
        assert!(matches!(
            store.put(Collection::Keys, "", &json!(1)),
            Err(StoreError::EmptyKey)
        ));
        assert!(matches!(
            "nope".parse::<Collection>(),
            Err(StoreError::UnknownCollection(_))
        ));
    }

    #[test]
    fn records_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = Store::open(dir.path()).unwrap();
            store
                .put(Collection::Schemas, "Quality", &json!({"b": 2, "a": 1}))
                .unwrap();
        }
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(
            store.get(Collection::Schemas, "Quality").unwrap(),
            Some(json!({"a": 1, "b": 2}))
        );
    }

    #[test]
    fn second_opener_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let _first = Store::open(dir.path()).unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::Locked(_))));
    }

    #[test]
    fn every_byte_flip_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.put(Collection::Rows, "r", &json!({"v": "hello"})).unwrap();
        let path = store.path(Collection::Rows, "r");
        let original = fs::read(&path).unwrap();
        for i in 0..original.len() {
            let mut bytes = original.clone();
            bytes[i] ^= 0x01;
            fs::write(&path, &bytes).unwrap();
            assert!(
                matches!(store.get(Collection::Rows, "r"), Err(StoreError::Corrupted { .. })),
                "flip at byte {i} not detected"
            );
        }
    }

    #[test]
    fn chains_with_contracts_cannot_be_deleted() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.put(Collection::Blockchains, "7", &json!({})).unwrap();
        store.put(Collection::Contracts, "7/0xabc", &json!({})).unwrap();
        assert!(matches!(
            store.delete(Collection::Blockchains, "7"),
            Err(StoreError::ChainInUse(_))
        ));
        store.delete(Collection::Contracts, "7/0xabc").unwrap();
        store.put(Collection::Schemas, "S", &json!({"chain_id": 7})).unwrap();
        assert!(store.delete(Collection::Blockchains, "7").is_err());
        store.delete(Collection::Schemas, "S").unwrap();
        assert!(store.delete(Collection::Blockchains, "7").unwrap());
    }

    #[test]
    fn key_encoding_round_trips() {
        for key in ["plain", "a/b", ".hidden", "sp ace", "ünï", "100%", "x.y"] {
            let enc = encode_key(key);
            assert!(!enc.starts_with('.'));
            assert!(!enc.contains('/'));
            assert_eq!(decode_key(&enc).as_deref(), Some(key));
        }
    }

    #[test]
    fn concurrent_readers_and_writers() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        std::thread::scope(|s| {
            for t in 0..4 {
                let store = &store;
                s.spawn(move || {
                    for i in 0..25 {
                        let key = format!("{t}-{i}");
                        store.put(Collection::Files, &key, &json!(i)).unwrap();
                        assert_eq!(store.get(Collection::Files, &key).unwrap(), Some(json!(i)));
                    }
                });
            }
        });
        assert_eq!(store.list(Collection::Files).unwrap().len(), 100);
    }
}
