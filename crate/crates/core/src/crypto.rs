//! Key pairs, hybrid encryption, content hashing and file comparison.
//!
//! Encryption is X25519 key agreement with a fresh ephemeral key per
//! message, HKDF-SHA256 key derivation and ChaCha20-Poly1305. The
//! encryption key is the recipient's public key and the decryption key its
//! secret, so anyone holding the encryption key can write but only the pair
//! owner can read. Ciphertext layout: `ephemeral public (32) ‖ nonce (12) ‖
//! sealed payload`.

use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;
use x25519_dalek::{PublicKey, StaticSecret};

use crate::types::Bytes32;

/// Largest plaintext accepted by [`encrypt`].
pub const MAX_PLAINTEXT_LEN: usize = 16 * 1024 * 1024;

const KDF_INFO: &[u8] = b"ubaas hybrid encryption v1";
const HEADER_LEN: usize = 32 + 12;

/// SHA-256 digest.
pub type Digest = Bytes32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("entropy source failed: {0}")]
    Entropy(String),
    #[error("invalid key: {0}")]
    InvalidKey(String),
    #[error("ciphertext is truncated ({0} bytes)")]
    Truncated(usize),
    #[error("authenticated decryption failed: wrong key or corrupted ciphertext")]
    Authentication,
    #[error("plaintext of {len} bytes exceeds the {cap}-byte limit")]
    TooLarge { len: usize, cap: usize },
}

macro_rules! key_type {
    ($name:ident, $redact:expr) => {
        #[derive(Clone, PartialEq, Eq)]
        pub struct $name(pub [u8; 32]);

        impl $name {
            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            pub fn from_hex(text: &str) -> Result<Self, CryptoError> {
                let text = text.trim();
                let text = text.strip_prefix("0x").unwrap_or(text);
                let bytes = hex::decode(text).map_err(|e| CryptoError::InvalidKey(e.to_string()))?;
                let bytes: [u8; 32] = bytes
                    .try_into()
                    .map_err(|b: Vec<u8>| CryptoError::InvalidKey(format!("expected 32 bytes, got {}", b.len())))?;
                Ok($name(bytes))
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if $redact {
                    write!(f, "{}(…)", stringify!($name))
                } else {
                    write!(f, "{}({})", stringify!($name), self.to_hex())
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                $name::from_hex(&text).map_err(serde::de::Error::custom)
            }
        }
    };
}

key_type!(EncryptionKey, false);
key_type!(DecryptionKey, true);

impl EncryptionKey {
    /// Short identifier: the first 16 hex digits of SHA-256 of the key.
    pub fn key_id(&self) -> String {
        hex::encode(&Sha256::digest(self.0)[..8])
    }
}

impl DecryptionKey {
    pub fn encryption_key(&self) -> EncryptionKey {
        EncryptionKey(PublicKey::from(&StaticSecret::from(self.0)).to_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    pub key_id: String,
    pub encryption_key: EncryptionKey,
    pub decryption_key: DecryptionKey,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

impl KeyPair {
    /// Rebuilds a pair from its decryption key, e.g. after import.
    pub fn from_decryption_key(decryption_key: DecryptionKey, created_at: u64) -> KeyPair {
        let encryption_key = decryption_key.encryption_key();
        KeyPair {
            key_id: encryption_key.key_id(),
            encryption_key,
            decryption_key,
            created_at,
        }
    }
}

fn random<const N: usize>() -> Result<[u8; N], CryptoError> {
    let mut buf = [0u8; N];
    OsRng
        .try_fill_bytes(&mut buf)
        .map_err(|e| CryptoError::Entropy(e.to_string()))?;
    Ok(buf)
}

pub fn generate_keypair() -> Result<KeyPair, CryptoError> {
    let secret = random::<32>()?;
    let created_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    // Clamp as X25519 would, so the stored key is the effective scalar.
    let secret = StaticSecret::from(secret).to_bytes();
    Ok(KeyPair::from_decryption_key(DecryptionKey(secret), created_at))
}

fn cipher(shared: &[u8; 32], ephemeral: &[u8; 32], recipient: &[u8; 32]) -> ChaCha20Poly1305 {
    let mut salt = [0u8; 64];
    salt[..32].copy_from_slice(ephemeral);
    salt[32..].copy_from_slice(recipient);
    let hk = Hkdf::<Sha256>::new(Some(&salt), shared);
    let mut key = [0u8; 32];
    hk.expand(KDF_INFO, &mut key).expect("32 bytes is a valid HKDF length");
    ChaCha20Poly1305::new(Key::from_slice(&key))
}

pub fn encrypt(plaintext: &[u8], key: &EncryptionKey) -> Result<Vec<u8>, CryptoError> {
    if plaintext.len() > MAX_PLAINTEXT_LEN {
        return Err(CryptoError::TooLarge {
            len: plaintext.len(),
            cap: MAX_PLAINTEXT_LEN,
        });
    }
    let ephemeral = StaticSecret::from(random::<32>()?);
    let ephemeral_public = PublicKey::from(&ephemeral).to_bytes();
    let shared = ephemeral.diffie_hellman(&PublicKey::from(key.0));
    if !shared.was_contributory() {
        return Err(CryptoError::InvalidKey("low-order public key".into()));
    }
    let nonce = random::<12>()?;
    let sealed = cipher(shared.as_bytes(), &ephemeral_public, &key.0)
        .encrypt(Nonce::from_slice(&nonce), plaintext)
        .expect("encryption of a bounded buffer cannot fail");
    let mut out = Vec::with_capacity(HEADER_LEN + sealed.len());
    out.extend_from_slice(&ephemeral_public);
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&sealed);
    Ok(out)
}

pub fn decrypt(ciphertext: &[u8], key: &DecryptionKey) -> Result<Vec<u8>, CryptoError> {
    if ciphertext.len() < HEADER_LEN + 16 {
        return Err(CryptoError::Truncated(ciphertext.len()));
    }
    let ephemeral_public: [u8; 32] = ciphertext[..32].try_into().expect("sliced to 32");
    let nonce = &ciphertext[32..HEADER_LEN];
    let secret = StaticSecret::from(key.0);
    let recipient = PublicKey::from(&secret).to_bytes();
    let shared = secret.diffie_hellman(&PublicKey::from(ephemeral_public));
    cipher(shared.as_bytes(), &ephemeral_public, &recipient)
        .decrypt(Nonce::from_slice(nonce), &ciphertext[HEADER_LEN..])
        .map_err(|_| CryptoError::Authentication)
}

pub fn hash_content(data: &[u8]) -> Digest {
    Bytes32(Sha256::digest(data).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileVerdict {
    Authentic,
    Tampered,
    Unregistered,
}

impl fmt::Display for FileVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FileVerdict::Authentic => "authentic",
            FileVerdict::Tampered => "tampered",
            FileVerdict::Unregistered => "unregistered",
        })
    }
}

/// Anything that can list the on-chain registered hashes of a record.
pub trait FileHashSource {
    type Error;

    fn registered_hashes(&self, record_id: &str) -> Result<Vec<Digest>, Self::Error>;
}

pub fn compare_file<S: FileHashSource + ?Sized>(
    candidate: &[u8],
    record_id: &str,
    source: &S,
) -> Result<FileVerdict, S::Error> {
    let registered = source.registered_hashes(record_id)?;
    if registered.is_empty() {
        return Ok(FileVerdict::Unregistered);
    }
    let digest = hash_content(candidate);
    Ok(if registered.contains(&digest) {
        FileVerdict::Authentic
    } else {
        FileVerdict::Tampered
    })
}
