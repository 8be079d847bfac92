//! Fixed-width primitives shared by the contract model, the ledger and the services.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("expected 0x-prefixed hex string, got `{0}`")]
    MissingPrefix(String),
    #[error("expected {expected} bytes of hex, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("invalid hex digit in `{0}`")]
    Digit(String),
}

fn parse_fixed<const N: usize>(s: &str) -> Result<[u8; N], HexError> {
    let body = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .ok_or_else(|| HexError::MissingPrefix(s.to_string()))?;
    if body.len() != N * 2 {
        return Err(HexError::Length {
            expected: N,
            actual: body.len() / 2,
        });
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(body, &mut out).map_err(|_| HexError::Digit(s.to_string()))?;
    Ok(out)
}

macro_rules! fixed_bytes {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn is_zero(&self) -> bool {
                self.0.iter().all(|b| *b == 0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "0x{}", hex::encode(self.0))
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(self, f)
            }
        }

        impl FromStr for $name {
            type Err = HexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_fixed::<$len>(s.trim()).map($name)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

fixed_bytes!(
    /// A 20-byte account or contract address, rendered as lowercase `0x` hex.
    Address,
    20
);

fixed_bytes!(
    /// A 32-byte word, rendered as lowercase `0x` hex.
    Bytes32,
    32
);

impl Address {
    /// Derives a stable account address from a human label. Used for test
    /// fixtures and scenario accounts.
    pub fn from_label(label: &str) -> Self {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(format!("account:{label}").as_bytes());
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest[..20]);
        Address(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_round_trips_through_text() {
        let a = Address::from_label("lab-1");
        let text = a.to_string();
        assert_eq!(text.len(), 42);
        assert_eq!(text, text.to_lowercase());
        assert_eq!(text.parse::<Address>().unwrap(), a);
    }

    #[test]
    fn rejects_bad_hex() {
        assert!(matches!("1234".parse::<Address>(), Err(HexError::MissingPrefix(_))));
        assert!(matches!(
            "0x1234".parse::<Address>(),
            Err(HexError::Length { expected: 20, .. })
        ));
        let bad = format!("0x{}", "zz".repeat(32));
        assert!(matches!(bad.parse::<Bytes32>(), Err(HexError::Digit(_))));
    }
}
