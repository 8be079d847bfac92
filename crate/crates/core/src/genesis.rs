//! Genesis configuration shared by the ledger and the deployment planner.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::Bytes32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChainType {
    #[serde(rename = "ethereum-like")]
    EthereumLike,
    #[serde(rename = "fabric-like")]
    FabricLike,
}

impl fmt::Display for ChainType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainType::EthereumLike => "ethereum-like",
            ChainType::FabricLike => "fabric-like",
        })
    }
}

impl FromStr for ChainType {
    type Err = GenesisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ethereum-like" => Ok(ChainType::EthereumLike),
            "fabric-like" => Ok(ChainType::FabricLike),
            other => Err(GenesisError::ChainType(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenesisError {
    #[error("difficulty `{0}` is not a 0x-prefixed hex number")]
    Difficulty(String),
    #[error("unknown chain type `{0}` (expected ethereum-like or fabric-like)")]
    ChainType(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub chain_type: ChainType,
    pub difficulty: String,
    pub chain_id: u64,
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

impl GenesisConfig {
    pub fn new(chain_type: ChainType, difficulty: &str, chain_id: u64) -> Self {
        GenesisConfig {
            chain_type,
            difficulty: difficulty.to_string(),
            chain_id,
            extra: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GenesisError> {
        self.difficulty_value().map(|_| ())
    }

    pub fn difficulty_value(&self) -> Result<u128, GenesisError> {
        let digits = self
            .difficulty
            .strip_prefix("0x")
            .or_else(|| self.difficulty.strip_prefix("0X"))
            .filter(|d| !d.is_empty())
            .ok_or_else(|| GenesisError::Difficulty(self.difficulty.clone()))?;
        u128::from_str_radix(digits, 16).map_err(|_| GenesisError::Difficulty(self.difficulty.clone()))
    }

    /// The vendor-flavoured genesis file handed to each node.
    pub fn document(&self) -> serde_json::Value {
        match self.chain_type {
            ChainType::EthereumLike => json!({
                "config": { "chainId": self.chain_id },
                "difficulty": self.difficulty,
                "alloc": {},
                "extra": self.extra,
            }),
            ChainType::FabricLike => json!({
                "channel": format!("chain-{}", self.chain_id),
                "orderer": { "difficulty": self.difficulty },
                "extra": self.extra,
            }),
        }
    }

    pub fn digest(&self) -> Bytes32 {
        let text = serde_json::to_vec(&self.document()).expect("json value serializes");
        Bytes32(Sha256::digest(&text).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difficulty_must_be_hex() {
        let mut g = GenesisConfig::new(ChainType::EthereumLike, "0x4000", 7);
        assert_eq!(g.difficulty_value(), Ok(0x4000));
        g.difficulty = "4000".into();
        assert!(g.validate().is_err());
        g.difficulty = "0xzz".into();
        assert!(g.validate().is_err());
    }

    #[test]
    fn vendors_differ_only_in_genesis_document() {
        let a = GenesisConfig::new(ChainType::EthereumLike, "0x4000", 7);
        let b = GenesisConfig {
            chain_type: ChainType::FabricLike,
            ..a.clone()
        };
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
    }
}
