//! Offline toolkit for blockchain application design and deployment.

pub mod contract;
pub mod crypto;
pub mod deploy;
pub mod genesis;
pub mod ledger;
pub mod schema;
pub mod store;
pub mod types;
pub mod weaver;
