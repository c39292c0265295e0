//! Snapshot-based bootstrapping of a spinoff chain.
//!
//! The pipeline has three stages:
//!
//! 1. [`source`] scans a Bitcoin-format block stream into per-address balances.
//! 2. [`snapshot`] orders and filters those balances and reads/writes the
//!    tab-delimited `snapshotToImport.txt` file.
//! 3. [`chain`] mines a genesis block, embeds the snapshot in block one as one
//!    coinbase-style transaction per entry, and persists the resulting chainstate.
//!
//! Holders of source-chain keys then move their balances with a claim
//! transaction ([`claim`]), verified by the P2PKH engine in [`script`].

pub mod chain;
pub mod claim;
pub mod model;
pub mod script;
pub mod snapshot;
pub mod source;

pub use model::{
    decode_address, encode_address, hash160, sha256d, Address, Amount, Block, BlockHeader,
    Hash160, Hash256, OutPoint, Transaction, TxIn, TxOut,
};
