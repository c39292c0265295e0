//! Claiming snapshot balances on the spinoff chain.
//!
//! [`Node::claimtx`] finds the block-one output for a source address and
//! returns an unsigned spend of it. [`sign_claim`] plays the source wallet.
//! [`Node::submit`] verifies the signed result and queues it for mining.

mod bundle;
mod mempool;
mod node;
mod wallet;

pub use bundle::{sign_claim, sign_raw_transaction, ClaimBundle, PrevoutDescriptor, SignedRaw};
pub use mempool::Mempool;
pub use node::{Node, SnapshotEntryInfo};
pub use wallet::{Wallet, WalletError, WALLET_FILE_NAME};

use thiserror::Error;

use crate::model::{Hash256, OutPoint};

#[derive(Debug, Error)]
pub enum ClaimError {
    #[error("invalid address {0}")]
    InvalidAddress(String),
    #[error("address {0} is not in the snapshot")]
    AddressNotInSnapshot(String),
    #[error("snapshot output {0} was already claimed")]
    AlreadyClaimed(OutPoint),
    #[error("node has no block one yet")]
    NodeNotBootstrapped,
    #[error("key does not own the claimed output")]
    KeyMismatch,
    #[error("malformed claim bundle: {0}")]
    MalformedBundle(String),
    #[error("transaction does not decode: {0}")]
    DecodeError(String),
    #[error("input {0} is unknown or spent")]
    UnknownOutpoint(OutPoint),
    #[error("script failure: {0}")]
    ScriptFailure(String),
    #[error("outputs exceed inputs")]
    ValueInflation,
    #[error("mempool already holds {0} spending this output")]
    DuplicateInMempool(Hash256),
    #[error("wallet: {0}")]
    Wallet(#[from] WalletError),
    #[error("chain: {0}")]
    Chain(String),
}
