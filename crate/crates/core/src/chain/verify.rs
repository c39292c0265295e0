//! Full re-validation of a stored chain.

use std::path::Path;

use thiserror::Error;

use crate::model::Hash256;
use crate::source::{BlockFileError, BlockFileReader};

use super::params::ChainParams;
use super::state::{ChainState, ConnectError};
use super::store::{StoreError, BLOCKS_DIR};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("block file: {0}")]
    BlockFile(#[from] BlockFileError),
    #[error("block at height {height} rejected: {source}")]
    Rejected { height: u32, source: ConnectError },
    #[error("replayed chain differs from the stored chainstate ({what})")]
    StateMismatch { what: &'static str },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub blocks: u32,
    pub tip: Option<Hash256>,
    pub utxo_count: usize,
    pub utxo_digest: Hash256,
}

/// Replays every stored block through validation into a fresh in-memory
/// state and checks the result against the persisted chainstate.
pub fn verify_datadir(datadir: &Path, params: &ChainParams) -> Result<VerifyReport, VerifyError> {
    let stored = ChainState::open(datadir, params.clone())?;
    let mut replay = ChainState::in_memory(params.clone());
    let path = datadir.join(BLOCKS_DIR).join("blk00000.dat");
    let mut height = 0u32;
    for block in BlockFileReader::open(&path, params.magic)? {
        replay.connect_block(block?).map_err(|source| VerifyError::Rejected { height, source })?;
        height += 1;
    }
    if replay.tip() != stored.tip() {
        return Err(VerifyError::StateMismatch { what: "tip" });
    }
    let digest = replay.utxo_digest();
    if digest != stored.utxo_digest() {
        return Err(VerifyError::StateMismatch { what: "utxo set" });
    }
    Ok(VerifyReport { blocks: height, tip: replay.tip().map(|t| t.hash), utxo_count: replay.utxo_count(), utxo_digest: digest })
}
