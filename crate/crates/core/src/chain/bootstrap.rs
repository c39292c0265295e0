use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::Hash256;
use crate::snapshot::{read_snapshot_file, Snapshot, SnapshotError, SNAPSHOT_FILE_NAME};

use super::mining::{build_block_one, mine_genesis, MiningError};
use super::params::{ChainParams, ParamsError, PARAMS_FILE_NAME};
use super::state::{ChainState, ConnectError};
use super::store::{ChainStore, StoreError};
use super::validation::ValidationError;

pub const BALANCES_DIR: &str = "balances";

/// Launch options. With `genesis_switch` set, the node mines genesis and
/// imports the snapshot into block one; otherwise it loads what is on disk.
#[derive(Clone, Debug, Default)]
pub struct BootstrapConfig {
    pub genesis_switch: bool,
    /// Defaults to `<datadir>/balances/snapshotToImport.txt`.
    pub snapshot_path: Option<PathBuf>,
    /// Known `(time, nonce)` for block one, to reproduce a published block.
    pub block_one_preset: Option<(u32, u32)>,
}

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("snapshot file {0} not found")]
    SnapshotMissing(PathBuf),
    #[error("snapshot: {0}")]
    Snapshot(#[from] SnapshotError),
    #[error("block one {got} does not match checkpoint {expected}")]
    CheckpointMismatch { expected: Hash256, got: Hash256 },
    #[error("genesis {got} does not match the configured {expected}")]
    GenesisMismatch { expected: Hash256, got: Hash256 },
    #[error("datadir already holds a chain; clear it or launch without the genesis switch")]
    AlreadyBootstrapped,
    #[error("no chain in datadir; launch once with the genesis switch")]
    NotBootstrapped,
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Connect(ConnectError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<ConnectError> for BootstrapError {
    fn from(e: ConnectError) -> Self {
        match e {
            ConnectError::Invalid(ValidationError::CheckpointMismatch { expected, got }) => {
                BootstrapError::CheckpointMismatch { expected, got }
            }
            other => BootstrapError::Connect(other),
        }
    }
}

pub struct Bootstrapped {
    pub state: ChainState,
    /// Parameters updated with the genesis hash and checkpoint.
    pub params: ChainParams,
    pub snapshot: Snapshot,
    /// False when an existing chain was loaded.
    pub mined: bool,
}

pub fn snapshot_path(datadir: &Path) -> PathBuf {
    datadir.join(BALANCES_DIR).join(SNAPSHOT_FILE_NAME)
}

pub fn params_path(datadir: &Path) -> PathBuf {
    datadir.join(PARAMS_FILE_NAME)
}

/// Brings up the chain in `datadir`.
///
/// With the switch on: mine genesis (from `params.genesis_nonce`), build and
/// connect block one from the snapshot, pin it as the checkpoint and write
/// `chainparams.toml`. With the switch off: load the chainstate and check
/// block one against the checkpoint.
pub fn bootstrap(datadir: &Path, config: &BootstrapConfig, params: ChainParams) -> Result<Bootstrapped, BootstrapError> {
    params.validate()?;
    if config.genesis_switch {
        first_launch(datadir, config, params)
    } else {
        relaunch(datadir, params)
    }
}

fn first_launch(datadir: &Path, config: &BootstrapConfig, mut params: ChainParams) -> Result<Bootstrapped, BootstrapError> {
    let source = config.snapshot_path.clone().unwrap_or_else(|| snapshot_path(datadir));
    if !source.is_file() {
        return Err(BootstrapError::SnapshotMissing(source));
    }
    if ChainStore::exists(datadir) {
        return Err(BootstrapError::AlreadyBootstrapped);
    }
    let snapshot = read_snapshot_file(&source)?;

    let genesis = mine_genesis(&params, params.genesis_time, &params.genesis_message)?;
    let genesis_hash = genesis.block_hash();
    if let Some(expected) = params.genesis_hash {
        if expected != genesis_hash {
            return Err(BootstrapError::GenesisMismatch { expected, got: genesis_hash });
        }
    }
    let (time, nonce) = config
        .block_one_preset
        .or(params.block_one_time.zip(params.block_one_nonce))
        .unwrap_or((params.genesis_time + 600, 0));
    let block_one = build_block_one(&snapshot, genesis_hash, &params, time, nonce)?;
    let block_one_hash = block_one.block_hash();
    if let Some(expected) = params.block_one_checkpoint {
        if expected != block_one_hash {
            return Err(BootstrapError::CheckpointMismatch { expected, got: block_one_hash });
        }
    }

    params.genesis_nonce = genesis.header.nonce;
    params.genesis_hash = Some(genesis_hash);
    params.block_one_time = Some(block_one.header.time);
    params.block_one_nonce = Some(block_one.header.nonce);

    let mut state = ChainState::open(datadir, params.clone())?;
    state.connect_block(genesis)?;
    state.connect_block(block_one)?;
    params.block_one_checkpoint = Some(block_one_hash);
    state.set_checkpoint(params.block_one_checkpoint);
    state.flush()?;

    let balances = snapshot_path(datadir);
    if balances != source {
        fs::create_dir_all(balances.parent().unwrap())?;
        fs::copy(&source, &balances)?;
    }
    params.save(&params_path(datadir))?;
    Ok(Bootstrapped { state, params, snapshot, mined: true })
}

fn relaunch(datadir: &Path, params: ChainParams) -> Result<Bootstrapped, BootstrapError> {
    if !ChainStore::exists(datadir) {
        return Err(BootstrapError::NotBootstrapped);
    }
    let on_disk = match ChainParams::load(&params_path(datadir)) {
        Ok(p) => Some(p),
        Err(ParamsError::Io(e)) if e.kind() == io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let mut merged = on_disk.unwrap_or_else(|| params.clone());
    // Values pinned by the caller win; the check below then enforces them.
    merged.genesis_hash = params.genesis_hash.or(merged.genesis_hash);
    merged.block_one_checkpoint = params.block_one_checkpoint.or(merged.block_one_checkpoint);

    let state = ChainState::open(datadir, merged.clone())?;
    let (Some(genesis), Some(block_one)) = (state.block_hash_at(0), state.block_hash_at(1)) else {
        return Err(BootstrapError::NotBootstrapped);
    };
    if let Some(expected) = merged.genesis_hash {
        if expected != genesis {
            return Err(BootstrapError::GenesisMismatch { expected, got: genesis });
        }
    }
    // Re-hash block one from disk rather than trusting the index.
    let stored = state.get_block_at(1)?.expect("height 1 is indexed");
    let got = stored.block_hash();
    debug_assert_eq!(got, block_one);
    if let Some(expected) = merged.block_one_checkpoint {
        if expected != got {
            return Err(BootstrapError::CheckpointMismatch { expected, got });
        }
    }
    let snapshot = match read_snapshot_file(&snapshot_path(datadir)) {
        Ok(s) => s,
        Err(SnapshotError::Io(e)) if e.kind() == io::ErrorKind::NotFound => {
            return Err(BootstrapError::SnapshotMissing(snapshot_path(datadir)))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Bootstrapped { state, params: merged, snapshot, mined: false })
}
