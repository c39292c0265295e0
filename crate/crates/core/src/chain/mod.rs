//! The spinoff chain: genesis, block one, validation and the chainstate.

mod bootstrap;
mod mining;
mod params;
mod state;
mod store;
mod validation;
pub mod verify;

pub use bootstrap::{
    bootstrap, params_path, snapshot_path, BootstrapConfig, BootstrapError, Bootstrapped, BALANCES_DIR,
};
pub use mining::{
    assemble_and_mine, build_block_one, genesis_coinbase, genesis_output_script, mine_genesis, mine_header,
    snapshot_transaction, standard_coinbase, MiningError,
};
pub use params::{ChainParams, Network, ParamsError, PARAMS_FILE_NAME, SPINOFF_MAGIC};
pub use state::{ChainState, ChainTip, Coin, ConnectError, TemplateError, BLOCK_CACHE_SIZE};
pub use store::{BlockLocation, ChainStore, PersistedState, StoreError, BLOCKS_DIR, CHAINSTATE_DIR};
pub use validation::{count_sigops, validate_block, BlockDelta, ValidationError};
