//! Synthetic source chain: generation, block-file parsing, and UTXO scanning.

mod blockfile;
mod generator;
mod keys;
mod scan;

pub use blockfile::{
    list_block_files, parse_block_file, write_block_record, BlockFileError, BlockFileReader,
    BlockFileWriter, MAX_BLOCK_RECORD, SOURCE_MAGIC,
};
pub use generator::{
    generate_blocks, generate_source_chain, GeneratedChain, Ledger, SourceChainConfig,
    BURN_SCRIPT, KEY_REGISTRY_FILE,
};
pub use keys::{KeyRecord, KeyRegistry, RegistryError};
pub use scan::{scan_block_dir, scan_utxos, BalanceMap, ScanError, UtxoScanner};
