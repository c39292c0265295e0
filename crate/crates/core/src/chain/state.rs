use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{sha256d, Amount, Block, Encodable, Hash256, OutPoint, Transaction};

use super::mining::{assemble_and_mine, standard_coinbase, MiningError};
use super::params::ChainParams;
use super::store::{BlockLocation, ChainStore, StoreError};
use super::validation::{is_unspendable, validate_block, BlockDelta, ValidationError};

/// Recent blocks kept in memory. Block one is never cached.
pub const BLOCK_CACHE_SIZE: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coin {
    pub value: Amount,
    pub script_pubkey: Vec<u8>,
    /// Height of the block that created the output.
    pub height: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainTip {
    pub hash: Hash256,
    pub height: u32,
}

#[derive(Debug, Error)]
pub enum ConnectError {
    #[error("invalid block: {0}")]
    Invalid(#[from] ValidationError),
    #[error("persistence failure: {0}")]
    PersistenceFailure(#[from] StoreError),
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("no chain to build on")]
    NoTip,
    #[error("input {0} is unknown or already spent")]
    MissingInput(OutPoint),
    #[error("transactions spend more than their inputs")]
    NegativeFee,
    #[error(transparent)]
    Mining(#[from] MiningError),
}

/// The active chain and its UTXO set.
///
/// Single writer: `connect_block` takes `&mut self`. Wrap in a lock for
/// concurrent readers.
pub struct ChainState {
    params: ChainParams,
    store: Option<ChainStore>,
    utxo: HashMap<OutPoint, Coin>,
    /// Indexed by height. Offsets are zero for in-memory chains.
    blocks: Vec<BlockLocation>,
    index: HashMap<Hash256, u32>,
    cache: VecDeque<(u32, Arc<Block>)>,
    tip_time: u32,
}

impl ChainState {
    /// A chain with no persistence. Only cached blocks can be read back.
    pub fn in_memory(params: ChainParams) -> Self {
        ChainState {
            params,
            store: None,
            utxo: HashMap::new(),
            blocks: Vec::new(),
            index: HashMap::new(),
            cache: VecDeque::new(),
            tip_time: 0,
        }
    }

    /// Opens the chainstate in `datadir`, recovering from any interrupted write.
    pub fn open(datadir: &Path, params: ChainParams) -> Result<Self, StoreError> {
        let (store, persisted) = ChainStore::open(datadir, params.magic)?;
        let mut state = ChainState::in_memory(params);
        state.index = persisted.blocks.iter().enumerate().map(|(h, l)| (l.hash, h as u32)).collect();
        state.blocks = persisted.blocks;
        state.utxo = persisted.utxo;
        state.store = Some(store);
        if let Some(tip) = state.blocks.last().copied() {
            let block = state.store.as_ref().unwrap().read_block(&tip)?;
            state.tip_time = block.header.time;
            if state.blocks.len() != 2 {
                state.cache.push_back((state.blocks.len() as u32 - 1, Arc::new(block)));
            }
        }
        Ok(state)
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn set_checkpoint(&mut self, checkpoint: Option<Hash256>) {
        self.params.block_one_checkpoint = checkpoint;
    }

    pub fn tip(&self) -> Option<ChainTip> {
        self.blocks.last().map(|l| ChainTip { hash: l.hash, height: self.blocks.len() as u32 - 1 })
    }

    pub fn height(&self) -> Option<u32> {
        self.tip().map(|t| t.height)
    }

    pub fn tip_time(&self) -> u32 {
        self.tip_time
    }

    pub fn genesis_hash(&self) -> Option<Hash256> {
        self.blocks.first().map(|l| l.hash)
    }

    pub fn contains_block(&self, hash: &Hash256) -> bool {
        self.index.contains_key(hash)
    }

    pub fn height_of(&self, hash: &Hash256) -> Option<u32> {
        self.index.get(hash).copied()
    }

    pub fn block_hash_at(&self, height: u32) -> Option<Hash256> {
        self.blocks.get(height as usize).map(|l| l.hash)
    }

    pub fn coin(&self, outpoint: &OutPoint) -> Option<&Coin> {
        self.utxo.get(outpoint)
    }

    pub fn utxos(&self) -> impl Iterator<Item = (&OutPoint, &Coin)> {
        self.utxo.iter()
    }

    pub fn utxo_count(&self) -> usize {
        self.utxo.len()
    }

    /// `None` on 64-bit overflow, which validation rules out.
    pub fn utxo_total(&self) -> Option<Amount> {
        Amount::checked_sum(self.utxo.values().map(|c| c.value))
    }

    /// Order-independent fingerprint of the UTXO set.
    pub fn utxo_digest(&self) -> Hash256 {
        let mut entries: Vec<_> = self.utxo.iter().collect();
        entries.sort_unstable_by_key(|(o, _)| **o);
        let mut buf = Vec::with_capacity(entries.len() * 80);
        for (outpoint, coin) in entries {
            outpoint.encode_to(&mut buf);
            coin.encode_to(&mut buf);
        }
        Hash256(sha256d(&buf))
    }

    /// Whether blocks in `cache` or on disk can be read back.
    pub fn is_persistent(&self) -> bool {
        self.store.is_some()
    }

    /// Fetches a block of the active chain. Block one always comes from disk.
    pub fn get_block(&self, hash: &Hash256) -> Result<Option<Arc<Block>>, StoreError> {
        let Some(height) = self.height_of(hash) else {
            return Ok(None);
        };
        if let Some((_, block)) = self.cache.iter().find(|(h, _)| *h == height) {
            return Ok(Some(block.clone()));
        }
        match &self.store {
            Some(store) => Ok(Some(Arc::new(store.read_block(&self.blocks[height as usize])?))),
            None => Ok(None),
        }
    }

    pub fn get_block_at(&self, height: u32) -> Result<Option<Arc<Block>>, StoreError> {
        match self.block_hash_at(height) {
            Some(hash) => self.get_block(&hash),
            None => Ok(None),
        }
    }

    pub fn validate(&self, block: &Block) -> Result<BlockDelta, ValidationError> {
        validate_block(block, self)
    }

    /// Validates, persists and applies `block`. On error the in-memory state
    /// is untouched.
    pub fn connect_block(&mut self, block: Block) -> Result<BlockDelta, ConnectError> {
        let delta = validate_block(&block, self)?;
        let location = match &mut self.store {
            Some(store) => store.append_block(&block, &delta)?,
            None => BlockLocation { hash: delta.hash, offset: 0, len: 0 },
        };
        for outpoint in &delta.spent {
            self.utxo.remove(outpoint);
        }
        self.utxo.extend(delta.created.iter().cloned());
        self.blocks.push(location);
        self.index.insert(delta.hash, delta.height);
        self.tip_time = block.header.time;
        if delta.height != 1 {
            if self.cache.len() == BLOCK_CACHE_SIZE {
                self.cache.pop_front();
            }
            self.cache.push_back((delta.height, Arc::new(block)));
        }
        Ok(delta)
    }

    /// Rewrites the chainstate image and empties the log.
    pub fn flush(&mut self) -> Result<(), StoreError> {
        match &mut self.store {
            Some(store) => store.write_image(&self.blocks, &self.utxo),
            None => Ok(()),
        }
    }

    pub fn store_mut(&mut self) -> Option<&mut ChainStore> {
        self.store.as_mut()
    }

    /// Mines a standard block on the tip holding `txs` after a coinbase that
    /// pays the subsidy plus fees to `payout_script`.
    pub fn mine_next_block(&self, txs: Vec<Transaction>, payout_script: Vec<u8>) -> Result<Block, TemplateError> {
        let tip = self.tip().ok_or(TemplateError::NoTip)?;
        let mut created: HashMap<OutPoint, Amount> = HashMap::new();
        let mut fees = Amount::ZERO;
        for tx in &txs {
            let mut input = Amount::ZERO;
            for txin in &tx.inputs {
                let value = created
                    .remove(&txin.prevout)
                    .or_else(|| self.coin(&txin.prevout).map(|c| c.value))
                    .ok_or(TemplateError::MissingInput(txin.prevout))?;
                input = input.checked_add(value).ok_or(TemplateError::NegativeFee)?;
            }
            let output = tx.total_output().ok_or(TemplateError::NegativeFee)?;
            fees = input
                .checked_sub(output)
                .and_then(|fee| fees.checked_add(fee))
                .ok_or(TemplateError::NegativeFee)?;
            let txid = tx.txid();
            for (vout, out) in tx.outputs.iter().enumerate() {
                if !is_unspendable(&out.script_pubkey) {
                    created.insert(OutPoint::new(txid, vout as u32), out.value);
                }
            }
        }
        let height = tip.height + 1;
        let reward = self.params.subsidy.checked_add(fees).ok_or(TemplateError::NegativeFee)?;
        let mut all = vec![standard_coinbase(height, reward, payout_script)];
        all.extend(txs);
        Ok(assemble_and_mine(tip.hash, self.tip_time.saturating_add(600), self.params.bits, 0, all)?)
    }
}
