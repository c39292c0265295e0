use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::RngCore;

use crate::chain::{snapshot_transaction, ChainState, ConnectError, StoreError};
use crate::model::{
    Address, Amount, Block, Hash160, Hash256, OutPoint, Transaction, TxIn, TxOut, SOURCE_ADDRESS_VERSION,
    SPINOFF_ADDRESS_VERSION,
};
use crate::script::{match_p2pkh, p2pkh_script_pubkey, verify_input, ScriptContext};
use crate::snapshot::{Snapshot, SnapshotEntry};

use super::bundle::{ClaimBundle, PrevoutDescriptor};
use super::mempool::Mempool;
use super::wallet::{Wallet, WALLET_FILE_NAME};
use super::ClaimError;

/// A snapshot entry and the block-one output that holds it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotEntryInfo {
    pub entry: SnapshotEntry,
    pub index: u32,
    pub outpoint: OutPoint,
    pub claimed: bool,
}

/// Chainstate, snapshot, wallet and mempool behind one facade.
pub struct Node {
    state: ChainState,
    snapshot: Snapshot,
    by_hash: HashMap<Hash160, usize>,
    wallet: Wallet,
    mempool: Mempool,
    /// Receives block rewards from `generate`. Defaults to an unowned script
    /// so the wallet balance reflects claims only.
    reward_script: Vec<u8>,
}

impl Node {
    pub fn new(state: ChainState, snapshot: Snapshot, wallet: Wallet) -> Self {
        let by_hash = snapshot.entries.iter().enumerate().map(|(i, e)| (e.hash160, i)).collect();
        Node {
            state,
            snapshot,
            by_hash,
            wallet,
            mempool: Mempool::default(),
            reward_script: crate::chain::genesis_output_script(),
        }
    }

    /// Opens `<datadir>/wallet.dat` alongside an already bootstrapped chain.
    pub fn with_datadir_wallet(state: ChainState, snapshot: Snapshot, datadir: &Path) -> Result<Self, ClaimError> {
        let wallet = Wallet::open(&datadir.join(WALLET_FILE_NAME))?;
        Ok(Node::new(state, snapshot, wallet))
    }

    pub fn set_reward_address(&mut self, address: Address) {
        self.reward_script = p2pkh_script_pubkey(&address.hash);
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn wallet(&self) -> &Wallet {
        &self.wallet
    }

    pub fn mempool(&self) -> &Mempool {
        &self.mempool
    }

    fn require_bootstrapped(&self) -> Result<(), ClaimError> {
        match self.state.height() {
            Some(h) if h >= 1 => Ok(()),
            _ => Err(ClaimError::NodeNotBootstrapped),
        }
    }

    pub fn snapshot_entry(&self, address: &str) -> Result<SnapshotEntryInfo, ClaimError> {
        let source = Address::parse_with_version(address, SOURCE_ADDRESS_VERSION)
            .map_err(|e| ClaimError::InvalidAddress(format!("{address}: {e}")))?;
        let &index = self.by_hash.get(&source.hash).ok_or_else(|| ClaimError::AddressNotInSnapshot(address.to_string()))?;
        let entry = self.snapshot.entries[index].clone();
        let outpoint = OutPoint::new(snapshot_transaction(&entry, index as u32).txid(), 0);
        let claimed = self.state.coin(&outpoint).is_none();
        Ok(SnapshotEntryInfo { entry, index: index as u32, outpoint, claimed })
    }

    /// Builds the unsigned claim for `address`, paying the full balance to
    /// `destination` or to a fresh wallet address.
    pub fn claimtx<R: RngCore + ?Sized>(
        &mut self,
        address: &str,
        destination: Option<&str>,
        rng: &mut R,
    ) -> Result<ClaimBundle, ClaimError> {
        self.require_bootstrapped()?;
        let info = self.snapshot_entry(address)?;
        let coin = self.state.coin(&info.outpoint).ok_or(ClaimError::AlreadyClaimed(info.outpoint))?;
        debug_assert_eq!(coin.value, info.entry.balance);
        let script_pubkey = coin.script_pubkey.clone();
        let dest = match destination {
            Some(text) => Address::parse_with_version(text, SPINOFF_ADDRESS_VERSION)
                .map_err(|e| ClaimError::InvalidAddress(format!("{text}: {e}")))?,
            None => self.wallet.new_address(rng)?,
        };
        let tx = Transaction {
            version: 1,
            inputs: vec![TxIn::new(info.outpoint, Vec::new())],
            outputs: vec![TxOut::new(info.entry.balance, p2pkh_script_pubkey(&dest.hash))],
            lock_time: 0,
        };
        Ok(ClaimBundle {
            unsigned_hex: tx.to_hex(),
            prevouts: vec![PrevoutDescriptor { txid: info.outpoint.txid, vout: 0, script_pubkey }],
        })
    }

    /// Checks a signed transaction against the UTXO set and mempool, then
    /// queues it for the next block.
    pub fn submit(&mut self, hex: &str) -> Result<Hash256, ClaimError> {
        let tx = Transaction::from_hex(hex).map_err(|e| ClaimError::DecodeError(e.to_string()))?;
        if tx.is_coinbase() {
            return Err(ClaimError::DecodeError("coinbase transactions cannot be relayed".into()));
        }
        let txid = tx.txid();
        if self.mempool.contains(&txid) {
            return Err(ClaimError::DuplicateInMempool(txid));
        }
        let mut input_total = Amount::ZERO;
        for (index, input) in tx.inputs.iter().enumerate() {
            if let Some(other) = self.mempool.spender_of(&input.prevout) {
                return Err(ClaimError::DuplicateInMempool(other));
            }
            if tx.inputs[..index].iter().any(|i| i.prevout == input.prevout) {
                return Err(ClaimError::UnknownOutpoint(input.prevout));
            }
            let coin = self.state.coin(&input.prevout).ok_or(ClaimError::UnknownOutpoint(input.prevout))?;
            let ctx = ScriptContext { tx: &tx, input_index: index, prevout_script: &coin.script_pubkey, prevout_value: coin.value };
            match verify_input(&ctx) {
                Ok(true) => {}
                Ok(false) => return Err(ClaimError::ScriptFailure(format!("input {index}: signature check failed"))),
                Err(e) => return Err(ClaimError::ScriptFailure(format!("input {index}: {e}"))),
            }
            input_total = input_total.checked_add(coin.value).ok_or(ClaimError::ValueInflation)?;
        }
        let output_total = tx.total_output().ok_or(ClaimError::ValueInflation)?;
        if output_total > input_total {
            return Err(ClaimError::ValueInflation);
        }
        Ok(self.mempool.insert(tx))
    }

    /// Mines `n` blocks, the first ones draining the mempool.
    pub fn generate(&mut self, n: u32) -> Result<Vec<Hash256>, ClaimError> {
        self.require_bootstrapped()?;
        let mut hashes = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let txs = self.mempool.select(self.state.params().max_block_txs.saturating_sub(1));
            let block = self.state.mine_next_block(txs, self.reward_script.clone())?;
            self.state.connect_block(block.clone())?;
            self.mempool.remove_for_block(&block);
            hashes.push(block.block_hash());
        }
        self.state.flush()?;
        Ok(hashes)
    }

    /// Confirmed value held by wallet addresses.
    pub fn balance(&self) -> Amount {
        self.state
            .utxos()
            .filter(|(_, coin)| match_p2pkh(&coin.script_pubkey).is_some_and(|h| self.wallet.owns(&h)))
            .map(|(_, coin)| coin.value)
            .sum()
    }

    pub fn new_address<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<Address, ClaimError> {
        Ok(self.wallet.new_address(rng)?)
    }

    pub fn get_block(&self, hash: &Hash256) -> Result<Option<(u32, Arc<Block>)>, StoreError> {
        let Some(height) = self.state.height_of(hash) else {
            return Ok(None);
        };
        Ok(self.state.get_block(hash)?.map(|b| (height, b)))
    }
}

impl From<ConnectError> for ClaimError {
    fn from(e: ConnectError) -> Self {
        ClaimError::Chain(e.to_string())
    }
}

impl From<crate::chain::TemplateError> for ClaimError {
    fn from(e: crate::chain::TemplateError) -> Self {
        ClaimError::Chain(e.to_string())
    }
}

impl From<StoreError> for ClaimError {
    fn from(e: StoreError) -> Self {
        ClaimError::Chain(e.to_string())
    }
}
