use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::model::{Amount, Block, Hash256, OutPoint, Transaction};
use crate::script::{verify_input, ScriptContext, OP_CHECKSIG, OP_RETURN};

use super::state::{ChainState, Coin};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("block {0} is already known")]
    AlreadyKnown(Hash256),
    #[error("block builds on {prev}, not on the tip {tip:?}")]
    NotExtendingTip { prev: Hash256, tip: Option<Hash256> },
    #[error("block one hash {got} does not match checkpoint {expected}")]
    CheckpointMismatch { expected: Hash256, got: Hash256 },
    #[error("header does not meet its target or uses the wrong bits")]
    BadPoW,
    #[error("block has no transactions")]
    EmptyBlock,
    #[error("merkle root does not commit to the transactions")]
    BadMerkleRoot,
    #[error("first transaction is not a coinbase")]
    MissingCoinbase,
    #[error("transaction {index} is a second coinbase")]
    MultipleCoinbases { index: usize },
    #[error("block is {size} bytes, limit {limit}")]
    OversizeBlock { size: usize, limit: usize },
    #[error("block has {count} signature operations, limit {limit}")]
    TooManySigops { count: usize, limit: usize },
    #[error("block has {count} transactions, limit {limit}")]
    TooManyTransactions { count: usize, limit: usize },
    #[error("duplicate transaction {0}")]
    DuplicateTxid(Hash256),
    #[error("output {0} is spent twice in this block")]
    DoubleSpend(OutPoint),
    #[error("input {0} is unknown or already spent")]
    MissingInput(OutPoint),
    #[error("input {input} of {txid} fails its script: {reason}")]
    ScriptFailure { txid: Hash256, input: usize, reason: String },
    #[error("transaction {0} spends more than its inputs")]
    ValueInflation(Hash256),
    #[error("coinbase claims {claimed}, allowed {allowed}")]
    BadCoinbaseValue { claimed: Amount, allowed: Amount },
    #[error("value overflows 64 bits")]
    ValueOverflow,
}

/// UTXO changes produced by a valid block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDelta {
    pub hash: Hash256,
    pub height: u32,
    /// Outpoints removed from the pre-block UTXO set.
    pub spent: Vec<OutPoint>,
    /// Outputs added, sorted by outpoint. Outputs created and spent within
    /// the block appear in neither list.
    pub created: Vec<(OutPoint, Coin)>,
}

/// Legacy signature-operation count of a script.
pub fn count_sigops(script: &[u8]) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i < script.len() {
        let op = script[i];
        i += 1;
        let skip = match op {
            1..=0x4b => op as usize,
            0x4c => script.get(i).map_or(usize::MAX, |&n| 1 + n as usize),
            0x4d => script.get(i..i + 2).map_or(usize::MAX, |b| 2 + u16::from_le_bytes([b[0], b[1]]) as usize),
            0x4e => script
                .get(i..i + 4)
                .map_or(usize::MAX, |b| 4usize.saturating_add(u32::from_le_bytes(b.try_into().unwrap()) as usize)),
            OP_CHECKSIG | 0xad => {
                count += 1;
                0
            }
            0xae | 0xaf => {
                count += 20;
                0
            }
            _ => 0,
        };
        i = i.saturating_add(skip);
    }
    count
}

fn tx_sigops(tx: &Transaction) -> usize {
    let ins: usize = tx.inputs.iter().map(|i| count_sigops(&i.script_sig)).sum();
    ins + tx.outputs.iter().map(|o| count_sigops(&o.script_pubkey)).sum::<usize>()
}

pub(crate) fn is_unspendable(script: &[u8]) -> bool {
    script.first() == Some(&OP_RETURN)
}

/// Checks `block` against the current tip of `state`.
///
/// The block whose parent is the genesis block is block one: it may hold
/// any number of coinbase transactions and is exempt from the size, sigop
/// and transaction-count limits. If a checkpoint is configured it must
/// match exactly. Every other block follows the standard rules.
pub fn validate_block(block: &Block, state: &ChainState) -> Result<BlockDelta, ValidationError> {
    let params = state.params();
    let hash = block.block_hash();
    if state.contains_block(&hash) {
        return Err(ValidationError::AlreadyKnown(hash));
    }
    let tip = state.tip();
    let height = match tip {
        None if block.header.prev_hash == Hash256::ZERO => 0,
        Some(t) if block.header.prev_hash == t.hash => t.height + 1,
        _ => {
            return Err(ValidationError::NotExtendingTip { prev: block.header.prev_hash, tip: tip.map(|t| t.hash) });
        }
    };
    let relaxed = state.genesis_hash() == Some(block.header.prev_hash);

    if relaxed {
        if let Some(expected) = params.block_one_checkpoint {
            check_checkpoint(block, expected)?;
        }
    }

    if block.header.bits != params.bits || !block.header.meets_target() {
        return Err(ValidationError::BadPoW);
    }
    let root = block.compute_merkle_root().map_err(|_| ValidationError::EmptyBlock)?;
    if root != block.header.merkle_root {
        return Err(ValidationError::BadMerkleRoot);
    }
    if !block.transactions[0].is_coinbase() {
        return Err(ValidationError::MissingCoinbase);
    }
    if !relaxed {
        if let Some(index) = block.transactions.iter().skip(1).position(Transaction::is_coinbase) {
            return Err(ValidationError::MultipleCoinbases { index: index + 1 });
        }
        let count = block.transactions.len();
        if count > params.max_block_txs {
            return Err(ValidationError::TooManyTransactions { count, limit: params.max_block_txs });
        }
        let size = block.serialize().len();
        if size > params.max_block_size {
            return Err(ValidationError::OversizeBlock { size, limit: params.max_block_size });
        }
        let sigops: usize = block.transactions.iter().map(tx_sigops).sum();
        if sigops > params.max_block_sigops {
            return Err(ValidationError::TooManySigops { count: sigops, limit: params.max_block_sigops });
        }
    }

    let mut txids = HashSet::with_capacity(block.transactions.len());
    let mut created: HashMap<OutPoint, Coin> = HashMap::new();
    let mut spent_base = Vec::new();
    let mut spent_all: HashSet<OutPoint> = HashSet::new();
    let mut fees = Amount::ZERO;
    let mut coinbase_total = Amount::ZERO;

    for tx in &block.transactions {
        let txid = tx.txid();
        if !txids.insert(txid) {
            return Err(ValidationError::DuplicateTxid(txid));
        }
        if tx.is_coinbase() {
            let value = tx.total_output().ok_or(ValidationError::ValueOverflow)?;
            coinbase_total = coinbase_total.checked_add(value).ok_or(ValidationError::ValueOverflow)?;
        } else {
            let mut input_total = Amount::ZERO;
            for (index, input) in tx.inputs.iter().enumerate() {
                let prevout = input.prevout;
                if !spent_all.insert(prevout) {
                    return Err(ValidationError::DoubleSpend(prevout));
                }
                let coin = match created.remove(&prevout) {
                    Some(coin) => coin,
                    None => {
                        let coin = state.coin(&prevout).ok_or(ValidationError::MissingInput(prevout))?;
                        spent_base.push(prevout);
                        coin.clone()
                    }
                };
                let ctx = ScriptContext {
                    tx,
                    input_index: index,
                    prevout_script: &coin.script_pubkey,
                    prevout_value: coin.value,
                };
                match verify_input(&ctx) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Err(ValidationError::ScriptFailure { txid, input: index, reason: "signature check failed".into() })
                    }
                    Err(e) => return Err(ValidationError::ScriptFailure { txid, input: index, reason: e.to_string() }),
                }
                input_total = input_total.checked_add(coin.value).ok_or(ValidationError::ValueOverflow)?;
            }
            let output_total = tx.total_output().ok_or(ValidationError::ValueOverflow)?;
            let fee = input_total.checked_sub(output_total).ok_or(ValidationError::ValueInflation(txid))?;
            fees = fees.checked_add(fee).ok_or(ValidationError::ValueOverflow)?;
        }
        for (vout, output) in tx.outputs.iter().enumerate() {
            if is_unspendable(&output.script_pubkey) {
                continue;
            }
            let outpoint = OutPoint::new(txid, vout as u32);
            if state.coin(&outpoint).is_some() {
                return Err(ValidationError::DuplicateTxid(txid));
            }
            created.insert(outpoint, Coin { value: output.value, script_pubkey: output.script_pubkey.clone(), height });
        }
    }

    if !relaxed {
        let allowed = params.subsidy.checked_add(fees).ok_or(ValidationError::ValueOverflow)?;
        if coinbase_total > allowed {
            return Err(ValidationError::BadCoinbaseValue { claimed: coinbase_total, allowed });
        }
    }

    let mut created: Vec<(OutPoint, Coin)> = created.into_iter().collect();
    created.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(BlockDelta { hash, height, spent: spent_base, created })
}

/// Compares both the header hash and the hash of the header rebuilt around
/// the body's actual merkle root, so a mutated body cannot hide behind an
/// untouched header.
fn check_checkpoint(block: &Block, expected: Hash256) -> Result<(), ValidationError> {
    let got = block.block_hash();
    if got != expected {
        return Err(ValidationError::CheckpointMismatch { expected, got });
    }
    let mut header = block.header;
    header.merkle_root = block.compute_merkle_root().map_err(|_| ValidationError::EmptyBlock)?;
    let rebuilt = header.block_hash();
    if rebuilt != expected {
        return Err(ValidationError::CheckpointMismatch { expected, got: rebuilt });
    }
    Ok(())
}
