use thiserror::Error;

use crate::model::pow::Target;
use crate::model::{Amount, Block, BlockHeader, Hash160, Hash256, OutPoint, Transaction, TxIn, TxOut};
use crate::script::{p2pkh_script_pubkey, push_data};
use crate::snapshot::{Snapshot, SnapshotEntry};

use super::params::ChainParams;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MiningError {
    #[error("nonce space exhausted without a solution; bump the timestamp")]
    NonceExhausted,
    #[error("bits {0:#010x} do not encode a positive target")]
    InvalidBits(u32),
    #[error("block one needs at least one snapshot entry")]
    EmptySnapshot,
    #[error("snapshot balances overflow 64 bits")]
    ValueOverflow,
}

/// Searches nonces from `header.nonce` up to `u32::MAX`. Returns the number
/// of hashes tried.
pub fn mine_header(header: &mut BlockHeader) -> Result<u64, MiningError> {
    let target = Target::from_compact(header.bits).ok_or(MiningError::InvalidBits(header.bits))?;
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        if target.is_met_by(&header.block_hash()) {
            return Ok(attempts);
        }
        header.nonce = header.nonce.checked_add(1).ok_or(MiningError::NonceExhausted)?;
    }
}

/// Fills in the merkle root and mines the header in place.
pub fn assemble_and_mine(
    prev_hash: Hash256,
    time: u32,
    bits: u32,
    start_nonce: u32,
    transactions: Vec<Transaction>,
) -> Result<Block, MiningError> {
    let merkle_root = crate::model::merkle_root(transactions.iter().map(Transaction::txid).collect())
        .expect("caller supplies a coinbase");
    let mut header = BlockHeader { version: 1, prev_hash, merkle_root, time, bits, nonce: start_nonce };
    mine_header(&mut header)?;
    Ok(Block { header, transactions })
}

/// Output script of the genesis coinbase. Nobody holds the zero hash.
pub fn genesis_output_script() -> Vec<u8> {
    p2pkh_script_pubkey(&Hash160([0; 20]))
}

pub fn genesis_coinbase(params: &ChainParams, message: &str) -> Transaction {
    let script_sig = [push_data(&params.bits.to_le_bytes()), push_data(&[4]), push_data(message.as_bytes())].concat();
    Transaction {
        version: 1,
        inputs: vec![TxIn::new(OutPoint::NULL, script_sig)],
        outputs: vec![TxOut::new(params.subsidy, genesis_output_script())],
        lock_time: 0,
    }
}

/// Mines the genesis block, starting from `params.genesis_nonce`.
pub fn mine_genesis(params: &ChainParams, time: u32, message: &str) -> Result<Block, MiningError> {
    assemble_and_mine(Hash256::ZERO, time, params.bits, params.genesis_nonce, vec![genesis_coinbase(params, message)])
}

/// The block-one transaction for the snapshot entry at `index`. Its txid
/// depends only on the entry and its position, so claimants can recompute
/// it from the snapshot file.
pub fn snapshot_transaction(entry: &SnapshotEntry, index: u32) -> Transaction {
    let script_sig = [push_data(&entry.hash160.0), push_data(&index.to_le_bytes())].concat();
    Transaction {
        version: 1,
        inputs: vec![TxIn::new(OutPoint::NULL, script_sig)],
        outputs: vec![TxOut::new(entry.balance, p2pkh_script_pubkey(&entry.hash160))],
        lock_time: 0,
    }
}

/// Builds and mines block one: one coinbase-style transaction per entry.
pub fn build_block_one(
    snapshot: &Snapshot,
    genesis_hash: Hash256,
    params: &ChainParams,
    time: u32,
    start_nonce: u32,
) -> Result<Block, MiningError> {
    if snapshot.is_empty() {
        return Err(MiningError::EmptySnapshot);
    }
    snapshot.total().ok_or(MiningError::ValueOverflow)?;
    let txs = snapshot
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| snapshot_transaction(e, i as u32))
        .collect();
    assemble_and_mine(genesis_hash, time, params.bits, start_nonce, txs)
}

/// A standard coinbase for `height` paying `value` to `script`.
pub fn standard_coinbase(height: u32, value: Amount, script: Vec<u8>) -> Transaction {
    Transaction {
        version: 1,
        inputs: vec![TxIn::new(OutPoint::NULL, [push_data(&height.to_le_bytes()), push_data(b"sidecoin")].concat())],
        outputs: vec![TxOut::new(value, script)],
        lock_time: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn entry(byte: u8, sat: u64) -> SnapshotEntry {
        SnapshotEntry::new(Amount::from_sat(sat), Hash160([byte; 20]))
    }

    #[test]
    fn genesis_is_deterministic_and_meets_target() {
        let params = ChainParams::regtest();
        let a = mine_genesis(&params, params.genesis_time, &params.genesis_message).unwrap();
        let b = mine_genesis(&params, params.genesis_time, &params.genesis_message).unwrap();
        assert_eq!(a.block_hash(), b.block_hash());
        assert!(a.header.meets_target());
        assert_eq!(a.header.merkle_root, a.transactions[0].txid());
        // restarting from the found nonce takes one attempt
        let mut header = a.header;
        assert_eq!(mine_header(&mut header).unwrap(), 1);
    }

    fn mean_attempts(params: &ChainParams, trials: u32) -> f64 {
        let total: u64 = (0..trials)
            .map(|t| {
                let block = Block { header: BlockHeader::default(), transactions: vec![genesis_coinbase(params, &format!("trial {t}"))] };
                let mut header = BlockHeader { merkle_root: block.compute_merkle_root().unwrap(), bits: params.bits, ..Default::default() };
                mine_header(&mut header).unwrap()
            })
            .sum();
        total as f64 / trials as f64
    }

    #[test]
    fn attempt_distribution_matches_target() {
        // Geometric with p ~ 0.5: mean 2, sd of the 400-trial mean ~0.07.
        let regtest = mean_attempts(&ChainParams::regtest(), 400);
        assert!((1.6..2.4).contains(&regtest), "{regtest}");
        // p = 65535/2^24: mean ~256, sd of the 60-trial mean ~33.
        let testnet = mean_attempts(&ChainParams::testnet(), 60);
        assert!((140.0..400.0).contains(&testnet), "{testnet}");
    }

    #[test]
    fn exhausted_nonce_space_is_reported() {
        let mut header = BlockHeader { bits: 0x0300_0001, nonce: u32::MAX - 3, ..Default::default() };
        assert_eq!(mine_header(&mut header), Err(MiningError::NonceExhausted));
    }

    #[test]
    fn single_entry_block_one() {
        let params = ChainParams::regtest();
        let genesis = Hash256([1; 32]);
        let snap = Snapshot { entries: vec![entry(0xaa, 100)], ..Default::default() };
        let block = build_block_one(&snap, genesis, &params, 1, 0).unwrap();
        assert_eq!(block.header.prev_hash, genesis);
        assert_eq!(block.transactions.len(), 1);
        let out = &block.transactions[0].outputs;
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].value, Amount::from_sat(100));
        assert!(hex::encode(&out[0].script_pubkey).ends_with("88ac"));
        assert!(block.transactions[0].is_coinbase());
    }

    #[test]
    fn empty_and_overflowing_snapshots() {
        let params = ChainParams::regtest();
        assert_eq!(build_block_one(&Snapshot::default(), Hash256::ZERO, &params, 0, 0), Err(MiningError::EmptySnapshot));
        let snap = Snapshot { entries: vec![entry(1, u64::MAX), entry(2, 1)], ..Default::default() };
        assert_eq!(build_block_one(&snap, Hash256::ZERO, &params, 0, 0), Err(MiningError::ValueOverflow));
    }

    /// Hand-serializes the expected block-one transaction for an entry.
    fn oracle_txid(hash: &[u8; 20], index: u32, sat: u64) -> Hash256 {
        let mut raw = vec![1, 0, 0, 0, 1];
        raw.extend([0u8; 32]);
        raw.extend([0xff; 4]);
        raw.push(26);
        raw.push(20);
        raw.extend(hash);
        raw.push(4);
        raw.extend(index.to_le_bytes());
        raw.extend([0xff; 4]);
        raw.push(1);
        raw.extend(sat.to_le_bytes());
        raw.extend([25, 0x76, 0xa9, 20]);
        raw.extend(hash);
        raw.extend([0x88, 0xac, 0, 0, 0, 0]);
        Hash256(crate::model::sha256d(&raw))
    }

    #[test]
    fn thousand_entry_txids_are_distinct_and_recoverable() {
        let entries: Vec<SnapshotEntry> = (0..1000u32)
            .map(|i| {
                let mut h = [0u8; 20];
                h[..4].copy_from_slice(&i.to_be_bytes());
                SnapshotEntry::new(Amount::from_sat(1_000_000 - i as u64), Hash160(h))
            })
            .collect();
        let snap = Snapshot { entries, ..Default::default() };
        let block = build_block_one(&snap, Hash256([2; 32]), &ChainParams::regtest(), 5, 0).unwrap();
        let txids: HashSet<Hash256> = block.transactions.iter().map(Transaction::txid).collect();
        assert_eq!(txids.len(), 1000);
        for (i, (e, tx)) in snap.entries.iter().zip(&block.transactions).enumerate() {
            assert_eq!(tx.txid(), oracle_txid(&e.hash160.0, i as u32, e.balance.to_sat()));
        }
        let sum: Amount = block.transactions.iter().map(|t| t.total_output().unwrap()).sum();
        assert_eq!(Some(sum), snap.total());
    }
}
