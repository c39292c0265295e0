//! Single-pass UTXO scan that aggregates unspent P2PKH value per hash160.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use super::blockfile::{list_block_files, BlockFileError, BlockFileReader};
use crate::model::{Amount, Block, Hash160, Hash256, OutPoint};
use crate::script::match_p2pkh;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("block {height} spends unknown outpoint {outpoint}")]
    SpendOfUnknownOutpoint { height: u32, outpoint: OutPoint },
    #[error("block {height} recreates existing outpoint {outpoint}")]
    DuplicateOutpoint { height: u32, outpoint: OutPoint },
    #[error("value overflow while scanning block {height}")]
    ValueOverflow { height: u32 },
    #[error("{path}: {source}")]
    BlockFile { path: String, source: BlockFileError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Aggregate unspent value per payee after scanning a chain prefix.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BalanceMap {
    pub entries: HashMap<Hash160, Amount>,
    /// Unspent value locked in scripts other than P2PKH.
    pub unattributable: Amount,
    pub tip: Hash256,
    /// Number of blocks scanned; the last one has height `blocks - 1`.
    pub blocks: u32,
}

impl BalanceMap {
    pub fn total(&self) -> Amount {
        self.entries.values().copied().sum()
    }

    pub fn get(&self, h: &Hash160) -> Option<Amount> {
        self.entries.get(h).copied()
    }
}

/// Unspent outputs keyed by outpoint, storing only value and payee.
#[derive(Default)]
pub struct UtxoScanner {
    utxos: HashMap<OutPoint, (Amount, Option<Hash160>)>,
    tip: Hash256,
    blocks: u32,
}

impl UtxoScanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn blocks_scanned(&self) -> u32 {
        self.blocks
    }

    pub fn apply_block(&mut self, block: &Block) -> Result<(), ScanError> {
        let height = self.blocks;
        for tx in &block.transactions {
            if !tx.is_coinbase() {
                for input in &tx.inputs {
                    if self.utxos.remove(&input.prevout).is_none() {
                        return Err(ScanError::SpendOfUnknownOutpoint { height, outpoint: input.prevout });
                    }
                }
            }
            let txid = tx.txid();
            for (vout, out) in tx.outputs.iter().enumerate() {
                let outpoint = OutPoint::new(txid, vout as u32);
                let payee = match_p2pkh(&out.script_pubkey);
                if self.utxos.insert(outpoint, (out.value, payee)).is_some() {
                    return Err(ScanError::DuplicateOutpoint { height, outpoint });
                }
            }
        }
        self.tip = block.block_hash();
        self.blocks += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<BalanceMap, ScanError> {
        let overflow = || ScanError::ValueOverflow { height: self.blocks.saturating_sub(1) };
        let mut entries: HashMap<Hash160, Amount> = HashMap::new();
        let mut unattributable = Amount::ZERO;
        for (value, payee) in self.utxos.into_values() {
            let slot = match payee {
                Some(h) => entries.entry(h).or_default(),
                None => &mut unattributable,
            };
            *slot = slot.checked_add(value).ok_or_else(overflow)?;
        }
        entries.retain(|_, v| *v > Amount::ZERO);
        Amount::checked_sum(entries.values().copied().chain([unattributable])).ok_or_else(overflow)?;
        Ok(BalanceMap { entries, unattributable, tip: self.tip, blocks: self.blocks })
    }
}

/// Scans blocks in chain order.
pub fn scan_utxos<'a, I>(blocks: I) -> Result<BalanceMap, ScanError>
where
    I: IntoIterator<Item = &'a Block>,
{
    let mut scanner = UtxoScanner::new();
    for block in blocks {
        scanner.apply_block(block)?;
    }
    scanner.finish()
}

/// Streams every `blk*.dat` in `dir` through the scanner, stopping after
/// height `max_block` when given.
pub fn scan_block_dir(dir: &Path, magic: [u8; 4], max_block: Option<u32>) -> Result<BalanceMap, ScanError> {
    let mut scanner = UtxoScanner::new();
    'files: for path in list_block_files(dir)? {
        let reader = BlockFileReader::open(&path, magic)?;
        for block in reader {
            if max_block.is_some_and(|max| scanner.blocks_scanned() > max) {
                break 'files;
            }
            let block = block.map_err(|source| ScanError::BlockFile { path: path.display().to_string(), source })?;
            scanner.apply_block(&block)?;
        }
    }
    scanner.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlockHeader, Transaction, TxIn, TxOut};
    use crate::script::p2pkh_script_pubkey;
    use crate::source::generator::{generate_blocks, generate_source_chain, SourceChainConfig, BURN_SCRIPT};
    use proptest::prelude::*;

    fn block_of(txs: Vec<Transaction>) -> Block {
        let mut b = Block {
            header: BlockHeader { version: 1, prev_hash: Hash256::ZERO, merkle_root: Hash256::ZERO, time: 0, bits: 0x207f_ffff, nonce: 0 },
            transactions: txs,
        };
        b.header.merkle_root = b.compute_merkle_root().unwrap();
        b
    }

    fn coinbase(to: Hash160, sat: u64, tag: u8) -> Transaction {
        Transaction {
            version: 1,
            inputs: vec![TxIn::new(OutPoint::NULL, vec![tag])],
            outputs: vec![TxOut::new(Amount::from_sat(sat), p2pkh_script_pubkey(&to))],
            lock_time: 0,
        }
    }

    fn spend(prev: &Transaction, outputs: Vec<TxOut>) -> Transaction {
        Transaction {
            version: 1,
            inputs: vec![TxIn::new(OutPoint::new(prev.txid(), 0), vec![])],
            outputs,
            lock_time: 0,
        }
    }

    const A: Hash160 = Hash160([0xaa; 20]);
    const B: Hash160 = Hash160([0xbb; 20]);

    #[test]
    fn single_coinbase() {
        let map = scan_utxos(&[block_of(vec![coinbase(A, 5_000_000_000, 0)])]).unwrap();
        assert_eq!(map.entries.len(), 1);
        assert_eq!(map.get(&A), Some(Amount::from_sat(5_000_000_000)));
    }

    #[test]
    fn full_spend_removes_sender() {
        let cb = coinbase(A, 5_000_000_000, 0);
        let tx = spend(&cb, vec![TxOut::new(Amount::from_sat(5_000_000_000), p2pkh_script_pubkey(&B))]);
        let map = scan_utxos(&[block_of(vec![cb]), block_of(vec![coinbase(B, 0, 1), tx])]).unwrap();
        assert_eq!(map.get(&A), None);
        assert_eq!(map.get(&B), Some(Amount::from_sat(5_000_000_000)));
        assert_eq!(map.entries.len(), 1, "zero-value outputs are not retained");
    }

    #[test]
    fn non_p2pkh_value_is_bucketed() {
        let cb = coinbase(A, 100, 0);
        let tx = spend(&cb, vec![
            TxOut::new(Amount::from_sat(30), BURN_SCRIPT.to_vec()),
            TxOut::new(Amount::from_sat(60), p2pkh_script_pubkey(&B)),
        ]);
        let map = scan_utxos(&[block_of(vec![cb, tx])]).unwrap();
        assert_eq!(map.unattributable, Amount::from_sat(30));
        assert_eq!(map.total(), Amount::from_sat(60));
    }

    #[test]
    fn unknown_and_duplicate_outpoints() {
        let cb = coinbase(A, 100, 0);
        let orphan = spend(&coinbase(B, 1, 9), vec![TxOut::new(Amount::from_sat(1), vec![])]);
        assert!(matches!(
            scan_utxos(&[block_of(vec![cb.clone(), orphan])]),
            Err(ScanError::SpendOfUnknownOutpoint { height: 0, .. })
        ));
        assert!(matches!(
            scan_utxos(&[block_of(vec![cb.clone()]), block_of(vec![cb])]),
            Err(ScanError::DuplicateOutpoint { height: 1, .. })
        ));
    }

    #[test]
    fn generated_chain_matches_ledger() {
        let config = SourceChainConfig { seed: 7, num_blocks: 100, addresses: 50, spend_fraction: 0.3, ..Default::default() };
        let chain = generate_blocks(&config).unwrap();
        let map = scan_utxos(&chain.blocks).unwrap();
        let ledger: HashMap<_, _> = chain.ledger.balances.clone().into_iter().collect();
        assert_eq!(map.entries, ledger);
        assert!(chain.ledger.burned > Amount::ZERO);
        assert_eq!(
            map.total().checked_add(chain.ledger.burned),
            Amount::from_coins(50 * 100).into()
        );
        assert_eq!(map.unattributable, chain.ledger.burned);
        assert_eq!(map.blocks, 100);
        assert_eq!(map.tip, chain.tip());
    }

    #[test]
    fn directory_scan_respects_max_block() {
        let config = SourceChainConfig { seed: 4, num_blocks: 12, addresses: 3, spend_fraction: 0.0, ..Default::default() };
        let dir = tempfile::tempdir().unwrap();
        let (chain, _) = generate_source_chain(&config, dir.path()).unwrap();
        let full = scan_block_dir(dir.path(), super::super::SOURCE_MAGIC, None).unwrap();
        assert_eq!(full, scan_utxos(&chain.blocks).unwrap());
        let partial = scan_block_dir(dir.path(), super::super::SOURCE_MAGIC, Some(4)).unwrap();
        assert_eq!(partial.blocks, 5);
        assert_eq!(partial.total(), Amount::from_coins(250));
        assert_eq!(partial.tip, chain.blocks[4].block_hash());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reversed_dependent_chain_fails(seed in any::<u64>()) {
            let config = SourceChainConfig { seed, num_blocks: 12, addresses: 4, spend_fraction: 0.8, ..Default::default() };
            let chain = generate_blocks(&config).unwrap();
            let has_spends = chain.blocks.iter().skip(1).any(|b| b.transactions.len() > 1);
            prop_assume!(has_spends);
            let reversed: Vec<_> = chain.blocks.iter().rev().collect();
            let is_unknown_spend = matches!(
                scan_utxos(reversed),
                Err(ScanError::SpendOfUnknownOutpoint { .. })
            );
            prop_assert!(is_unknown_spend);
        }
    }
}
