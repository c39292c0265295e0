use std::collections::HashMap;

use crate::model::{Block, Hash256, OutPoint, Transaction};

/// Accepted but unconfirmed transactions, in arrival order.
#[derive(Default)]
pub struct Mempool {
    txs: Vec<(Hash256, Transaction)>,
    spends: HashMap<OutPoint, Hash256>,
}

impl Mempool {
    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    pub fn contains(&self, txid: &Hash256) -> bool {
        self.txs.iter().any(|(id, _)| id == txid)
    }

    /// The pooled transaction already spending `outpoint`, if any.
    pub fn spender_of(&self, outpoint: &OutPoint) -> Option<Hash256> {
        self.spends.get(outpoint).copied()
    }

    /// Caller has checked for conflicts.
    pub fn insert(&mut self, tx: Transaction) -> Hash256 {
        let txid = tx.txid();
        for input in &tx.inputs {
            self.spends.insert(input.prevout, txid);
        }
        self.txs.push((txid, tx));
        txid
    }

    /// Up to `max` transactions in arrival order.
    pub fn select(&self, max: usize) -> Vec<Transaction> {
        self.txs.iter().take(max).map(|(_, tx)| tx.clone()).collect()
    }

    /// Drops everything the block confirmed or conflicts with.
    pub fn remove_for_block(&mut self, block: &Block) {
        let spent: std::collections::HashSet<OutPoint> =
            block.transactions.iter().flat_map(|tx| tx.inputs.iter().map(|i| i.prevout)).collect();
        self.txs.retain(|(_, tx)| !tx.inputs.iter().any(|i| spent.contains(&i.prevout)));
        self.spends = self
            .txs
            .iter()
            .flat_map(|(id, tx)| tx.inputs.iter().map(move |i| (i.prevout, *id)))
            .collect();
    }
}
