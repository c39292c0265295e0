#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sidecoin::chain::{build_block_one, mine_genesis, ChainParams, ChainState};
use sidecoin::model::SOURCE_ADDRESS_VERSION;
use sidecoin::script::KeyPair;
use sidecoin::snapshot::{Snapshot, SnapshotEntry};
use sidecoin::{Amount, Block};

pub fn keys(seed: u64, n: usize) -> Vec<KeyPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| KeyPair::generate(&mut rng)).collect()
}

/// Snapshot over `keys` with strictly decreasing balances.
pub fn snapshot_for(keys: &[KeyPair]) -> Snapshot {
    let mut entries: Vec<SnapshotEntry> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| SnapshotEntry::new(Amount::from_sat(1_000_000 + 1_000 * (keys.len() - i) as u64), k.hash160()))
        .collect();
    entries.sort_by(|a, b| b.balance.cmp(&a.balance).then(a.hash160.cmp(&b.hash160)));
    assert!(entries.iter().all(|e| e.address == k_addr(e)));
    Snapshot { entries, ..Default::default() }
}

fn k_addr(e: &SnapshotEntry) -> String {
    sidecoin::encode_address(&e.hash160, SOURCE_ADDRESS_VERSION)
}

pub fn genesis_and_block_one(params: &ChainParams, snapshot: &Snapshot) -> (Block, Block) {
    let genesis = mine_genesis(params, params.genesis_time, &params.genesis_message).unwrap();
    let one = build_block_one(snapshot, genesis.block_hash(), params, params.genesis_time + 600, 0).unwrap();
    (genesis, one)
}

/// In-memory chain at height 1.
pub fn chain_at_one(snapshot: &Snapshot) -> (ChainState, Block) {
    let params = ChainParams::regtest();
    let (genesis, one) = genesis_and_block_one(&params, snapshot);
    let mut state = ChainState::in_memory(params);
    state.connect_block(genesis).unwrap();
    state.connect_block(one.clone()).unwrap();
    (state, one)
}
