//! Deterministic synthetic source chain.
//!
//! Every block has one coinbase paying the subsidy to a random registry key.
//! Existing P2PKH outputs are re-spent with probability `spend_fraction`,
//! properly signed, into one or two P2PKH outputs and occasionally an
//! `OP_RETURN` burn. Transactions carry no fee. The generator keeps its own
//! running ledger, independent of the scanner, as the test oracle.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::blockfile::{BlockFileWriter, SOURCE_MAGIC};
use super::keys::{KeyRecord, KeyRegistry};
use crate::model::{
    Amount, Block, BlockHeader, Hash160, Hash256, OutPoint, Transaction, TxIn, TxOut,
};
use crate::script::{p2pkh_script_pubkey, push_data, sign_p2pkh_input, KeyPair, OP_RETURN};

/// Script of burn outputs: `OP_RETURN <"burn">`.
pub const BURN_SCRIPT: &[u8] = &[OP_RETURN, 4, b'b', b'u', b'r', b'n'];

/// File name of the key registry written next to the block files.
pub const KEY_REGISTRY_FILE: &str = "keys.tsv";

const GENESIS_TIME: u32 = 1_231_006_505;
const SOURCE_BITS: u32 = 0x207f_ffff;
const MAX_SPENDS_PER_BLOCK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct SourceChainConfig {
    pub seed: u64,
    pub num_blocks: u32,
    pub addresses: u32,
    pub subsidy: Amount,
    pub spend_fraction: f64,
}

impl Default for SourceChainConfig {
    fn default() -> Self {
        SourceChainConfig {
            seed: 1,
            num_blocks: 100,
            addresses: 50,
            subsidy: Amount::from_coins(50),
            spend_fraction: 0.3,
        }
    }
}

impl SourceChainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.addresses == 0 {
            return Err("addresses must be at least 1".into());
        }
        if self.num_blocks == 0 {
            return Err("num_blocks must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.spend_fraction) {
            return Err("spend_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// The generator's own record of where value went.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ledger {
    pub balances: BTreeMap<Hash160, Amount>,
    pub burned: Amount,
    pub subsidies: Amount,
}

impl Ledger {
    fn credit(&mut self, h: Hash160, value: Amount) {
        let slot = self.balances.entry(h).or_default();
        *slot = slot.checked_add(value).expect("ledger overflow");
    }

    fn debit(&mut self, h: Hash160, value: Amount) {
        let slot = self.balances.get_mut(&h).expect("debit of unknown holder");
        *slot = slot.checked_sub(value).expect("ledger underflow");
        if *slot == Amount::ZERO {
            self.balances.remove(&h);
        }
    }

    pub fn total(&self) -> Amount {
        self.balances.values().copied().sum()
    }
}

pub struct GeneratedChain {
    pub blocks: Vec<Block>,
    pub registry: KeyRegistry,
    pub ledger: Ledger,
}

impl GeneratedChain {
    pub fn tip(&self) -> Hash256 {
        self.blocks.last().map(Block::block_hash).unwrap_or_default()
    }
}

struct Coin {
    outpoint: OutPoint,
    value: Amount,
    owner: usize,
}

/// Builds the chain in memory.
pub fn generate_blocks(config: &SourceChainConfig) -> Result<GeneratedChain, String> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let keys: Vec<KeyPair> = (0..config.addresses).map(|_| KeyPair::generate(&mut rng)).collect();
    let hashes: Vec<Hash160> = keys.iter().map(KeyPair::hash160).collect();
    let scripts: Vec<Vec<u8>> = hashes.iter().map(p2pkh_script_pubkey).collect();

    let mut ledger = Ledger::default();
    let mut pool: Vec<Coin> = Vec::new();
    let mut blocks = Vec::with_capacity(config.num_blocks as usize);
    let mut prev_hash = Hash256::ZERO;

    for height in 0..config.num_blocks {
        let payee = rng.gen_range(0..keys.len());
        let coinbase = Transaction {
            version: 1,
            inputs: vec![TxIn::new(
                OutPoint::NULL,
                [push_data(&height.to_le_bytes()), push_data(b"synthetic")].concat(),
            )],
            outputs: vec![TxOut::new(config.subsidy, scripts[payee].clone())],
            lock_time: 0,
        };
        ledger.credit(hashes[payee], config.subsidy);
        ledger.subsidies = ledger.subsidies.checked_add(config.subsidy).expect("subsidy overflow");
        let mut fresh = vec![Coin { outpoint: OutPoint::new(coinbase.txid(), 0), value: config.subsidy, owner: payee }];
        let mut txs = vec![coinbase];

        // Pick spends among coins from earlier blocks.
        let mut chosen = Vec::new();
        let mut kept = Vec::with_capacity(pool.len());
        for coin in pool.drain(..) {
            if chosen.len() < MAX_SPENDS_PER_BLOCK && rng.gen_bool(config.spend_fraction) {
                chosen.push(coin);
            } else {
                kept.push(coin);
            }
        }
        pool = kept;

        let mut queue = chosen.into_iter().peekable();
        while let Some(first) = queue.next() {
            let mut inputs = vec![first];
            if rng.gen_bool(0.3) {
                if let Some(second) = queue.next() {
                    inputs.push(second);
                }
            }
            let (tx, outputs) = build_spend(&mut rng, &inputs, &keys, &scripts, &mut ledger, &hashes);
            // Occasionally spend one of the new outputs within the same block.
            let mut created: Vec<Coin> = outputs;
            if !created.is_empty() && rng.gen_bool(config.spend_fraction / 2.0) {
                let idx = rng.gen_range(0..created.len());
                let coin = created.swap_remove(idx);
                txs.push(tx);
                let (child, child_outputs) =
                    build_spend(&mut rng, &[coin], &keys, &scripts, &mut ledger, &hashes);
                txs.push(child);
                fresh.extend(created);
                fresh.extend(child_outputs);
            } else {
                txs.push(tx);
                fresh.extend(created);
            }
        }
        pool.extend(fresh);

        let mut block = Block {
            header: BlockHeader {
                version: 1,
                prev_hash,
                merkle_root: Hash256::ZERO,
                time: GENESIS_TIME + height * 600,
                bits: SOURCE_BITS,
                nonce: 0,
            },
            transactions: txs,
        };
        block.header.merkle_root = block.compute_merkle_root().expect("coinbase present");
        while !block.header.meets_target() {
            block.header.nonce += 1;
        }
        prev_hash = block.block_hash();
        blocks.push(block);
    }

    let registry = KeyRegistry::new(keys.into_iter().map(KeyRecord::new).collect());
    Ok(GeneratedChain { blocks, registry, ledger })
}

fn build_spend(
    rng: &mut ChaCha8Rng,
    inputs: &[Coin],
    keys: &[KeyPair],
    scripts: &[Vec<u8>],
    ledger: &mut Ledger,
    hashes: &[Hash160],
) -> (Transaction, Vec<Coin>) {
    let total: u64 = inputs.iter().map(|c| c.value.to_sat()).sum();
    for coin in inputs {
        ledger.debit(hashes[coin.owner], coin.value);
    }

    let mut remaining = total;
    let mut outputs = Vec::new();
    if remaining > 10 && rng.gen_bool(0.1) {
        let burn = rng.gen_range(1..=remaining / 10);
        remaining -= burn;
        ledger.burned = ledger.burned.checked_add(Amount::from_sat(burn)).unwrap();
        outputs.push((TxOut::new(Amount::from_sat(burn), BURN_SCRIPT.to_vec()), None));
    }
    let split = if remaining >= 2 && rng.gen_bool(0.5) { rng.gen_range(1..remaining) } else { remaining };
    for value in [split, remaining - split] {
        if value == 0 {
            continue;
        }
        let owner = rng.gen_range(0..keys.len());
        ledger.credit(hashes[owner], Amount::from_sat(value));
        outputs.push((TxOut::new(Amount::from_sat(value), scripts[owner].clone()), Some(owner)));
    }

    let mut tx = Transaction {
        version: 1,
        inputs: inputs.iter().map(|c| TxIn::new(c.outpoint, Vec::new())).collect(),
        outputs: outputs.iter().map(|(o, _)| o.clone()).collect(),
        lock_time: 0,
    };
    for (i, coin) in inputs.iter().enumerate() {
        sign_p2pkh_input(&mut tx, i, &scripts[coin.owner], coin.value, &keys[coin.owner])
            .expect("input index in range");
    }
    let txid = tx.txid();
    let coins = outputs
        .iter()
        .enumerate()
        .filter_map(|(vout, (out, owner))| {
            owner.map(|owner| Coin { outpoint: OutPoint::new(txid, vout as u32), value: out.value, owner })
        })
        .collect();
    (tx, coins)
}

/// Writes the chain as `blk*.dat` files plus `keys.tsv` into `dir`.
pub fn generate_source_chain(
    config: &SourceChainConfig,
    dir: &Path,
) -> io::Result<(GeneratedChain, Vec<PathBuf>)> {
    let chain = generate_blocks(config).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let mut writer = BlockFileWriter::create(dir, SOURCE_MAGIC)?;
    for block in &chain.blocks {
        writer.append(block)?;
    }
    let files = writer.finish()?;
    chain.registry.write(&dir.join(KEY_REGISTRY_FILE))?;
    Ok((chain, files))
}
