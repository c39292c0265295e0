//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails other than the documented known failure.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sidecoin::chain::{
    bootstrap, build_block_one, mine_header, snapshot_path, standard_coinbase, BootstrapConfig, ChainParams, ChainState,
    ChainStore, ConnectError, ValidationError,
};
use sidecoin::claim::{sign_claim, ClaimBundle, ClaimError, Node};
use sidecoin::model::{decode_address, encode_address, Hash160};
use sidecoin::script::{p2pkh_script_pubkey, sign_p2pkh_input, KeyPair};
use sidecoin::snapshot::{
    build_snapshot, read_snapshot_file, write_snapshot_file, Snapshot, SnapshotEntry, DEFAULT_DUST_THRESHOLD,
};
use sidecoin::source::{generate_blocks, scan_utxos, SourceChainConfig};
use sidecoin::{Amount, Block, Transaction};

/// Criteria expected to fail, with the reason. See the project notes.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    1,
    "the example row's address encodes a different hash160 than the one printed beside it",
)];

const C1_TIME_LIMIT: Duration = Duration::from_millis(1);
const C4_TIME_LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn c1_address_codec() -> Outcome {
    let hash: Hash160 = "8c1d15231afa4868330f8af694ba637b69fdc2d7".parse().unwrap();
    let expected = "14CKu2rJN2f8fdPrtmRLWChhXESgN5qaA7";
    let start = Instant::now();
    let rounds = 10_000;
    let mut encoded = String::new();
    for _ in 0..rounds {
        encoded = encode_address(&hash, 0x00);
        std::hint::black_box(decode_address(&encoded).unwrap());
    }
    let per_round = start.elapsed() / rounds;
    check(per_round < C1_TIME_LIMIT, format!("encode+decode took {per_round:?}"))?;
    check(decode_address(&encoded).unwrap() == (0, hash), "encoding does not round-trip")?;
    let (_, printed_hash) = decode_address(expected).map_err(|e| e.to_string())?;
    check(
        encoded == expected,
        format!("encodes to {encoded}, expected {expected}; {expected} decodes to hash160 {printed_hash}"),
    )?;
    Ok(format!("{encoded}, round-trip ok, {per_round:?} per encode+decode"))
}

fn c2_transaction_decode() -> Outcome {
    let hex = "0100000001ec70650bf05a75d62f3bcf83d183064e118d39070c2a7237d33ee9a4d4930da20000000000ffffffff01606b042a010000001976a914345cd34789f945f0cbd952ce254bf5246e63be0c88ac00000000";
    let tx = Transaction::from_hex(hex).map_err(|e| e.to_string())?;
    check(tx.inputs.len() == 1 && tx.outputs.len() == 1, "expected 1 input and 1 output")?;
    let input = &tx.inputs[0];
    check(
        input.prevout.txid.to_string() == "a20d93d4a4e93ed337722a0c07398d114e0683d183cf3b2fd6755af00b6570ec",
        format!("prevout txid {}", input.prevout.txid),
    )?;
    check(input.prevout.vout == 0 && input.script_sig.is_empty(), "vout or scriptSig wrong")?;
    let out = &tx.outputs[0];
    check(out.value == Amount::from_sat(4_999_900_000), format!("value {}", out.value))?;
    check(
        hex::encode(&out.script_pubkey) == "76a914345cd34789f945f0cbd952ce254bf5246e63be0c88ac",
        "scriptPubKey differs",
    )?;
    check(tx.to_hex() == hex, "re-serialization differs")?;
    Ok("1 in / 1 out, 4,999,900,000 sat, byte-identical re-serialization".into())
}

fn c3_snapshot_format() -> Outcome {
    let entry = SnapshotEntry {
        balance: Amount::from_sat(180_893_019_187),
        hash160: "8c1d15231afa4868330f8af694ba637b69fdc2d7".parse().unwrap(),
        address: "14CKu2rJN2f8fdPrtmRLWChhXESgN5qaA7".into(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("example.txt");
    write_snapshot_file(&Snapshot { entries: vec![entry], ..Default::default() }, &path).unwrap();
    let expected = "180893019187.00000000\t8c1d15231afa4868330f8af694ba637b69fdc2d7\t14CKu2rJN2f8fdPrtmRLWChhXESgN5qaA7\n";
    check(std::fs::read_to_string(&path).unwrap() == expected, "example line differs")?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..50 {
        let ks = common::keys(trial, rng.gen_range(0..40));
        let snap = common::snapshot_for(&ks);
        let canonical = dir.path().join(format!("c{trial}.txt"));
        write_snapshot_file(&snap, &canonical).unwrap();
        let bytes = std::fs::read(&canonical).unwrap();
        let back = read_snapshot_file(&canonical).map_err(|e| e.to_string())?;
        let rewritten = dir.path().join(format!("r{trial}.txt"));
        write_snapshot_file(&back, &rewritten).unwrap();
        check(std::fs::read(&rewritten).unwrap() == bytes, format!("trial {trial}: read->write not identical"))?;
    }
    Ok("example line byte-exact; read->write identity on 50 canonical files".into())
}

struct Spinoff {
    _dir: tempfile::TempDir,
    node: Node,
    registry: sidecoin::source::KeyRegistry,
}

fn spinoff(seed: u64, blocks: u32, addresses: u32, dust: Amount) -> Spinoff {
    let chain = generate_blocks(&SourceChainConfig { seed, num_blocks: blocks, addresses, ..Default::default() }).unwrap();
    let balances = scan_utxos(&chain.blocks).unwrap();
    let snapshot = build_snapshot(&balances, addresses as usize, dust, Some(blocks - 1));
    let dir = tempfile::tempdir().unwrap();
    let path = snapshot_path(dir.path());
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    write_snapshot_file(&snapshot, &path).unwrap();
    let boot = bootstrap(dir.path(), &BootstrapConfig { genesis_switch: true, ..Default::default() }, ChainParams::regtest())
        .unwrap();
    let node = Node::with_datadir_wallet(boot.state, boot.snapshot, dir.path()).unwrap();
    Spinoff { _dir: dir, node, registry: chain.registry }
}

fn c4_end_to_end() -> Outcome {
    let start = Instant::now();
    let mut s = spinoff(4, 200, 100, DEFAULT_DUST_THRESHOLD);
    let entries = s.node.snapshot().entries.clone();
    check(entries.len() >= 90, format!("only {} addresses survive the dust filter", entries.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(44);

    // Adversarial attempts before any honest claim.
    let mut accepted_wrong = 0;
    let attempts = 600;
    for attempt in 0..attempts {
        let victim = &entries[rng.gen_range(0..entries.len())];
        let bundle = s.node.claimtx(&victim.address, None, &mut rng).map_err(|e| e.to_string())?;
        let attacker = match attempt % 3 {
            0 => KeyPair::generate(&mut rng),
            // another snapshot holder's real key
            1 => loop {
                let other = &entries[rng.gen_range(0..entries.len())];
                if other.hash160 != victim.hash160 {
                    break s.registry.get(&other.hash160).unwrap().key.clone();
                }
            },
            _ => KeyPair::generate(&mut rng).uncompressed(),
        };
        if sign_claim(&bundle, &attacker).is_ok() {
            accepted_wrong += 1;
        }
        let mut tx = Transaction::from_hex(&bundle.unsigned_hex).unwrap();
        sign_p2pkh_input(&mut tx, 0, &bundle.prevouts[0].script_pubkey, victim.balance, &attacker).unwrap();
        if attempt % 2 == 0 {
            // Pair the forged signature with the owner's pubkey so the hash check passes.
            let owner = &s.registry.get(&victim.hash160).unwrap().key;
            let sig_len = tx.inputs[0].script_sig[0] as usize;
            let sig = tx.inputs[0].script_sig[1..1 + sig_len].to_vec();
            tx.inputs[0].script_sig = sidecoin::script::build_script_sig(&sig, &owner.public_key_bytes());
        }
        if s.node.submit(&tx.to_hex()).is_ok() {
            accepted_wrong += 1;
        }
    }
    check(s.node.mempool().is_empty(), "a forged claim reached the mempool")?;

    let mut accepted = 0;
    for entry in &entries {
        let bundle = s.node.claimtx(&entry.address, None, &mut rng).map_err(|e| e.to_string())?;
        let pasted = ClaimBundle::parse_command(&bundle.to_command()).map_err(|e| e.to_string())?;
        let signed = sign_claim(&pasted, &s.registry.get(&entry.hash160).unwrap().key).map_err(|e| e.to_string())?;
        if s.node.submit(&signed).is_ok() {
            accepted += 1;
        }
    }
    s.node.generate(1).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let snapshot_sum = s.node.snapshot().total().unwrap();
    let claimed = s.node.balance();
    let block_one_left = s
        .node
        .state()
        .utxos()
        .filter(|(_, c)| c.height == 1)
        .count();
    let mined = s.node.state().height().unwrap() - 1;
    let expected_total = snapshot_sum.to_sat() + (1 + mined as u64) * s.node.state().params().subsidy.to_sat();

    check(accepted == entries.len(), format!("{accepted}/{} honest claims accepted", entries.len()))?;
    check(accepted_wrong == 0, format!("{accepted_wrong} forged claims accepted"))?;
    check(claimed == snapshot_sum, format!("claimed {claimed} != snapshot {snapshot_sum}"))?;
    check(block_one_left == 0, format!("{block_one_left} block-one outputs left"))?;
    check(s.node.state().utxo_total().unwrap().to_sat() == expected_total, "UTXO total drifted")?;
    check(elapsed < C4_TIME_LIMIT, format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} addresses, {accepted}/{} claims accepted, 0/{} forged, claimed sum {} sat = snapshot sum, {elapsed:.2?}",
        entries.len(),
        entries.len(),
        attempts * 2,
        claimed
    ))
}

fn c5_double_claim() -> Outcome {
    let mut s = spinoff(5, 200, 100, DEFAULT_DUST_THRESHOLD);
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut entries = s.node.snapshot().entries.clone();
    check(entries.len() >= 50, "fewer than 50 addresses")?;
    // 50 distinct random addresses
    for i in 0..50 {
        let j = rng.gen_range(i..entries.len());
        entries.swap(i, j);
    }
    entries.truncate(50);
    let mut signed = Vec::new();
    for entry in &entries {
        let bundle = s.node.claimtx(&entry.address, None, &mut rng).map_err(|e| e.to_string())?;
        let tx = sign_claim(&bundle, &s.registry.get(&entry.hash160).unwrap().key).map_err(|e| e.to_string())?;
        s.node.submit(&tx).map_err(|e| e.to_string())?;
        signed.push(tx);
    }
    s.node.generate(1).map_err(|e| e.to_string())?;
    let mut rejected = 0;
    for (entry, tx) in entries.iter().zip(&signed) {
        let second = s.node.claimtx(&entry.address, None, &mut rng);
        let resend = s.node.submit(tx);
        if matches!(second, Err(ClaimError::AlreadyClaimed(_))) && matches!(resend, Err(ClaimError::UnknownOutpoint(_))) {
            rejected += 1;
        }
    }
    check(rejected == 50, format!("{rejected}/50 second claims rejected"))?;
    Ok("50/50 second claims rejected (AlreadyClaimed, resubmission UnknownOutpoint)".into())
}

fn remine(block: &mut Block) {
    block.header.merkle_root = block.compute_merkle_root().unwrap();
    block.header.nonce = 0;
    mine_header(&mut block.header).unwrap();
}

fn c6_relaxation_scoping() -> Outcome {
    let ks = common::keys(6, 20);
    let (state, _) = common::chain_at_one(&common::snapshot_for(&ks));
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut rejected = 0;
    for trial in 0..100 {
        let mut block = state.mine_next_block(vec![], p2pkh_script_pubkey(&Hash160(rng.gen()))).unwrap();
        let extra = standard_coinbase(rng.gen(), Amount::from_sat(rng.gen_range(0..1000)), p2pkh_script_pubkey(&Hash160(rng.gen())));
        let at = rng.gen_range(1..=block.transactions.len());
        block.transactions.insert(at, extra);
        // pad with further coinbases on some trials
        for _ in 0..trial % 3 {
            block.transactions.push(standard_coinbase(rng.gen(), Amount::ZERO, vec![0x51]));
        }
        remine(&mut block);
        if matches!(state.validate(&block), Err(ValidationError::MultipleCoinbases { .. })) {
            rejected += 1;
        }
    }
    check(rejected == 100, format!("{rejected}/100 height-2 blocks rejected with MultipleCoinbases"))?;

    let entries: Vec<SnapshotEntry> = (0..10_000u32)
        .map(|i| {
            let mut h = [0u8; 20];
            h[..4].copy_from_slice(&i.to_be_bytes());
            SnapshotEntry::new(Amount::from_sat(20_000_000 - i as u64), Hash160(h))
        })
        .collect();
    let snap = Snapshot { entries, ..Default::default() };
    let params = ChainParams::regtest();
    let (genesis, one) = common::genesis_and_block_one(&params, &snap);
    let size = one.serialize().len();
    let mut state = ChainState::in_memory(params.clone());
    state.connect_block(genesis).unwrap();
    state.connect_block(one).map_err(|e| format!("10,000-coinbase block one rejected: {e}"))?;
    check(size > params.max_block_size, "block one was expected to exceed the standard size")?;
    Ok(format!("100/100 MultipleCoinbases at height 2; 10,000-coinbase block one ({size} bytes) accepted"))
}

fn c7_checkpoint() -> Outcome {
    let ks = common::keys(7, 200);
    let snap = common::snapshot_for(&ks);
    let mut params = ChainParams::regtest();
    let (genesis, one) = common::genesis_and_block_one(&params, &snap);
    params.block_one_checkpoint = Some(one.block_hash());
    let mut state = ChainState::in_memory(params);
    state.connect_block(genesis).unwrap();
    let bytes = one.serialize();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut undecodable, mut checkpoint, mut other) = (0, 0, 0);
    for _ in 0..100 {
        let mut mutated = bytes.clone();
        let at = rng.gen_range(0..mutated.len());
        mutated[at] ^= rng.gen_range(1..=255u8);
        match Block::deserialize(&mutated) {
            Err(_) => undecodable += 1,
            Ok(block) => match state.validate(&block) {
                Err(ValidationError::CheckpointMismatch { .. }) => checkpoint += 1,
                Err(_) => other += 1,
                Ok(_) => return Err(format!("mutation at byte {at} accepted")),
            },
        }
    }
    state.connect_block(one).map_err(|e| e.to_string())?;
    Ok(format!("100/100 mutations rejected ({checkpoint} checkpoint, {undecodable} undecodable, {other} other)"))
}

fn c8_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let params = ChainParams::regtest();
    for trial in 0..200 {
        let config = SourceChainConfig {
            seed: rng.gen(),
            num_blocks: rng.gen_range(1..12),
            addresses: rng.gen_range(1..8),
            subsidy: Amount::from_sat(rng.gen_range(1..10_000_000_000)),
            spend_fraction: rng.gen_range(0.0..=1.0),
        };
        let chain = generate_blocks(&config).unwrap();
        let balances = scan_utxos(&chain.blocks).map_err(|e| format!("trial {trial}: {e}"))?;
        let ledger: std::collections::HashMap<_, _> = chain.ledger.balances.clone().into_iter().collect();
        check(balances.entries == ledger, format!("trial {trial}: balances differ from ledger"))?;
        check(balances.total() == chain.ledger.total(), format!("trial {trial}: totals differ"))?;
        let snap = build_snapshot(&balances, usize::MAX, Amount::from_sat(rng.gen_range(0..100_000)), None);
        if snap.is_empty() {
            continue;
        }
        let one = build_block_one(&snap, sidecoin::Hash256([1; 32]), &params, 0, 0).unwrap();
        let sum: Amount = one.transactions.iter().map(|t| t.total_output().unwrap()).sum();
        check(Some(sum) == snap.total(), format!("trial {trial}: block-one sum differs from snapshot"))?;
    }
    Ok("200/200 configs: scan equals generator ledger; block-one sum equals snapshot sum".into())
}

fn c9_crash_safety() -> Outcome {
    let ks = common::keys(9, 50);
    let snap = common::snapshot_for(&ks);
    let params = ChainParams::regtest();
    let (genesis, one) = common::genesis_and_block_one(&params, &snap);
    let dir = tempfile::tempdir().unwrap();
    let pre = {
        let mut state = ChainState::open(dir.path(), params.clone()).unwrap();
        state.connect_block(genesis).unwrap();
        (state.tip(), state.utxo_count())
    };
    let total = {
        let state = ChainState::open(dir.path(), params.clone()).unwrap();
        ChainStore::append_size(&one, &state.validate(&one).unwrap())
    };
    for point in 0..20u64 {
        let budget = total * point / 20;
        let mut state = ChainState::open(dir.path(), params.clone()).map_err(|e| e.to_string())?;
        state.store_mut().unwrap().inject_fault_after(Some(budget));
        check(
            matches!(state.connect_block(one.clone()), Err(ConnectError::PersistenceFailure(_))),
            format!("fault at byte {budget} not reported"),
        )?;
        drop(state);
        let state = ChainState::open(dir.path(), params.clone()).map_err(|e| e.to_string())?;
        check((state.tip(), state.utxo_count()) == pre, format!("fault at byte {budget}/{total} did not recover"))?;
    }
    Ok(format!("20/20 fault points across {total} bytes recovered the pre-connect state"))
}

fn c10_restart() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = snapshot_path(dir.path());
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    write_snapshot_file(&common::snapshot_for(&common::keys(10, 100)), &path).unwrap();
    let first = bootstrap(dir.path(), &BootstrapConfig { genesis_switch: true, ..Default::default() }, ChainParams::regtest())
        .map_err(|e| e.to_string())?;
    let before = (first.state.tip(), first.state.utxo_digest(), first.state.utxo_count());
    drop(first);
    let second = bootstrap(dir.path(), &BootstrapConfig::default(), ChainParams::regtest()).map_err(|e| e.to_string())?;
    check(!second.mined, "relaunch mined again")?;
    let after = (second.state.tip(), second.state.utxo_digest(), second.state.utxo_count());
    check(after == before, "tip or UTXO digest changed across restart")?;
    Ok(format!("tip {} and UTXO digest {} identical after relaunch", before.0.unwrap().hash, before.1))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "address codec vector", c1_address_codec),
        (2, "transaction decode vector", c2_transaction_decode),
        (3, "snapshot format fidelity", c3_snapshot_format),
        (4, "end-to-end spinoff", c4_end_to_end),
        (5, "double-claim rejection", c5_double_claim),
        (6, "relaxation scoping", c6_relaxation_scoping),
        (7, "checkpoint enforcement", c7_checkpoint),
        (8, "conservation", c8_conservation),
        (9, "crash safety", c9_crash_safety),
        (10, "restart idempotence", c10_restart),
    ];
    let mut unexpected = 0;
    let mut seen = HashSet::new();
    for (id, name, run) in criteria {
        seen.insert(id);
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match (&outcome, known) {
            (Ok(detail), None) => println!("PASS  C{id:<2} {name}: {detail}"),
            (Err(detail), Some(why)) => println!("FAIL  C{id:<2} {name}: {detail} [known: {why}]"),
            (Err(detail), None) => {
                unexpected += 1;
                println!("FAIL  C{id:<2} {name}: {detail}");
            }
            (Ok(detail), Some(_)) => {
                unexpected += 1;
                println!("PASS  C{id:<2} {name}: {detail} [listed as a known failure; update the list]");
            }
        }
    }
    assert!(KNOWN_FAILURES.iter().all(|(k, _)| seen.contains(k)));
    if unexpected > 0 {
        println!("{unexpected} unexpected result(s)");
        std::process::exit(1);
    }
}
