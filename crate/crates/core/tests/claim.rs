use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sidecoin::chain::{bootstrap, snapshot_path, BootstrapConfig, ChainParams};
use sidecoin::claim::{sign_claim, ClaimBundle, ClaimError, Node, Wallet};
use sidecoin::model::{Address, SPINOFF_ADDRESS_VERSION};
use sidecoin::script::{sign_p2pkh_input, KeyPair};
use sidecoin::snapshot::{build_snapshot, write_snapshot_file, DEFAULT_DUST_THRESHOLD};
use sidecoin::source::{generate_blocks, scan_utxos, KeyRegistry, SourceChainConfig};
use sidecoin::{Amount, Transaction};

struct Setup {
    _dir: tempfile::TempDir,
    node: Node,
    registry: KeyRegistry,
    rng: ChaCha8Rng,
}

fn setup(seed: u64, blocks: u32, addresses: u32) -> Setup {
    let chain = generate_blocks(&SourceChainConfig { seed, num_blocks: blocks, addresses, ..Default::default() }).unwrap();
    let balances = scan_utxos(&chain.blocks).unwrap();
    let snapshot = build_snapshot(&balances, usize::MAX, DEFAULT_DUST_THRESHOLD, Some(blocks - 1));
    let dir = tempfile::tempdir().unwrap();
    let path = snapshot_path(dir.path());
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    write_snapshot_file(&snapshot, &path).unwrap();
    let boot = bootstrap(dir.path(), &BootstrapConfig { genesis_switch: true, ..Default::default() }, ChainParams::regtest())
        .unwrap();
    let node = Node::with_datadir_wallet(boot.state, boot.snapshot, dir.path()).unwrap();
    Setup { _dir: dir, node, registry: chain.registry, rng: ChaCha8Rng::seed_from_u64(seed) }
}

impl Setup {
    fn claim(&mut self, index: usize) -> Result<String, ClaimError> {
        let entry = self.node.snapshot().entries[index].clone();
        let bundle = self.node.claimtx(&entry.address, None, &mut self.rng)?;
        let key = &self.registry.get(&entry.hash160).unwrap().key;
        // Round-trip through the console text, as a user would paste it.
        let pasted = ClaimBundle::parse_command(&bundle.to_command())?;
        sign_claim(&pasted, key)
    }
}

#[test]
fn every_address_claims_once_and_wallet_matches_snapshot() {
    let mut s = setup(21, 60, 20);
    let n = s.node.snapshot().len();
    assert!(n >= 5, "only {n} entries");
    for i in 0..n {
        let signed = s.claim(i).unwrap();
        s.node.submit(&signed).unwrap();
    }
    assert_eq!(s.node.mempool().len(), n);
    s.node.generate(1).unwrap();
    assert!(s.node.mempool().is_empty());
    assert_eq!(Some(s.node.balance()), s.node.snapshot().total());
    for i in 0..n {
        let address = s.node.snapshot().entries[i].address.clone();
        assert!(s.node.snapshot_entry(&address).unwrap().claimed);
        assert!(matches!(s.node.claimtx(&address, None, &mut s.rng.clone()), Err(ClaimError::AlreadyClaimed(_))));
    }
}

#[test]
fn resubmission_and_inflation() {
    let mut s = setup(22, 30, 8);
    let signed = s.claim(0).unwrap();
    let txid = s.node.submit(&signed).unwrap();
    assert!(matches!(s.node.submit(&signed), Err(ClaimError::DuplicateInMempool(t)) if t == txid));
    s.node.generate(1).unwrap();
    assert!(matches!(s.node.submit(&signed), Err(ClaimError::UnknownOutpoint(_))));

    let entry = s.node.snapshot().entries[1].clone();
    let bundle = s.node.claimtx(&entry.address, None, &mut s.rng).unwrap();
    let mut tx = Transaction::from_hex(&bundle.unsigned_hex).unwrap();
    tx.outputs[0].value = Amount::from_sat(entry.balance.to_sat() + 1);
    let key = &s.registry.get(&entry.hash160).unwrap().key;
    sign_p2pkh_input(&mut tx, 0, &bundle.prevouts[0].script_pubkey, entry.balance, key).unwrap();
    assert!(matches!(s.node.submit(&tx.to_hex()), Err(ClaimError::ValueInflation)));
    assert!(matches!(s.node.submit("00zz"), Err(ClaimError::DecodeError(_))));
}

#[test]
fn signed_claim_has_der_push_and_explicit_destination() {
    let mut s = setup(23, 20, 4);
    let entry = s.node.snapshot().entries[0].clone();
    let mut wallet = Wallet::in_memory();
    let dest = wallet.new_address(&mut s.rng).unwrap();
    let bundle = s.node.claimtx(&entry.address, Some(&dest.to_string()), &mut s.rng).unwrap();
    let signed = sign_claim(&bundle, &s.registry.get(&entry.hash160).unwrap().key).unwrap();
    let tx = Transaction::from_hex(&signed).unwrap();
    assert_eq!(tx.inputs.len(), 1);
    assert!(matches!(tx.inputs[0].script_sig[0], 0x47 | 0x48));
    assert_eq!(tx.outputs[0].script_pubkey, sidecoin::script::p2pkh_script_pubkey(&dest.hash));
    assert!(s.node.wallet().keys().is_empty());

    let source = Address::source(entry.hash160).to_string();
    assert!(matches!(s.node.claimtx(&source, Some(&source), &mut s.rng), Err(ClaimError::InvalidAddress(_))));
    assert!(matches!(
        s.node.claimtx("1F1tAaz5x1HUXrCNLbtMDqcw6o5GNn4xqX", None, &mut s.rng),
        Err(ClaimError::AddressNotInSnapshot(_))
    ));
    assert_eq!(dest.version, SPINOFF_ADDRESS_VERSION);
}

#[test]
fn wrong_keys_never_unlock() {
    let mut s = setup(24, 20, 5);
    let mut adversary = ChaCha8Rng::seed_from_u64(99);
    let entry = s.node.snapshot().entries[0].clone();
    let bundle = s.node.claimtx(&entry.address, None, &mut s.rng).unwrap();
    for _ in 0..50 {
        let key = KeyPair::generate(&mut adversary);
        assert!(matches!(sign_claim(&bundle, &key), Err(ClaimError::KeyMismatch)));
        let mut tx = Transaction::from_hex(&bundle.unsigned_hex).unwrap();
        sign_p2pkh_input(&mut tx, 0, &bundle.prevouts[0].script_pubkey, entry.balance, &key).unwrap();
        assert!(matches!(s.node.submit(&tx.to_hex()), Err(ClaimError::ScriptFailure(_))));
    }
    assert!(s.node.mempool().is_empty());
}
