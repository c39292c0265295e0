//! Spinoff-side keys. Stored as plaintext, one key per line:
//! `<secret hex><TAB><address>`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::RngCore;
use thiserror::Error;

use crate::model::{Address, Hash160, SPINOFF_ADDRESS_VERSION};
use crate::script::KeyPair;

pub const WALLET_FILE_NAME: &str = "wallet.dat";

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("wallet line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub struct Wallet {
    path: Option<PathBuf>,
    keys: Vec<KeyPair>,
}

impl Wallet {
    pub fn in_memory() -> Self {
        Wallet { path: None, keys: Vec::new() }
    }

    /// Loads `path`, or starts empty if it does not exist yet.
    pub fn open(path: &Path) -> Result<Self, WalletError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.into()),
        };
        let mut keys = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let corrupt = |reason: &str| WalletError::Corrupt { line: i + 1, reason: reason.to_string() };
            let (secret, address) = line.split_once('\t').ok_or_else(|| corrupt("expected two fields"))?;
            let key = KeyPair::from_secret_hex(secret).map_err(|e| corrupt(&e.to_string()))?;
            if key.address(SPINOFF_ADDRESS_VERSION).to_string() != address {
                return Err(corrupt("address does not derive from the key"));
            }
            keys.push(key);
        }
        Ok(Wallet { path: Some(path.to_path_buf()), keys })
    }

    /// Generates, stores and returns a fresh receiving address.
    pub fn new_address<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<Address, WalletError> {
        let key = KeyPair::generate(rng);
        let address = key.address(SPINOFF_ADDRESS_VERSION);
        if let Some(path) = &self.path {
            let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}\t{}", key.secret_hex(), address)?;
            f.sync_data()?;
        }
        self.keys.push(key);
        Ok(address)
    }

    pub fn keys(&self) -> &[KeyPair] {
        &self.keys
    }

    pub fn key_for(&self, hash: &Hash160) -> Option<&KeyPair> {
        self.keys.iter().find(|k| k.hash160() == *hash)
    }

    pub fn owns(&self, hash: &Hash160) -> bool {
        self.key_for(hash).is_some()
    }

    pub fn addresses(&self) -> Vec<Address> {
        self.keys.iter().map(|k| k.address(SPINOFF_ADDRESS_VERSION)).collect()
    }
}
