//! Key registry: `hex_privkey \t hex_pubkey \t hex_hash160 \t address` per line.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::model::{Address, Hash160, SOURCE_ADDRESS_VERSION};
use crate::script::KeyPair;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyRecord {
    pub key: KeyPair,
    pub hash160: Hash160,
    pub address: Address,
}

impl KeyRecord {
    pub fn new(key: KeyPair) -> Self {
        let hash160 = key.hash160();
        KeyRecord { key, hash160, address: Address::new(SOURCE_ADDRESS_VERSION, hash160) }
    }

    fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\n",
            self.key.secret_hex(),
            hex::encode(self.key.public_key_bytes()),
            self.hash160,
            self.address
        )
    }

    fn parse_line(line: &str, number: usize) -> Result<Self, RegistryError> {
        let bad = |reason: &str| RegistryError::Malformed { line: number, reason: reason.to_string() };
        let fields: Vec<&str> = line.split('\t').collect();
        let [secret, pubkey, hash, address] = fields.as_slice() else {
            return Err(bad("expected 4 tab-separated fields"));
        };
        let mut key = KeyPair::from_secret_hex(secret).map_err(|e| bad(&e.to_string()))?;
        let pubkey = hex::decode(pubkey).map_err(|_| bad("invalid public key hex"))?;
        if pubkey.len() == 65 {
            key = key.uncompressed();
        }
        if key.public_key_bytes() != pubkey {
            return Err(bad("public key does not match private key"));
        }
        let record = KeyRecord::new(key);
        if hash.parse::<Hash160>().ok() != Some(record.hash160) {
            return Err(bad("hash160 does not match public key"));
        }
        if address.parse::<Address>().ok() != Some(record.address) {
            return Err(bad("address does not encode hash160"));
        }
        Ok(record)
    }
}

/// Generated source-chain keys, indexed by hash160.
#[derive(Clone, Debug, Default)]
pub struct KeyRegistry {
    records: Vec<KeyRecord>,
    by_hash: HashMap<Hash160, usize>,
}

impl KeyRegistry {
    pub fn new(records: Vec<KeyRecord>) -> Self {
        let by_hash = records.iter().enumerate().map(|(i, r)| (r.hash160, i)).collect();
        KeyRegistry { records, by_hash }
    }

    pub fn records(&self) -> &[KeyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, hash: &Hash160) -> Option<&KeyRecord> {
        self.by_hash.get(hash).map(|&i| &self.records[i])
    }

    pub fn by_address(&self, address: &str) -> Option<&KeyRecord> {
        address.parse::<Address>().ok().and_then(|a| self.get(&a.hash))
    }

    pub fn to_tsv(&self) -> String {
        self.records.iter().map(KeyRecord::to_line).collect()
    }

    pub fn from_tsv(text: &str) -> Result<Self, RegistryError> {
        let records = text
            .lines()
            .enumerate()
            .map(|(i, line)| KeyRecord::parse_line(line, i + 1))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(KeyRegistry::new(records))
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_tsv())
    }

    pub fn read(path: &Path) -> Result<Self, RegistryError> {
        Self::from_tsv(&fs::read_to_string(path)?)
    }
}
