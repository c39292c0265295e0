//! The ordered, dust-filtered balance snapshot and its flat-file form.
//!
//! One entry per line, LF-terminated, no header:
//!
//! ```text
//! <satoshis>.00000000<TAB><hash160 hex><TAB><base58check address>
//! ```

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::model::{encode_address, Amount, Hash160, Hash256, SOURCE_ADDRESS_VERSION};
use crate::source::BalanceMap;

/// Canonical file name inside the `balances` directory.
pub const SNAPSHOT_FILE_NAME: &str = "snapshotToImport.txt";

/// Default dust cutoff in satoshis.
pub const DEFAULT_DUST_THRESHOLD: Amount = Amount::from_sat(25_000);

const BALANCE_SUFFIX: &str = ".00000000";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("line {line}: malformed entry ({reason})")]
    MalformedLine { line: usize, reason: &'static str },
    #[error("line {line}: address does not encode the hash160")]
    AddressMismatch { line: usize },
    #[error("line {line}: entries are not in descending balance order")]
    OrderViolation { line: usize },
    #[error("line {line}: hash160 {hash} already listed")]
    DuplicateHash160 { line: usize, hash: Hash160 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotEntry {
    pub balance: Amount,
    pub hash160: Hash160,
    pub address: String,
}

impl SnapshotEntry {
    /// Entry whose address is derived from the hash with the source version byte.
    pub fn new(balance: Amount, hash160: Hash160) -> Self {
        SnapshotEntry { balance, hash160, address: encode_address(&hash160, SOURCE_ADDRESS_VERSION) }
    }

    pub fn to_line(&self) -> String {
        format!("{}{BALANCE_SUFFIX}\t{}\t{}", self.balance, self.hash160, self.address)
    }

    /// Parses the three fields of one line without cross-checking them.
    pub fn parse_line(line: &str, number: usize) -> Result<Self, SnapshotError> {
        let malformed = |reason| SnapshotError::MalformedLine { line: number, reason };
        let mut fields = line.split('\t');
        let (Some(balance), Some(hash), Some(address), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(malformed("expected three tab-separated fields"));
        };
        let digits = balance.strip_suffix(BALANCE_SUFFIX).ok_or(malformed("balance must end in .00000000"))?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || (digits.len() > 1 && digits.starts_with('0')) {
            return Err(malformed("balance is not a canonical integer"));
        }
        let balance = digits.parse::<u64>().map_err(|_| malformed("balance exceeds 64 bits"))?;
        if hash.len() != 40 || hash.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(malformed("hash160 must be 40 lowercase hex digits"));
        }
        let hash160 = hash.parse().map_err(|_| malformed("hash160 must be 40 lowercase hex digits"))?;
        if address.is_empty() {
            return Err(malformed("empty address"));
        }
        Ok(SnapshotEntry { balance: Amount::from_sat(balance), hash160, address: address.to_string() })
    }

    /// Snapshot order: balance descending, then hash160 ascending.
    fn order(&self, other: &Self) -> Ordering {
        other.balance.cmp(&self.balance).then_with(|| self.hash160.cmp(&other.hash160))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub entries: Vec<SnapshotEntry>,
    /// Source-chain tip the balances were taken at. Not stored in the file.
    pub source_tip: Option<Hash256>,
    /// Height of the last scanned source block. Not stored in the file.
    pub max_block: Option<u32>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `None` on 64-bit overflow.
    pub fn total(&self) -> Option<Amount> {
        Amount::checked_sum(self.entries.iter().map(|e| e.balance))
    }

    /// Index and entry for a hash160. Entries are sorted by balance, so this
    /// is a linear scan; callers doing many lookups should build an index.
    pub fn find(&self, hash: &Hash160) -> Option<(usize, &SnapshotEntry)> {
        self.entries.iter().enumerate().find(|(_, e)| e.hash160 == *hash)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 96);
        for entry in &self.entries {
            let _ = writeln!(out, "{}", entry.to_line());
        }
        out
    }

    /// Parses and validates file contents: per-line address/hash agreement,
    /// strict snapshot order, no repeated hash160.
    pub fn from_file_str(text: &str) -> Result<Self, SnapshotError> {
        let mut entries: Vec<SnapshotEntry> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.split_terminator('\n').enumerate() {
            let number = i + 1;
            let entry = SnapshotEntry::parse_line(line, number)?;
            if encode_address(&entry.hash160, SOURCE_ADDRESS_VERSION) != entry.address {
                return Err(SnapshotError::AddressMismatch { line: number });
            }
            if entry.balance == Amount::ZERO {
                return Err(SnapshotError::MalformedLine { line: number, reason: "zero balance" });
            }
            if !seen.insert(entry.hash160) {
                return Err(SnapshotError::DuplicateHash160 { line: number, hash: entry.hash160 });
            }
            if entries.last().is_some_and(|prev| prev.order(&entry) != Ordering::Less) {
                return Err(SnapshotError::OrderViolation { line: number });
            }
            entries.push(entry);
        }
        Ok(Snapshot { entries, source_tip: None, max_block: None })
    }
}

/// Drops balances below `dust_threshold`, sorts, then keeps the top
/// `max_entries`.
pub fn build_snapshot(
    balances: &BalanceMap,
    max_entries: usize,
    dust_threshold: Amount,
    max_block: Option<u32>,
) -> Snapshot {
    let mut entries: Vec<SnapshotEntry> = balances
        .entries
        .iter()
        .filter(|(_, &v)| v > Amount::ZERO && v >= dust_threshold)
        .map(|(h, &v)| SnapshotEntry::new(v, *h))
        .collect();
    entries.sort_unstable_by(SnapshotEntry::order);
    entries.truncate(max_entries);
    let source_tip = (balances.blocks > 0).then_some(balances.tip);
    Snapshot { entries, source_tip, max_block }
}

pub fn write_snapshot_file(snapshot: &Snapshot, path: &Path) -> io::Result<()> {
    fs::write(path, snapshot.to_file_string())
}

pub fn read_snapshot_file(path: &Path) -> Result<Snapshot, SnapshotError> {
    Snapshot::from_file_str(&fs::read_to_string(path)?)
}
