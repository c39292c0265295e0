//! On-disk chainstate.
//!
//! `blocks/blk00000.dat` is append-only, framed like the source chain's
//! block files. `chainstate/utxo.dat` is a checksummed image of the block
//! index and UTXO set; `chainstate/wal.log` holds one record per block
//! connected since the image was written:
//!
//! ```text
//! [u32 LE payload length][payload][first 4 bytes of sha256d(payload)]
//! ```
//!
//! Connecting a block appends the block record, syncs, appends the WAL
//! record and syncs again. The WAL record's last byte is the commit point.
//! Recovery replays complete records, drops a torn tail and truncates the
//! block file back to the last committed block.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::encode::Reader;
use crate::model::{sha256d, Block, Decodable, DecodeError, Encodable, Hash256, OutPoint};

use super::state::Coin;
use super::validation::BlockDelta;

pub const BLOCKS_DIR: &str = "blocks";
pub const CHAINSTATE_DIR: &str = "chainstate";
const BLOCK_FILE: &str = "blk00000.dat";
const IMAGE_FILE: &str = "utxo.dat";
const WAL_FILE: &str = "wal.log";
const IMAGE_MAGIC: &[u8; 4] = b"SCUT";
const IMAGE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("chainstate is corrupt: {0}")]
    Corrupt(String),
    #[error("store is unusable after an interrupted write; reopen to recover")]
    Poisoned,
    #[error("injected fault")]
    InjectedFault,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Where a block's record lives in the block file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLocation {
    pub hash: Hash256,
    /// Offset of the record's magic bytes.
    pub offset: u64,
    /// Length of the serialized block, excluding the 8-byte frame.
    pub len: u32,
}

impl BlockLocation {
    fn end(&self) -> u64 {
        self.offset + 8 + self.len as u64
    }
}

/// Everything recovered from disk.
#[derive(Debug, Default)]
pub struct PersistedState {
    /// Indexed by height.
    pub blocks: Vec<BlockLocation>,
    pub utxo: HashMap<OutPoint, Coin>,
}

/// Simulates a crash after a fixed number of written bytes.
#[derive(Clone, Copy, Debug)]
struct FaultBudget(u64);

pub struct ChainStore {
    block_path: PathBuf,
    chainstate: PathBuf,
    block_file: File,
    block_len: u64,
    wal: File,
    wal_len: u64,
    magic: [u8; 4],
    fault: Option<FaultBudget>,
    poisoned: bool,
}

impl ChainStore {
    /// True when `datadir` already holds a chainstate.
    pub fn exists(datadir: &Path) -> bool {
        let dir = datadir.join(CHAINSTATE_DIR);
        dir.join(IMAGE_FILE).exists() || dir.join(WAL_FILE).exists()
    }

    /// Opens or creates the store, running crash recovery.
    pub fn open(datadir: &Path, magic: [u8; 4]) -> Result<(Self, PersistedState), StoreError> {
        let blocks_dir = datadir.join(BLOCKS_DIR);
        let chainstate = datadir.join(CHAINSTATE_DIR);
        fs::create_dir_all(&blocks_dir)?;
        fs::create_dir_all(&chainstate)?;

        let mut state = match fs::read(chainstate.join(IMAGE_FILE)) {
            Ok(bytes) => decode_image(&bytes)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => PersistedState::default(),
            Err(e) => return Err(e.into()),
        };

        let wal_path = chainstate.join(WAL_FILE);
        let mut wal = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(&wal_path)?;
        let mut wal_bytes = Vec::new();
        wal.read_to_end(&mut wal_bytes)?;
        let mut good = 0usize;
        while let Some((record, used)) = next_wal_record(&wal_bytes[good..]) {
            let height = record.height as usize;
            if height > state.blocks.len() {
                return Err(StoreError::Corrupt(format!("log jumps to height {height}")));
            }
            if height == state.blocks.len() {
                for outpoint in &record.spent {
                    state.utxo.remove(outpoint);
                }
                state.utxo.extend(record.created);
                state.blocks.push(record.location);
            }
            good += used;
        }
        if good < wal_bytes.len() {
            wal.set_len(good as u64)?;
            wal.sync_data()?;
        }

        let block_path = blocks_dir.join(BLOCK_FILE);
        let block_file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(&block_path)?;
        let committed = state.blocks.last().map_or(0, BlockLocation::end);
        let actual = block_file.metadata()?.len();
        if actual < committed {
            return Err(StoreError::Corrupt(format!("block file has {actual} bytes, index expects {committed}")));
        }
        if actual > committed {
            block_file.set_len(committed)?;
            block_file.sync_data()?;
        }

        let store = ChainStore {
            block_path,
            chainstate,
            block_file,
            block_len: committed,
            wal,
            wal_len: good as u64,
            magic,
            fault: None,
            poisoned: false,
        };
        Ok((store, state))
    }

    /// Makes the next writes fail after `bytes` more bytes, leaving the
    /// partial write on disk as a crash would. The store is then poisoned.
    pub fn inject_fault_after(&mut self, bytes: Option<u64>) {
        self.fault = bytes.map(FaultBudget);
    }

    /// Bytes `append_block` would write for this block and delta.
    pub fn append_size(block: &Block, delta: &BlockDelta) -> u64 {
        let payload = encode_wal_payload(delta, BlockLocation { hash: delta.hash, offset: 0, len: 0 });
        8 + block.encoded_len() as u64 + 8 + payload.len() as u64
    }

    pub fn wal_len(&self) -> u64 {
        self.wal_len
    }

    /// Durably appends a block and its UTXO delta. On error nothing is
    /// committed; recovery on the next open discards any partial write.
    pub fn append_block(&mut self, block: &Block, delta: &BlockDelta) -> Result<BlockLocation, StoreError> {
        if self.poisoned {
            return Err(StoreError::Poisoned);
        }
        let body = block.serialize();
        let location = BlockLocation {
            hash: delta.hash,
            offset: self.block_len,
            len: u32::try_from(body.len()).map_err(|_| StoreError::Corrupt("block over 4 GiB".into()))?,
        };
        let payload = encode_wal_payload(delta, location);
        let result = self.write_both(&body, &payload);
        match result {
            Ok(()) => {
                self.block_len = location.end();
                self.wal_len += 8 + payload.len() as u64;
                Ok(location)
            }
            Err(StoreError::InjectedFault) => {
                self.poisoned = true;
                Err(StoreError::InjectedFault)
            }
            Err(e) => {
                let rolled_back = self.block_file.set_len(self.block_len).and_then(|_| self.wal.set_len(self.wal_len));
                if rolled_back.is_err() {
                    self.poisoned = true;
                }
                Err(e)
            }
        }
    }

    fn write_both(&mut self, body: &[u8], payload: &[u8]) -> Result<(), StoreError> {
        let mut record = Vec::with_capacity(8 + body.len());
        record.extend_from_slice(&self.magic);
        record.extend_from_slice(&(body.len() as u32).to_le_bytes());
        record.extend_from_slice(body);
        self.block_file.seek(SeekFrom::Start(self.block_len))?;
        write_with_budget(&mut self.block_file, &record, &mut self.fault)?;
        self.block_file.sync_data()?;

        let mut wal_record = Vec::with_capacity(8 + payload.len());
        wal_record.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        wal_record.extend_from_slice(payload);
        wal_record.extend_from_slice(&sha256d(payload)[..4]);
        self.wal.seek(SeekFrom::Start(self.wal_len))?;
        write_with_budget(&mut self.wal, &wal_record, &mut self.fault)?;
        self.wal.sync_data()?;
        Ok(())
    }

    pub fn read_block(&self, location: &BlockLocation) -> Result<Block, StoreError> {
        let mut file = File::open(&self.block_path)?;
        file.seek(SeekFrom::Start(location.offset))?;
        let mut record = vec![0u8; 8 + location.len as usize];
        file.read_exact(&mut record)?;
        if record[..4] != self.magic || record[4..8] != location.len.to_le_bytes() {
            return Err(StoreError::Corrupt(format!("bad block record at offset {}", location.offset)));
        }
        let block = Block::deserialize(&record[8..])
            .map_err(|e| StoreError::Corrupt(format!("block at offset {}: {e}", location.offset)))?;
        if block.block_hash() != location.hash {
            return Err(StoreError::Corrupt(format!("block at offset {} has the wrong hash", location.offset)));
        }
        Ok(block)
    }

    /// Writes a fresh image of `state` and empties the log.
    pub fn write_image(&mut self, blocks: &[BlockLocation], utxo: &HashMap<OutPoint, Coin>) -> Result<(), StoreError> {
        if self.poisoned {
            return Err(StoreError::Poisoned);
        }
        let image = encode_image(blocks, utxo);
        let tmp = self.chainstate.join(format!("{IMAGE_FILE}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&image)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.chainstate.join(IMAGE_FILE))?;
        File::open(&self.chainstate)?.sync_all()?;
        // Records at or below the image height are skipped on replay, so a
        // crash before this truncation is harmless.
        self.wal.set_len(0)?;
        self.wal.sync_data()?;
        self.wal_len = 0;
        Ok(())
    }
}

fn write_with_budget(file: &mut File, bytes: &[u8], fault: &mut Option<FaultBudget>) -> Result<(), StoreError> {
    if let Some(FaultBudget(left)) = fault {
        if (*left as usize) < bytes.len() {
            file.write_all(&bytes[..*left as usize])?;
            file.flush()?;
            *left = 0;
            return Err(StoreError::InjectedFault);
        }
        *left -= bytes.len() as u64;
    }
    file.write_all(bytes)?;
    Ok(())
}

struct WalRecord {
    height: u32,
    location: BlockLocation,
    spent: Vec<OutPoint>,
    created: Vec<(OutPoint, Coin)>,
}

fn encode_wal_payload(delta: &BlockDelta, location: BlockLocation) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&delta.height.to_le_bytes());
    encode_location(&mut out, &location);
    out.extend_from_slice(&(delta.spent.len() as u64).to_le_bytes());
    for outpoint in &delta.spent {
        outpoint.encode_to(&mut out);
    }
    out.extend_from_slice(&(delta.created.len() as u64).to_le_bytes());
    for (outpoint, coin) in &delta.created {
        outpoint.encode_to(&mut out);
        coin.encode_to(&mut out);
    }
    out
}

fn decode_wal_payload(bytes: &[u8]) -> Result<WalRecord, DecodeError> {
    let mut r = Reader::new(bytes);
    let height = r.read_u32()?;
    let location = decode_location(&mut r)?;
    let spent = read_counted(&mut r, OutPoint::decode_from)?;
    let created = read_counted(&mut r, |r| Ok((OutPoint::decode_from(r)?, Coin::decode_from(r)?)))?;
    if r.remaining() != 0 {
        return Err(DecodeError::TrailingBytes(r.remaining()));
    }
    Ok(WalRecord { height, location, spent, created })
}

/// Parses one complete, checksummed record. `None` marks the end of the
/// usable log, including a torn or corrupt tail.
fn next_wal_record(bytes: &[u8]) -> Option<(WalRecord, usize)> {
    let len = u32::from_le_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
    let payload = bytes.get(4..4 + len)?;
    let checksum = bytes.get(4 + len..8 + len)?;
    if sha256d(payload)[..4] != *checksum {
        return None;
    }
    decode_wal_payload(payload).ok().map(|r| (r, 8 + len))
}

fn encode_location(out: &mut Vec<u8>, location: &BlockLocation) {
    out.extend_from_slice(&location.hash.0);
    out.extend_from_slice(&location.offset.to_le_bytes());
    out.extend_from_slice(&location.len.to_le_bytes());
}

fn decode_location(r: &mut Reader<'_>) -> Result<BlockLocation, DecodeError> {
    Ok(BlockLocation { hash: Hash256(r.read_array()?), offset: r.read_u64()?, len: r.read_u32()? })
}

fn read_counted<T>(
    r: &mut Reader<'_>,
    mut item: impl FnMut(&mut Reader<'_>) -> Result<T, DecodeError>,
) -> Result<Vec<T>, DecodeError> {
    let count = r.read_u64()?;
    // Each item takes at least 36 bytes, which bounds the preallocation.
    let mut out = Vec::with_capacity((count as usize).min(r.remaining() / 36));
    for _ in 0..count {
        out.push(item(r)?);
    }
    Ok(out)
}

fn encode_image(blocks: &[BlockLocation], utxo: &HashMap<OutPoint, Coin>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(IMAGE_MAGIC);
    out.extend_from_slice(&IMAGE_VERSION.to_le_bytes());
    out.extend_from_slice(&(blocks.len() as u64).to_le_bytes());
    for location in blocks {
        encode_location(&mut out, location);
    }
    let mut entries: Vec<_> = utxo.iter().collect();
    entries.sort_unstable_by_key(|(o, _)| **o);
    out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for (outpoint, coin) in entries {
        outpoint.encode_to(&mut out);
        coin.encode_to(&mut out);
    }
    let checksum = sha256d(&out);
    out.extend_from_slice(&checksum[..4]);
    out
}

fn decode_image(bytes: &[u8]) -> Result<PersistedState, StoreError> {
    let corrupt = |what: &str| StoreError::Corrupt(format!("{IMAGE_FILE}: {what}"));
    let (body, checksum) = bytes.split_at(bytes.len().checked_sub(4).ok_or_else(|| corrupt("too short"))?);
    if sha256d(body)[..4] != *checksum {
        return Err(corrupt("checksum mismatch"));
    }
    let mut r = Reader::new(body);
    let parse = |r: &mut Reader<'_>| -> Result<PersistedState, DecodeError> {
        if r.read_array::<4>()? != *IMAGE_MAGIC || r.read_u32()? != IMAGE_VERSION {
            return Err(DecodeError::Hex("bad image header".into()));
        }
        let blocks = read_counted(r, decode_location)?;
        let utxo = read_counted(r, |r| Ok((OutPoint::decode_from(r)?, Coin::decode_from(r)?)))?;
        Ok(PersistedState { blocks, utxo: utxo.into_iter().collect() })
    };
    let state = parse(&mut r).map_err(|e| corrupt(&e.to_string()))?;
    if r.remaining() != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok(state)
}

impl Encodable for Coin {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.value.to_sat().to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        crate::model::encode::write_var_bytes(out, &self.script_pubkey);
    }
}

impl Decodable for Coin {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let value = crate::model::Amount::from_sat(r.read_u64()?);
        let height = r.read_u32()?;
        let script_pubkey = r.read_var_bytes()?;
        Ok(Coin { value, script_pubkey, height })
    }
}
