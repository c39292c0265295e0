use thiserror::Error;

use super::encode::{serialize, write_compact_size, Decodable, DecodeError, Encodable, Reader};
use super::hash::{sha256d, Hash256};
use super::pow::Target;
use super::transaction::Transaction;

/// Serialized size of a block header.
pub const HEADER_SIZE: usize = 80;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct BlockHeader {
    pub version: u32,
    pub prev_hash: Hash256,
    pub merkle_root: Hash256,
    pub time: u32,
    pub bits: u32,
    pub nonce: u32,
}

impl BlockHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_SIZE] {
        let mut out = [0u8; HEADER_SIZE];
        out[0..4].copy_from_slice(&self.version.to_le_bytes());
        out[4..36].copy_from_slice(&self.prev_hash.0);
        out[36..68].copy_from_slice(&self.merkle_root.0);
        out[68..72].copy_from_slice(&self.time.to_le_bytes());
        out[72..76].copy_from_slice(&self.bits.to_le_bytes());
        out[76..80].copy_from_slice(&self.nonce.to_le_bytes());
        out
    }

    pub fn block_hash(&self) -> Hash256 {
        Hash256(sha256d(&self.to_bytes()))
    }

    /// Whether the header hash meets its own `bits`. Invalid `bits` never do.
    pub fn meets_target(&self) -> bool {
        Target::from_compact(self.bits).is_some_and(|t| t.is_met_by(&self.block_hash()))
    }
}

impl Encodable for BlockHeader {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bytes());
    }
}

impl Decodable for BlockHeader {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(BlockHeader {
            version: r.read_u32()?,
            prev_hash: Hash256(r.read_array()?),
            merkle_root: Hash256(r.read_array()?),
            time: r.read_u32()?,
            bits: r.read_u32()?,
            nonce: r.read_u32()?,
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn block_hash(&self) -> Hash256 {
        self.header.block_hash()
    }

    /// Merkle root recomputed from the transaction list.
    pub fn compute_merkle_root(&self) -> Result<Hash256, EmptyBlock> {
        merkle_root(self.transactions.iter().map(Transaction::txid).collect())
    }

    pub fn serialize(&self) -> Vec<u8> {
        serialize(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self, DecodeError> {
        super::encode::deserialize(bytes)
    }
}

impl Encodable for Block {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.header.encode_to(out);
        write_compact_size(out, self.transactions.len() as u64);
        for tx in &self.transactions {
            tx.encode_to(out);
        }
    }
}

impl Decodable for Block {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Block { header: BlockHeader::decode_from(r)?, transactions: r.read_vec()? })
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("merkle root of an empty transaction list")]
pub struct EmptyBlock;

/// Bitcoin merkle root over txids: pairwise sha256d, duplicating the last
/// node of odd-length levels.
pub fn merkle_root(mut level: Vec<Hash256>) -> Result<Hash256, EmptyBlock> {
    if level.is_empty() {
        return Err(EmptyBlock);
    }
    let mut buf = [0u8; 64];
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(*level.last().unwrap());
        }
        level = level
            .chunks_exact(2)
            .map(|pair| {
                buf[..32].copy_from_slice(&pair[0].0);
                buf[32..].copy_from_slice(&pair[1].0);
                Hash256(sha256d(&buf))
            })
            .collect();
    }
    Ok(level[0])
}
