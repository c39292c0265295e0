//! Bitcoin consensus encoding: little-endian integers and CompactSize varints.

use thiserror::Error;

/// Upper bound on any declared length or count, as in Bitcoin's `MAX_SIZE`.
pub const MAX_DECLARED_SIZE: u64 = 0x0200_0000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("input truncated at byte {offset}: needed {needed} more")]
    TruncatedInput { offset: usize, needed: usize },
    #[error("{0} trailing bytes after object")]
    TrailingBytes(usize),
    #[error("varint value {0} exceeds the size limit")]
    VarintOverflow(u64),
    #[error("non-canonical varint encoding at byte {0}")]
    NonCanonicalVarint(usize),
    #[error("transaction has no inputs")]
    NoInputs,
    #[error("transaction has no outputs")]
    NoOutputs,
    #[error("invalid hex: {0}")]
    Hex(String),
}

pub trait Encodable {
    fn encode_to(&self, out: &mut Vec<u8>);

    fn encoded_len(&self) -> usize {
        let mut buf = Vec::new();
        self.encode_to(&mut buf);
        buf.len()
    }
}

pub trait Decodable: Sized {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError>;
}

pub fn serialize<T: Encodable + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    value.encode_to(&mut out);
    out
}

/// Decodes exactly one object; leftover bytes are an error.
pub fn deserialize<T: Decodable>(bytes: &[u8]) -> Result<T, DecodeError> {
    let mut r = Reader::new(bytes);
    let value = T::decode_from(&mut r)?;
    match r.remaining() {
        0 => Ok(value),
        n => Err(DecodeError::TrailingBytes(n)),
    }
}

pub fn deserialize_hex<T: Decodable>(text: &str) -> Result<T, DecodeError> {
    let bytes = hex::decode(text.trim()).map_err(|e| DecodeError::Hex(e.to_string()))?;
    deserialize(&bytes)
}

pub fn write_compact_size(out: &mut Vec<u8>, n: u64) {
    match n {
        0..=0xfc => out.push(n as u8),
        0xfd..=0xffff => {
            out.push(0xfd);
            out.extend_from_slice(&(n as u16).to_le_bytes());
        }
        0x1_0000..=0xffff_ffff => {
            out.push(0xfe);
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        _ => {
            out.push(0xff);
            out.extend_from_slice(&n.to_le_bytes());
        }
    }
}

pub fn compact_size_len(n: u64) -> usize {
    match n {
        0..=0xfc => 1,
        0xfd..=0xffff => 3,
        0x1_0000..=0xffff_ffff => 5,
        _ => 9,
    }
}

pub fn write_var_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    write_compact_size(out, bytes.len() as u64);
    out.extend_from_slice(bytes);
}

/// Cursor over a byte slice.
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn read_slice(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::TruncatedInput {
                offset: self.pos,
                needed: n - self.remaining(),
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn read_array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let mut arr = [0u8; N];
        arr.copy_from_slice(self.read_slice(N)?);
        Ok(arr)
    }

    pub fn read_u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.read_array::<1>()?[0])
    }

    pub fn read_u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.read_array()?))
    }

    pub fn read_u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.read_array()?))
    }

    pub fn read_u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.read_array()?))
    }

    /// Reads a canonical CompactSize no larger than [`MAX_DECLARED_SIZE`].
    pub fn read_compact_size(&mut self) -> Result<u64, DecodeError> {
        let start = self.pos;
        let n = match self.read_u8()? {
            0xfd => {
                let v = self.read_u16()? as u64;
                if v < 0xfd {
                    return Err(DecodeError::NonCanonicalVarint(start));
                }
                v
            }
            0xfe => {
                let v = self.read_u32()? as u64;
                if v <= 0xffff {
                    return Err(DecodeError::NonCanonicalVarint(start));
                }
                v
            }
            0xff => {
                let v = self.read_u64()?;
                if v <= 0xffff_ffff {
                    return Err(DecodeError::NonCanonicalVarint(start));
                }
                v
            }
            b => b as u64,
        };
        if n > MAX_DECLARED_SIZE {
            return Err(DecodeError::VarintOverflow(n));
        }
        Ok(n)
    }

    pub fn read_var_bytes(&mut self) -> Result<Vec<u8>, DecodeError> {
        let len = self.read_compact_size()? as usize;
        Ok(self.read_slice(len)?.to_vec())
    }

    /// Reads a count prefix and decodes that many items. Preallocation is
    /// bounded by the bytes left, so a hostile count cannot exhaust memory.
    pub fn read_vec<T: Decodable>(&mut self) -> Result<Vec<T>, DecodeError> {
        let count = self.read_compact_size()? as usize;
        let mut items = Vec::with_capacity(count.min(self.remaining()));
        for _ in 0..count {
            items.push(T::decode_from(self)?);
        }
        Ok(items)
    }
}
