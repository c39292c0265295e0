//! Base58check address codec.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::hash::{sha256d, Hash160};

/// Version byte of source-chain (Bitcoin mainnet style) P2PKH addresses.
pub const SOURCE_ADDRESS_VERSION: u8 = 0x00;
/// Version byte of spinoff-chain P2PKH addresses ("S..." prefix).
pub const SPINOFF_ADDRESS_VERSION: u8 = 0x3F;

const ALPHABET: &[u8; 58] = b"123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

const fn build_index() -> [i8; 128] {
    let mut table = [-1i8; 128];
    let mut i = 0;
    while i < 58 {
        table[ALPHABET[i] as usize] = i as i8;
        i += 1;
    }
    table
}

const INDEX: [i8; 128] = build_index();

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddressError {
    #[error("invalid base58 character {ch:?} at position {pos}")]
    InvalidCharacter { ch: char, pos: usize },
    #[error("checksum mismatch")]
    BadChecksum,
    #[error("decoded payload is {0} bytes, expected 21")]
    BadLength(usize),
    #[error("address version {got:#04x}, expected {expected:#04x}")]
    WrongVersion { expected: u8, got: u8 },
}

/// Plain base58 (no checksum). Leading zero bytes become leading '1's.
pub fn base58_encode(data: &[u8]) -> String {
    let zeros = data.iter().take_while(|&&b| b == 0).count();
    // log(256)/log(58) < 1.37
    let mut digits: Vec<u8> = Vec::with_capacity(data.len() * 137 / 100 + 1);
    for &byte in &data[zeros..] {
        let mut carry = byte as u32;
        for d in digits.iter_mut() {
            carry += (*d as u32) << 8;
            *d = (carry % 58) as u8;
            carry /= 58;
        }
        while carry > 0 {
            digits.push((carry % 58) as u8);
            carry /= 58;
        }
    }
    let mut out = String::with_capacity(zeros + digits.len());
    out.extend(std::iter::repeat('1').take(zeros));
    out.extend(digits.iter().rev().map(|&d| ALPHABET[d as usize] as char));
    out
}

pub fn base58_decode(text: &str) -> Result<Vec<u8>, AddressError> {
    let ones = text.bytes().take_while(|&c| c == b'1').count();
    let mut bytes: Vec<u8> = Vec::with_capacity(text.len());
    for (pos, ch) in text.chars().enumerate().skip(ones) {
        let value = (ch as u32)
            .try_into()
            .ok()
            .and_then(|c: u8| INDEX.get(c as usize).copied())
            .filter(|&v| v >= 0)
            .ok_or(AddressError::InvalidCharacter { ch, pos })?;
        let mut carry = value as u32;
        for b in bytes.iter_mut() {
            carry += (*b as u32) * 58;
            *b = (carry & 0xff) as u8;
            carry >>= 8;
        }
        while carry > 0 {
            bytes.push((carry & 0xff) as u8);
            carry >>= 8;
        }
    }
    let mut out = vec![0u8; ones];
    out.extend(bytes.iter().rev());
    Ok(out)
}

/// Base58check of `version ‖ h ‖ checksum`.
pub fn encode_address(h: &Hash160, version: u8) -> String {
    let mut buf = Vec::with_capacity(25);
    buf.push(version);
    buf.extend_from_slice(&h.0);
    let check = sha256d(&buf);
    buf.extend_from_slice(&check[..4]);
    base58_encode(&buf)
}

pub fn decode_address(text: &str) -> Result<(u8, Hash160), AddressError> {
    let raw = base58_decode(text)?;
    if raw.len() < 4 {
        return Err(AddressError::BadLength(0));
    }
    let (payload, check) = raw.split_at(raw.len() - 4);
    if sha256d(payload)[..4] != *check {
        return Err(AddressError::BadChecksum);
    }
    if payload.len() != 21 {
        return Err(AddressError::BadLength(payload.len()));
    }
    let mut h = [0u8; 20];
    h.copy_from_slice(&payload[1..]);
    Ok((payload[0], Hash160(h)))
}

/// A P2PKH address: version byte plus public key hash.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Address {
    pub version: u8,
    pub hash: Hash160,
}

impl Address {
    pub fn new(version: u8, hash: Hash160) -> Self {
        Address { version, hash }
    }

    pub fn source(hash: Hash160) -> Self {
        Address::new(SOURCE_ADDRESS_VERSION, hash)
    }

    pub fn spinoff(hash: Hash160) -> Self {
        Address::new(SPINOFF_ADDRESS_VERSION, hash)
    }

    /// Parses and requires a particular version byte.
    pub fn parse_with_version(text: &str, version: u8) -> Result<Self, AddressError> {
        let addr: Address = text.parse()?;
        if addr.version != version {
            return Err(AddressError::WrongVersion { expected: version, got: addr.version });
        }
        Ok(addr)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_address(&self.hash, self.version))
    }
}

impl FromStr for Address {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (version, hash) = decode_address(s)?;
        Ok(Address { version, hash })
    }
}
