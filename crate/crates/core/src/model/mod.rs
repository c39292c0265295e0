//! Wire-level domain types shared by both chains.

mod address;
mod amount;
pub mod encode;
mod hash;
mod block;
pub mod pow;
mod transaction;

pub use address::{
    base58_decode, base58_encode, decode_address, encode_address, Address, AddressError,
    SOURCE_ADDRESS_VERSION, SPINOFF_ADDRESS_VERSION,
};
pub use amount::{Amount, COIN};
pub use block::{merkle_root, Block, BlockHeader, EmptyBlock, HEADER_SIZE};
pub use encode::{deserialize, serialize, Decodable, DecodeError, Encodable};
pub use hash::{hash160, sha256d, Hash160, Hash256, HashParseError};
pub use transaction::{OutPoint, Transaction, TxIn, TxOut};
