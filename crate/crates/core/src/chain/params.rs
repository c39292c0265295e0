use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::pow::Target;
use crate::model::{Amount, Hash256};

/// Spinoff block-file magic, "SCOI".
pub const SPINOFF_MAGIC: [u8; 4] = [0x53, 0x43, 0x4f, 0x49];

pub const PARAMS_FILE_NAME: &str = "chainparams.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Mainnet,
    Testnet,
    Regtest,
}

impl std::str::FromStr for Network {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mainnet" | "main" => Ok(Network::Mainnet),
            "testnet" | "test" => Ok(Network::Testnet),
            "regtest" => Ok(Network::Regtest),
            other => Err(format!("unknown network {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("bits {0:#010x} do not encode a positive target")]
    InvalidBits(u32),
    #[error("cannot parse {PARAMS_FILE_NAME}: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Consensus parameters. Every chain uses the same easy target at every
/// height; there is no retargeting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub network: Network,
    pub bits: u32,
    pub genesis_time: u32,
    pub genesis_message: String,
    /// Nonce the genesis search starts from. Once mined this is the solution.
    pub genesis_nonce: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genesis_hash: Option<Hash256>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_one_time: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_one_nonce: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_one_checkpoint: Option<Hash256>,
    pub max_block_size: usize,
    pub max_block_sigops: usize,
    pub max_block_txs: usize,
    pub subsidy: Amount,
    #[serde(with = "hex_magic")]
    pub magic: [u8; 4],
}

impl ChainParams {
    fn base(network: Network, bits: u32) -> Self {
        ChainParams {
            network,
            bits,
            genesis_time: 1_419_465_600,
            genesis_message: "Sidecoin: a spinoff of the Bitcoin ledger".to_string(),
            genesis_nonce: 0,
            genesis_hash: None,
            block_one_time: None,
            block_one_nonce: None,
            block_one_checkpoint: None,
            max_block_size: 1_000_000,
            max_block_sigops: 20_000,
            max_block_txs: 5_000,
            subsidy: Amount::from_coins(50),
            magic: SPINOFF_MAGIC,
        }
    }

    pub fn regtest() -> Self {
        Self::base(Network::Regtest, 0x207f_ffff)
    }

    pub fn testnet() -> Self {
        Self::base(Network::Testnet, 0x2000_ffff)
    }

    pub fn mainnet() -> Self {
        Self::base(Network::Mainnet, 0x1f00_ffff)
    }

    pub fn for_network(network: Network) -> Self {
        match network {
            Network::Mainnet => Self::mainnet(),
            Network::Testnet => Self::testnet(),
            Network::Regtest => Self::regtest(),
        }
    }

    pub fn target(&self) -> Result<Target, ParamsError> {
        Target::from_compact(self.bits).ok_or(ParamsError::InvalidBits(self.bits))
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        self.target().map(drop)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("params always serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, ParamsError> {
        let params: ChainParams = toml::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self, ParamsError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_toml())
    }
}

mod hex_magic {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(magic: &[u8; 4], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(magic))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 4], D::Error> {
        let text = String::deserialize(d)?;
        let bytes = hex::decode(&text).map_err(D::Error::custom)?;
        bytes.try_into().map_err(|_| D::Error::custom("magic must be 4 bytes"))
    }
}
