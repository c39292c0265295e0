//! `sidecoin.conf`: `key=value` lines, `#` comments.

use std::fs;
use std::io;
use std::path::Path;

use sidecoin::chain::Network;
use thiserror::Error;

pub const CONF_FILE_NAME: &str = "sidecoin.conf";
pub const DEFAULT_RPC_PORT: u16 = 18444;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{CONF_FILE_NAME} line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeConfig {
    pub rpc_bind: String,
    pub rpc_port: u16,
    pub network: Network,
    /// Block rewards from `generate` go here instead of an unowned script.
    pub reward_address: Option<String>,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig { rpc_bind: "127.0.0.1".into(), rpc_port: DEFAULT_RPC_PORT, network: Network::Regtest, reward_address: None }
    }
}

impl NodeConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = NodeConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let invalid = |reason: String| ConfigError::Invalid { line: i + 1, reason };
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| invalid("expected key=value".into()))?;
            let value = value.trim();
            match key.trim() {
                "rpcbind" => config.rpc_bind = value.to_string(),
                "rpcport" => config.rpc_port = value.parse().map_err(|_| invalid(format!("bad port {value:?}")))?,
                "network" => config.network = value.parse().map_err(invalid)?,
                "regtest" if value == "1" => config.network = Network::Regtest,
                "testnet" if value == "1" => config.network = Network::Testnet,
                "rewardaddress" => config.reward_address = Some(value.to_string()),
                other => return Err(invalid(format!("unknown key {other:?}"))),
            }
        }
        Ok(config)
    }

    /// Reads `path`; a missing file yields the defaults.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        match fs::read_to_string(path) {
            Ok(text) => Self::parse(&text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }
}
