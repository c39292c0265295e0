use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use parking_lot::RwLock;
use serde_json::{json, Value};

use sidecoin::chain::{bootstrap, verify::verify_datadir, BootstrapConfig, ChainParams, Network};
use sidecoin::claim::{sign_claim, ClaimBundle, Node};
use sidecoin::model::{Address, SPINOFF_ADDRESS_VERSION};
use sidecoin::snapshot::{build_snapshot, write_snapshot_file};
use sidecoin::source::{generate_source_chain, scan_block_dir, KeyRegistry, SourceChainConfig, SOURCE_MAGIC};
use sidecoin::Amount;
use sidecoin_node::client::{ClientError, RpcClient};
use sidecoin_node::config::{NodeConfig, CONF_FILE_NAME};
use sidecoin_node::rpc::{self, ADDRESS_NOT_IN_SNAPSHOT};

#[derive(Parser)]
#[command(name = "spinoff", version, about = "Snapshot a source chain and launch a spinoff from it")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic synthetic source chain and its key registry.
    GenerateSource {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        blocks: u32,
        #[arg(long, default_value_t = 50)]
        addresses: u32,
        /// Block subsidy in satoshis.
        #[arg(long, default_value_t = 5_000_000_000)]
        subsidy: u64,
        #[arg(long, default_value_t = 0.3)]
        spend_fraction: f64,
    },
    /// Scan source block files into a snapshot file.
    Snapshot {
        #[arg(long)]
        blocks: PathBuf,
        /// Last source height to include.
        #[arg(long)]
        max_block: Option<u32>,
        #[arg(long, default_value_t = 2_000_000)]
        max_entries: usize,
        /// Balances below this many satoshis are dropped.
        #[arg(long, default_value_t = 25_000)]
        dust_threshold: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine genesis and block one, or check an existing chain.
    Bootstrap {
        #[arg(long)]
        datadir: PathBuf,
        /// Mine genesis and import the snapshot into block one.
        #[arg(long)]
        genesis_switch: bool,
        /// Defaults to <datadir>/balances/snapshotToImport.txt.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        network: Option<Network>,
        /// Block-one time and nonce from an earlier run.
        #[arg(long, requires = "preset_nonce")]
        preset_time: Option<u32>,
        #[arg(long, requires = "preset_time")]
        preset_nonce: Option<u32>,
    },
    /// Run the JSON-RPC service on a bootstrapped datadir.
    Serve {
        #[arg(long)]
        datadir: PathBuf,
        #[arg(long)]
        rpcport: Option<u16>,
        #[arg(long)]
        conf: Option<PathBuf>,
    },
    /// Claim snapshot balances through a running node using registry keys.
    Claim {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = sidecoin_node::config::DEFAULT_RPC_PORT)]
        rpcport: u16,
        /// Key registry written by generate-source.
        #[arg(long)]
        keys: PathBuf,
        /// Source address to claim; repeatable.
        #[arg(long = "address")]
        addresses: Vec<String>,
        /// Claim every registry address that is in the snapshot.
        #[arg(long, conflicts_with = "addresses")]
        all: bool,
        /// Spinoff address to receive the coins; a new wallet address otherwise.
        #[arg(long)]
        dest: Option<String>,
        /// Mine a block afterwards so the claims confirm.
        #[arg(long)]
        mine: bool,
    },
    /// Re-validate every stored block and compare with the chainstate.
    Verify {
        #[arg(long)]
        datadir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(1)
        }
    }
}

fn load_params(datadir: &Path, network: Option<Network>) -> Result<ChainParams> {
    let conf = NodeConfig::load(&datadir.join(CONF_FILE_NAME))?;
    Ok(ChainParams::for_network(network.unwrap_or(conf.network)))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenerateSource { out, seed, blocks, addresses, subsidy, spend_fraction } => {
            let config =
                SourceChainConfig { seed, num_blocks: blocks, addresses, subsidy: Amount::from_sat(subsidy), spend_fraction };
            config.validate().map_err(anyhow::Error::msg)?;
            let (chain, files) = generate_source_chain(&config, &out)?;
            println!(
                "wrote {} blocks in {} file(s), tip {}, {} keys",
                chain.blocks.len(),
                files.len(),
                chain.tip(),
                chain.registry.len()
            );
        }
        Command::Snapshot { blocks, max_block, max_entries, dust_threshold, out } => {
            let balances = scan_block_dir(&blocks, SOURCE_MAGIC, max_block)?;
            let snapshot = build_snapshot(&balances, max_entries, Amount::from_sat(dust_threshold), max_block);
            write_snapshot_file(&snapshot, &out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{} entries, {} sat, scanned {} blocks to {}",
                snapshot.len(),
                snapshot.total().context("snapshot total overflows")?,
                balances.blocks,
                balances.tip
            );
        }
        Command::Bootstrap { datadir, genesis_switch, snapshot, network, preset_time, preset_nonce } => {
            let params = load_params(&datadir, network)?;
            let config =
                BootstrapConfig { genesis_switch, snapshot_path: snapshot, block_one_preset: preset_time.zip(preset_nonce) };
            let boot = bootstrap(&datadir, &config, params)?;
            let tip = boot.state.tip().context("no tip after bootstrap")?;
            if boot.mined {
                println!("genesis {}", boot.params.genesis_hash.unwrap());
                println!("block one {} (time {}, nonce {})", tip.hash, boot.params.block_one_time.unwrap(), boot.params.block_one_nonce.unwrap());
                println!("accepted");
            } else {
                println!("loaded height {} tip {}, checkpoint ok", tip.height, tip.hash);
            }
        }
        Command::Serve { datadir, rpcport, conf } => serve(&datadir, rpcport, conf)?,
        Command::Claim { host, rpcport, keys, addresses, all, dest, mine } => {
            let registry = KeyRegistry::read(&keys).with_context(|| format!("reading {}", keys.display()))?;
            let targets: Vec<String> = if all {
                registry.records().iter().map(|r| r.address.to_string()).collect()
            } else if addresses.is_empty() {
                bail!("give --address or --all");
            } else {
                addresses
            };
            let client = RpcClient::new(format!("http://{host}:{rpcport}/"));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(claim(&client, &registry, &targets, dest.as_deref(), all, mine))?;
        }
        Command::Verify { datadir } => {
            let params = match ChainParams::load(&sidecoin::chain::params_path(&datadir)) {
                Ok(p) => p,
                Err(_) => load_params(&datadir, None)?,
            };
            let report = verify_datadir(&datadir, &params)?;
            println!(
                "verified {} blocks, tip {}, {} utxos, digest {}",
                report.blocks,
                report.tip.map(|h| h.to_string()).unwrap_or_else(|| "none".into()),
                report.utxo_count,
                report.utxo_digest
            );
        }
    }
    Ok(())
}

fn serve(datadir: &Path, rpcport: Option<u16>, conf: Option<PathBuf>) -> Result<()> {
    let conf_path = conf.unwrap_or_else(|| datadir.join(CONF_FILE_NAME));
    let config = NodeConfig::load(&conf_path)?;
    let boot = bootstrap(datadir, &BootstrapConfig::default(), ChainParams::for_network(config.network))?;
    let mut node = Node::with_datadir_wallet(boot.state, boot.snapshot, datadir)?;
    if let Some(text) = &config.reward_address {
        node.set_reward_address(Address::parse_with_version(text, SPINOFF_ADDRESS_VERSION)?);
    }
    let node = Arc::new(RwLock::new(node));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let addr = format!("{}:{}", config.rpc_bind, rpcport.unwrap_or(config.rpc_port));
        let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
        println!("listening on {}", listener.local_addr()?);
        tokio::select! {
            result = rpc::serve(listener, node) => result?,
            _ = tokio::signal::ctrl_c() => println!("shutting down"),
        }
        Ok(())
    })
}

async fn claim(
    client: &RpcClient,
    registry: &KeyRegistry,
    targets: &[String],
    dest: Option<&str>,
    skip_missing: bool,
    mine: bool,
) -> Result<()> {
    let mut claimed = 0;
    for address in targets {
        let record = registry.by_address(address).with_context(|| format!("no key for {address}"))?;
        let params = match dest {
            Some(d) => json!([address, d]),
            None => json!([address]),
        };
        let command = match client.call("claimtx", params).await {
            Ok(Value::String(s)) => s,
            Err(ClientError::Rpc { code, .. }) if skip_missing && code == ADDRESS_NOT_IN_SNAPSHOT => continue,
            Ok(other) => bail!("unexpected claimtx result {other}"),
            Err(e) => return Err(e).with_context(|| format!("claimtx {address}")),
        };
        let bundle = ClaimBundle::parse_command(&command)?;
        let signed = sign_claim(&bundle, &record.key)?;
        let txid = client.call("sendrawtransaction", json!([signed])).await.with_context(|| format!("sending claim for {address}"))?;
        println!("{address} {}", txid.as_str().unwrap_or_default());
        claimed += 1;
    }
    if mine && claimed > 0 {
        let hashes = client.call("generate", json!([1])).await?;
        println!("mined {}", hashes[0].as_str().unwrap_or_default());
    }
    println!("{claimed} claim(s) submitted");
    Ok(())
}
