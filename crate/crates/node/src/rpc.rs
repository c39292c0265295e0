//! JSON-RPC 1.0 over HTTP.
//!
//! Requests are `{"id", "method", "params"}` posted to `/`. Responses carry
//! `result`, `error` and `id`, with exactly one of the first two non-null.

use std::sync::Arc;

use axum::{body::Bytes, extract::State, routing::post, Json, Router};
use parking_lot::RwLock;
use serde_json::{json, Value};
use tokio::net::TcpListener;

use sidecoin::claim::{sign_raw_transaction, ClaimError, Node, PrevoutDescriptor};
use sidecoin::script::KeyPair;
use sidecoin::Hash256;

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const INTERNAL_ERROR: i64 = -32603;
pub const INVALID_ADDRESS_OR_KEY: i64 = -5;
pub const ADDRESS_NOT_IN_SNAPSHOT: i64 = -101;
pub const ALREADY_CLAIMED: i64 = -102;
pub const SCRIPT_FAILURE: i64 = -103;
pub const DECODE_ERROR: i64 = -104;
pub const VALUE_INFLATION: i64 = -105;
pub const UNKNOWN_OUTPOINT: i64 = -106;
pub const DUPLICATE_IN_MEMPOOL: i64 = -107;
pub const NODE_NOT_BOOTSTRAPPED: i64 = -108;
pub const KEY_MISMATCH: i64 = -109;

/// Largest block count a single `generate` call may request.
const MAX_GENERATE: u64 = 1_000;

#[derive(Debug)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
}

impl RpcError {
    fn new(code: i64, message: impl Into<String>) -> Self {
        RpcError { code, message: message.into() }
    }

    fn params(message: impl Into<String>) -> Self {
        Self::new(INVALID_PARAMS, message)
    }
}

impl From<ClaimError> for RpcError {
    fn from(e: ClaimError) -> Self {
        let code = match &e {
            ClaimError::AddressNotInSnapshot(_) => ADDRESS_NOT_IN_SNAPSHOT,
            ClaimError::AlreadyClaimed(_) => ALREADY_CLAIMED,
            ClaimError::ScriptFailure(_) => SCRIPT_FAILURE,
            ClaimError::DecodeError(_) | ClaimError::MalformedBundle(_) => DECODE_ERROR,
            ClaimError::ValueInflation => VALUE_INFLATION,
            ClaimError::UnknownOutpoint(_) => UNKNOWN_OUTPOINT,
            ClaimError::DuplicateInMempool(_) => DUPLICATE_IN_MEMPOOL,
            ClaimError::NodeNotBootstrapped => NODE_NOT_BOOTSTRAPPED,
            ClaimError::KeyMismatch => KEY_MISMATCH,
            ClaimError::InvalidAddress(_) => INVALID_ADDRESS_OR_KEY,
            ClaimError::Wallet(_) | ClaimError::Chain(_) => INTERNAL_ERROR,
        };
        RpcError::new(code, e.to_string())
    }
}

pub type SharedNode = Arc<RwLock<Node>>;

pub fn router(node: SharedNode) -> Router {
    Router::new().route("/", post(handle)).with_state(node)
}

/// Serves until the listener fails or the future is dropped.
pub async fn serve(listener: TcpListener, node: SharedNode) -> std::io::Result<()> {
    axum::serve(listener, router(node)).await
}

async fn handle(State(node): State<SharedNode>, body: Bytes) -> Json<Value> {
    let request: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return Json(response(Value::Null, Err(RpcError::new(PARSE_ERROR, format!("parse error: {e}"))))),
    };
    let id = request.get("id").cloned().unwrap_or(Value::Null);
    let Some(method) = request.get("method").and_then(Value::as_str).map(str::to_owned) else {
        return Json(response(id, Err(RpcError::new(INVALID_REQUEST, "missing method"))));
    };
    let params = match request.get("params") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items.clone(),
        Some(_) => return Json(response(id, Err(RpcError::params("params must be an array")))),
    };
    let result = tokio::task::spawn_blocking(move || dispatch(&node, &method, &params))
        .await
        .unwrap_or_else(|e| Err(RpcError::new(INTERNAL_ERROR, e.to_string())));
    Json(response(id, result))
}

fn response(id: Value, result: Result<Value, RpcError>) -> Value {
    match result {
        Ok(value) => json!({ "result": value, "error": null, "id": id }),
        Err(e) => json!({ "result": null, "error": { "code": e.code, "message": e.message }, "id": id }),
    }
}

fn str_param<'a>(params: &'a [Value], i: usize, name: &str) -> Result<&'a str, RpcError> {
    params.get(i).and_then(Value::as_str).ok_or_else(|| RpcError::params(format!("{name} must be a string")))
}

fn opt_str_param<'a>(params: &'a [Value], i: usize, name: &str) -> Result<Option<&'a str>, RpcError> {
    match params.get(i) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => str_param(params, i, name).map(Some),
    }
}

pub fn dispatch(node: &SharedNode, method: &str, params: &[Value]) -> Result<Value, RpcError> {
    match method {
        "claimtx" => {
            let address = str_param(params, 0, "address")?;
            let dest = opt_str_param(params, 1, "destination")?;
            let bundle = node.write().claimtx(address, dest, &mut rand::rngs::OsRng)?;
            Ok(Value::String(bundle.to_command()))
        }
        "signrawtransaction" => {
            let hex = str_param(params, 0, "hex")?;
            let prevouts: Vec<PrevoutDescriptor> = match params.get(1) {
                None | Some(Value::Null) => Vec::new(),
                Some(Value::String(text)) => serde_json::from_str(text).map_err(|e| RpcError::params(e.to_string()))?,
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| RpcError::params(e.to_string()))?,
            };
            let keys: Vec<KeyPair> = match params.get(2) {
                None | Some(Value::Null) => node.read().wallet().keys().to_vec(),
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|k| {
                        k.as_str()
                            .and_then(|s| KeyPair::from_secret_hex(s).ok())
                            .ok_or_else(|| RpcError::new(INVALID_ADDRESS_OR_KEY, "keys must be 64-hex secrets"))
                    })
                    .collect::<Result<_, _>>()?,
                Some(_) => return Err(RpcError::params("keys must be an array")),
            };
            let signed = sign_raw_transaction(hex, &prevouts, &keys)?;
            Ok(json!({ "hex": signed.hex, "complete": signed.complete }))
        }
        "sendrawtransaction" => {
            let hex = str_param(params, 0, "hex")?;
            Ok(Value::String(node.write().submit(hex)?.to_string()))
        }
        "getsnapshotentry" => {
            let address = str_param(params, 0, "address")?;
            let info = node.read().snapshot_entry(address)?;
            Ok(json!({
                "balance": format!("{}.00000000", info.entry.balance),
                "satoshis": info.entry.balance.to_sat(),
                "hash160": info.entry.hash160.to_string(),
                "address": info.entry.address,
                "index": info.index,
                "txid": info.outpoint.txid.to_string(),
                "vout": info.outpoint.vout,
                "claimed": info.claimed,
            }))
        }
        "getblock" => {
            let hash: Hash256 = str_param(params, 0, "hash")?
                .parse()
                .map_err(|_| RpcError::new(INVALID_ADDRESS_OR_KEY, "invalid block hash"))?;
            let node = node.read();
            let (height, block) = node
                .get_block(&hash)
                .map_err(|e| RpcError::new(INTERNAL_ERROR, e.to_string()))?
                .ok_or_else(|| RpcError::new(INVALID_ADDRESS_OR_KEY, "block not found"))?;
            let h = &block.header;
            Ok(json!({
                "hash": hash.to_string(),
                "height": height,
                "version": h.version,
                "previousblockhash": h.prev_hash.to_string(),
                "merkleroot": h.merkle_root.to_string(),
                "time": h.time,
                "bits": format!("{:08x}", h.bits),
                "nonce": h.nonce,
                "tx": block.transactions.iter().map(|t| t.txid().to_string()).collect::<Vec<_>>(),
                "hex": hex::encode(block.serialize()),
            }))
        }
        "getbalance" => Ok(json!(node.read().balance().to_sat())),
        "getnewaddress" => Ok(Value::String(node.write().new_address(&mut rand::rngs::OsRng)?.to_string())),
        "generate" => {
            let n = params
                .first()
                .and_then(Value::as_u64)
                .filter(|n| *n <= MAX_GENERATE)
                .ok_or_else(|| RpcError::params(format!("n must be an integer in 0..={MAX_GENERATE}")))?;
            let hashes = node.write().generate(n as u32)?;
            Ok(json!(hashes.iter().map(Hash256::to_string).collect::<Vec<_>>()))
        }
        other => Err(RpcError::new(METHOD_NOT_FOUND, format!("method not found: {other}"))),
    }
}
