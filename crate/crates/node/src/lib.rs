//! Node plumbing around `sidecoin`: configuration, the JSON-RPC service and
//! a client for it.

pub mod client;
pub mod config;
pub mod rpc;
