use crate::model::{sha256d, serialize, Amount, Transaction};

use super::keys::SIGHASH_ALL;
use super::ScriptError;

/// Everything a signature check needs to know about the spent output.
#[derive(Clone, Copy, Debug)]
pub struct ScriptContext<'a> {
    pub tx: &'a Transaction,
    pub input_index: usize,
    pub prevout_script: &'a [u8],
    /// Not committed to by the legacy digest; carried for value checks.
    pub prevout_value: Amount,
}

/// Legacy SIGHASH_ALL digest.
///
/// All scriptSigs are emptied, the signed input's is replaced by the prevout
/// scriptPubKey, and the 4-byte hash type is appended before hashing.
pub fn sighash_all(ctx: &ScriptContext<'_>) -> Result<[u8; 32], ScriptError> {
    if ctx.input_index >= ctx.tx.inputs.len() {
        return Err(ScriptError::IndexOutOfRange {
            index: ctx.input_index,
            inputs: ctx.tx.inputs.len(),
        });
    }
    let mut copy = ctx.tx.clone();
    for (i, input) in copy.inputs.iter_mut().enumerate() {
        input.script_sig = if i == ctx.input_index { ctx.prevout_script.to_vec() } else { Vec::new() };
    }
    let mut preimage = serialize(&copy);
    preimage.extend_from_slice(&(SIGHASH_ALL as u32).to_le_bytes());
    Ok(sha256d(&preimage))
}
