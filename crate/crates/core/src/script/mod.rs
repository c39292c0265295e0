//! P2PKH script engine: the template, the legacy signature hash, and ECDSA.
//!
//! Only one script form exists on the spinoff chain, so the interpreter is a
//! template matcher rather than a general opcode machine.

mod keys;
mod sighash;
mod template;

pub use keys::{verify_signature, KeyError, KeyPair, SIGHASH_ALL};
pub use sighash::{sighash_all, ScriptContext};
pub use template::{
    build_script_sig, match_p2pkh, p2pkh_script_pubkey, parse_pushes, push_data, OP_CHECKSIG,
    OP_DUP, OP_EQUALVERIFY, OP_HASH160, OP_RETURN,
};

use thiserror::Error;

use crate::model::hash160;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("input index {index} out of range for {inputs} inputs")]
    IndexOutOfRange { index: usize, inputs: usize },
    #[error("prevout script is not pay-to-pubkey-hash")]
    NonTemplateScript,
    #[error("scriptSig must be exactly two data pushes")]
    MalformedScriptSig,
}

/// Runs `script_sig` against the P2PKH prevout in `ctx`.
///
/// `Ok(false)` means the script executed and failed (hash mismatch at
/// OP_EQUALVERIFY or a bad signature at OP_CHECKSIG). Structural problems
/// are errors.
pub fn eval_p2pkh(ctx: &ScriptContext<'_>, script_sig: &[u8]) -> Result<bool, ScriptError> {
    let expected = match_p2pkh(ctx.prevout_script).ok_or(ScriptError::NonTemplateScript)?;
    let pushes = parse_pushes(script_sig).ok_or(ScriptError::MalformedScriptSig)?;
    let [sig, pubkey] = pushes.as_slice() else {
        return Err(ScriptError::MalformedScriptSig);
    };
    // OP_DUP OP_HASH160 <h> OP_EQUALVERIFY
    if hash160(pubkey) != expected {
        return Ok(false);
    }
    // OP_CHECKSIG
    let digest = sighash_all(ctx)?;
    Ok(verify_signature(pubkey, &digest, sig))
}

/// Checks input `index` of `ctx.tx` using its own scriptSig.
pub fn verify_input(ctx: &ScriptContext<'_>) -> Result<bool, ScriptError> {
    let input = ctx.tx.inputs.get(ctx.input_index).ok_or(ScriptError::IndexOutOfRange {
        index: ctx.input_index,
        inputs: ctx.tx.inputs.len(),
    })?;
    eval_p2pkh(ctx, &input.script_sig)
}

/// Signs input `index` of `tx` for a P2PKH prevout and installs the scriptSig.
pub fn sign_p2pkh_input(
    tx: &mut crate::model::Transaction,
    index: usize,
    prevout_script: &[u8],
    prevout_value: crate::model::Amount,
    key: &KeyPair,
) -> Result<(), ScriptError> {
    let digest = sighash_all(&ScriptContext {
        tx,
        input_index: index,
        prevout_script,
        prevout_value,
    })?;
    let sig = key.sign_digest(&digest);
    tx.inputs[index].script_sig = build_script_sig(&sig, &key.public_key_bytes());
    Ok(())
}
