//! The text that travels between the spinoff node and the source wallet.

use serde::{Deserialize, Serialize};

use crate::model::{Hash256, Transaction};
use crate::script::{match_p2pkh, sign_p2pkh_input, KeyPair};
use crate::Amount;

use super::ClaimError;

/// One element of `signrawtransaction`'s second argument.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevoutDescriptor {
    pub txid: Hash256,
    pub vout: u32,
    #[serde(rename = "scriptPubKey", with = "hex::serde")]
    pub script_pubkey: Vec<u8>,
}

/// An unsigned claim plus the prevout data a legacy wallet needs to sign it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimBundle {
    pub unsigned_hex: String,
    pub prevouts: Vec<PrevoutDescriptor>,
}

impl ClaimBundle {
    pub fn prevouts_json(&self) -> String {
        serde_json::to_string(&self.prevouts).expect("descriptors always serialize")
    }

    /// Ready-to-paste console command:
    /// `signrawtransaction '<hex>' '[{"txid":...,"vout":0,"scriptPubKey":...}]'`
    pub fn to_command(&self) -> String {
        format!("signrawtransaction '{}' '{}'", self.unsigned_hex, self.prevouts_json())
    }

    /// Inverse of [`to_command`](Self::to_command).
    pub fn parse_command(text: &str) -> Result<Self, ClaimError> {
        let bad = |why: &str| ClaimError::MalformedBundle(why.to_string());
        let rest = text.trim().strip_prefix("signrawtransaction").ok_or(bad("missing signrawtransaction"))?;
        let args: Vec<&str> = rest.split('\'').collect();
        // ["  ", hex, " ", json, ""]
        let [lead, hex, mid, json, tail] = args.as_slice() else {
            return Err(bad("expected two single-quoted arguments"));
        };
        if !lead.trim().is_empty() || !mid.trim().is_empty() || !tail.trim().is_empty() {
            return Err(bad("unexpected text outside the arguments"));
        }
        let prevouts = serde_json::from_str(json).map_err(|e| ClaimError::MalformedBundle(e.to_string()))?;
        Ok(ClaimBundle { unsigned_hex: hex.to_string(), prevouts })
    }
}

/// Signs the claim's single input with a source-chain key. Stands in for
/// the user's source wallet.
pub fn sign_claim(bundle: &ClaimBundle, key: &KeyPair) -> Result<String, ClaimError> {
    let mut tx = Transaction::from_hex(&bundle.unsigned_hex).map_err(|e| ClaimError::DecodeError(e.to_string()))?;
    let [prevout] = bundle.prevouts.as_slice() else {
        return Err(ClaimError::MalformedBundle("a claim has exactly one prevout".into()));
    };
    if tx.inputs.len() != 1 || tx.inputs[0].prevout != crate::OutPoint::new(prevout.txid, prevout.vout) {
        return Err(ClaimError::MalformedBundle("prevout does not match the transaction input".into()));
    }
    let owner = match_p2pkh(&prevout.script_pubkey).ok_or(ClaimError::MalformedBundle("prevout is not P2PKH".into()))?;
    if owner != key.hash160() {
        return Err(ClaimError::KeyMismatch);
    }
    // The legacy digest does not commit to the prevout value.
    sign_p2pkh_input(&mut tx, 0, &prevout.script_pubkey, Amount::ZERO, key)
        .map_err(|e| ClaimError::ScriptFailure(e.to_string()))?;
    Ok(tx.to_hex())
}

/// Result of a general `signrawtransaction`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedRaw {
    pub hex: String,
    /// False when some input had no matching key or descriptor.
    pub complete: bool,
}

/// Signs every input for which `prevouts` has a descriptor and `keys` holds
/// the owning key.
pub fn sign_raw_transaction(hex: &str, prevouts: &[PrevoutDescriptor], keys: &[KeyPair]) -> Result<SignedRaw, ClaimError> {
    let mut tx = Transaction::from_hex(hex).map_err(|e| ClaimError::DecodeError(e.to_string()))?;
    let mut complete = true;
    for index in 0..tx.inputs.len() {
        let outpoint = tx.inputs[index].prevout;
        let found = prevouts.iter().find(|p| p.txid == outpoint.txid && p.vout == outpoint.vout).and_then(|p| {
            let owner = match_p2pkh(&p.script_pubkey)?;
            keys.iter().find(|k| k.hash160() == owner).map(|k| (p, k))
        });
        match found {
            Some((p, key)) => sign_p2pkh_input(&mut tx, index, &p.script_pubkey, Amount::ZERO, key)
                .map_err(|e| ClaimError::ScriptFailure(e.to_string()))?,
            None => complete = false,
        }
    }
    Ok(SignedRaw { hex: tx.to_hex(), complete })
}
