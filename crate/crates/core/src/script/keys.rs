use rand::RngCore;
use secp256k1::{ecdsa::Signature, Message, PublicKey, SecretKey};
use thiserror::Error;

use crate::model::{hash160, Address, Hash160};

/// The only signature hash type the engine accepts.
pub const SIGHASH_ALL: u8 = 0x01;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyError {
    #[error("invalid private key hex")]
    Hex,
    #[error("private key is not a valid secp256k1 scalar")]
    OutOfRange,
}

/// A secp256k1 keypair and the SEC encoding its hash160 is taken over.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct KeyPair {
    secret: SecretKey,
    public: PublicKey,
    compressed: bool,
}

impl KeyPair {
    pub fn from_secret_bytes(bytes: [u8; 32]) -> Result<Self, KeyError> {
        let secret = SecretKey::from_secret_bytes(bytes).map_err(|_| KeyError::OutOfRange)?;
        Ok(KeyPair { secret, public: secret.public_key(), compressed: true })
    }

    pub fn from_secret_hex(text: &str) -> Result<Self, KeyError> {
        let bytes: [u8; 32] = hex::decode(text.trim())
            .map_err(|_| KeyError::Hex)?
            .try_into()
            .map_err(|_| KeyError::Hex)?;
        Self::from_secret_bytes(bytes)
    }

    /// Draws scalars from `rng` until one is in range.
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut bytes = [0u8; 32];
            rng.fill_bytes(&mut bytes);
            if let Ok(key) = Self::from_secret_bytes(bytes) {
                return key;
            }
        }
    }

    /// Same key, hashed and pushed in 65-byte uncompressed form.
    pub fn uncompressed(mut self) -> Self {
        self.compressed = false;
        self
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.secret.to_secret_bytes()
    }

    pub fn secret_hex(&self) -> String {
        hex::encode(self.secret_bytes())
    }

    pub fn public_key_bytes(&self) -> Vec<u8> {
        if self.compressed {
            self.public.serialize().to_vec()
        } else {
            self.public.serialize_uncompressed().to_vec()
        }
    }

    pub fn hash160(&self) -> Hash160 {
        hash160(&self.public_key_bytes())
    }

    pub fn address(&self, version: u8) -> Address {
        Address::new(version, self.hash160())
    }

    /// DER signature with the SIGHASH_ALL byte appended. RFC 6979 nonces,
    /// low-S form.
    pub fn sign_digest(&self, digest: &[u8; 32]) -> Vec<u8> {
        let mut sig = self.secret.sign_ecdsa(Message::from_digest(*digest));
        sig.normalize_s();
        let mut out = sig.serialize_der().to_vec();
        out.push(SIGHASH_ALL);
        out
    }
}

/// ECDSA check of `sig` (DER ‖ hash type) over `digest`. Malformed keys or
/// encodings yield `false`. High-S signatures are normalized before checking.
pub fn verify_signature(pubkey: &[u8], digest: &[u8; 32], sig: &[u8]) -> bool {
    let Some((&hash_type, der)) = sig.split_last() else {
        return false;
    };
    if hash_type != SIGHASH_ALL {
        return false;
    }
    let Ok(pubkey) = PublicKey::from_slice(pubkey) else {
        return false;
    };
    let Ok(mut signature) = Signature::from_der(der) else {
        return false;
    };
    signature.normalize_s();
    secp256k1::ecdsa::verify(&signature, Message::from_digest(*digest), &pubkey).is_ok()
}
