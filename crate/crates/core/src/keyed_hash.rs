//! Hashing and keyed PRFs into `F_p`.
//!
//! Inputs are framed as `tag || len(part_1) || part_1 || ... ` with 8-byte
//! big-endian lengths. The four tags differ at byte 7, so no tag is a prefix
//! of another and every `(domain, parts)` pair has a distinct encoding.
//! SHA-512 (or HMAC-SHA-512) output is reduced from 512 bits, which keeps the
//! bias below `2^-250` for 255-bit moduli.

use std::fmt;

use hmac::{Hmac, Mac};
use rand::RngCore;
use sha2::{Digest, Sha512};

use crate::field::{Field, FieldElement, FieldError};

type HmacSha512 = Hmac<Sha512>;

/// Derivation contexts, each with its own published tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `n = HMAC_{k_sig}(M)`
    Nonce,
    /// `r = H(M, n)`
    Receipt,
    /// `K' = HMAC_K(M)`
    MessageKey,
    /// `x = H(M, sigma_alg)`
    IcValue,
}

impl Domain {
    pub const ALL: [Domain; 4] = [Domain::Nonce, Domain::Receipt, Domain::MessageKey, Domain::IcValue];

    pub fn tag(self) -> &'static [u8] {
        match self {
            Domain::Nonce => b"SLM/v1/nonce",
            Domain::Receipt => b"SLM/v1/receipt",
            Domain::MessageKey => b"SLM/v1/msgkey",
            Domain::IcValue => b"SLM/v1/icval",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashCtx {
    pub domain: Domain,
    pub field: Field,
}

impl HashCtx {
    pub fn new(domain: Domain, field: Field) -> Self {
        HashCtx { domain, field }
    }
}

/// The 32-byte key shared by signer and designated verifier.
#[derive(Clone, PartialEq, Eq)]
pub struct PairKey([u8; 32]);

impl PairKey {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        PairKey(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FieldError> {
        let arr: [u8; 32] = bytes.try_into().map_err(|_| FieldError::LengthMismatch {
            expected: 32,
            actual: bytes.len(),
        })?;
        Ok(PairKey(arr))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, FieldError> {
        let bytes = hex::decode(s.trim()).map_err(|e| FieldError::Hex(e.to_string()))?;
        Self::from_bytes(&bytes)
    }
}

impl fmt::Debug for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PairKey(..)")
    }
}

/// The framed byte string fed to the hash or PRF.
pub fn encode_input(domain: Domain, parts: &[&[u8]]) -> Vec<u8> {
    let total: usize = parts.iter().map(|p| p.len() + 8).sum();
    let mut out = Vec::with_capacity(domain.tag().len() + total);
    out.extend_from_slice(domain.tag());
    for part in parts {
        out.extend_from_slice(&(part.len() as u64).to_be_bytes());
        out.extend_from_slice(part);
    }
    out
}

pub fn hash_to_field(ctx: &HashCtx, parts: &[&[u8]]) -> FieldElement {
    let digest = Sha512::digest(encode_input(ctx.domain, parts));
    ctx.field.reduce_wide(&digest).expect("SHA-512 digests are 64 bytes")
}

/// HMAC-SHA-512 under `key`, reduced into the field.
pub fn prf_to_field(key: &[u8], ctx: &HashCtx, parts: &[&[u8]]) -> FieldElement {
    let mut mac = HmacSha512::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(&encode_input(ctx.domain, parts));
    let digest = mac.finalize().into_bytes();
    ctx.field.reduce_wide(&digest).expect("HMAC-SHA-512 tags are 64 bytes")
}

/// `n = HMAC_{k_sig}(M)` and `r = H(M, n)`.
pub fn derive_receipt(k_sig: &PairKey, msg: &[u8], field: Field) -> (FieldElement, FieldElement) {
    let n = prf_to_field(k_sig.as_bytes(), &HashCtx::new(Domain::Nonce, field), &[msg]);
    let r = receipt_from_nonce(msg, &n);
    (n, r)
}

/// `r = H(M, n)` for a nonce already in hand.
pub fn receipt_from_nonce(msg: &[u8], n: &FieldElement) -> FieldElement {
    let ctx = HashCtx::new(Domain::Receipt, n.field());
    hash_to_field(&ctx, &[msg, &n.to_bytes()])
}

/// The receipt a verifier would use if no nonce were mixed in: `r = H(M)`.
/// Only the weakened public-receipt variant uses this.
pub fn public_receipt(msg: &[u8], field: Field) -> FieldElement {
    hash_to_field(&HashCtx::new(Domain::Receipt, field), &[msg])
}

/// `K' = HMAC_K(M)` with `K` keyed by its fixed-width encoding.
pub fn message_key(long_term: &FieldElement, msg: &[u8]) -> FieldElement {
    let ctx = HashCtx::new(Domain::MessageKey, long_term.field());
    prf_to_field(&long_term.to_bytes(), &ctx, &[msg])
}

/// `x = H(M, sigma_alg)` where `sig_bytes` is the signature wire encoding.
pub fn ic_value(msg: &[u8], sig_bytes: &[u8], field: Field) -> FieldElement {
    hash_to_field(&HashCtx::new(Domain::IcValue, field), &[msg, sig_bytes])
}
