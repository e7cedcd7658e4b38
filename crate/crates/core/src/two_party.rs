//! Two-party designated-verifier signatures.
//!
//! The signer holds a long-term key `K`; signer and designated verifier share
//! a pair key `k_sig`. A signature on `M` is five field elements
//!
//! ```text
//! s1 = b (K' - r)        s2 = d / b          s3 = d K1'
//! s4 = d e1 / e          s5 = d (K0' - r e0 / e)
//! ```
//!
//! where `K' = HMAC_K(M)`, `r = H(M, HMAC_{k_sig}(M))`, `e = alpha * beta`,
//! and `(K0', K1')`, `(e0, e1)` are 2-of-2 shares under the public weights.
//! Verification rebuilds `V0 = s1 s2 - s5` and `V1 = s1 s2 - s3 + r s4`,
//! which for honest signatures are `d w0 C` and `d w1 C` and therefore
//! interpolate to zero at the origin.
//!
//! Anyone who can compute `r` can also produce accepting signatures
//! ([`dv_forge`]) and solve for the hidden signing values up to a
//! one-parameter family ([`extract_params`]); that is what makes the
//! verifier designated. [`public_r_forge`] shows why `r` must not be public.

use rand::RngCore;
use thiserror::Error;

use crate::field::{Field, FieldElement, FieldError};
use crate::keyed_hash::{self, PairKey};
use crate::sss::{self, SharePair, Weights};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("malformed signature: expected {expected} bytes, got {actual}")]
    MalformedSignature { expected: usize, actual: usize },
    #[error("malformed signature: {0}")]
    Encoding(#[from] FieldError),
    #[error("degenerate extraction: {0}")]
    DegenerateExtraction(&'static str),
}

/// Public context: the field and the interpolation weights fixed at key generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub field: Field,
    pub weights: Weights,
}

impl Params {
    pub fn new(weights: Weights) -> Self {
        Params {
            field: weights.field(),
            weights,
        }
    }

    /// Samples fresh public weights.
    pub fn generate<R: RngCore + ?Sized>(field: Field, rng: &mut R) -> Self {
        Params::new(Weights::sample(field, rng))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    /// Long-term signing key `K`, never zero.
    pub sk: FieldElement,
    /// Public key `(w0, w1)`.
    pub pk: Weights,
    /// Shared with the designated verifier only.
    pub k_sig: PairKey,
}

impl KeyMaterial {
    pub fn field(&self) -> Field {
        self.sk.field()
    }

    pub fn sk_bytes(&self) -> Vec<u8> {
        self.sk.to_bytes()
    }

    pub fn pk_bytes(&self) -> Vec<u8> {
        self.pk.to_bytes()
    }
}

pub fn keygen<R: RngCore + ?Sized>(params: &Params, rng: &mut R) -> KeyMaterial {
    KeyMaterial {
        sk: params.field.sample_unit(rng),
        pk: params.weights,
        k_sig: PairKey::generate(rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub s1: FieldElement,
    pub s2: FieldElement,
    pub s3: FieldElement,
    pub s4: FieldElement,
    pub s5: FieldElement,
}

impl Signature {
    pub fn components(&self) -> [FieldElement; 5] {
        [self.s1, self.s2, self.s3, self.s4, self.s5]
    }

    pub fn from_components(c: [FieldElement; 5]) -> Self {
        Signature {
            s1: c[0],
            s2: c[1],
            s3: c[2],
            s4: c[3],
            s5: c[4],
        }
    }

    pub fn field(&self) -> Field {
        self.s1.field()
    }

    /// `s1 || s2 || s3 || s4 || s5`, each fixed-width big-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 * self.field().byte_len());
        for c in self.components() {
            out.extend(c.to_bytes());
        }
        out
    }

    pub fn from_bytes(field: Field, bytes: &[u8]) -> Result<Self, SignatureError> {
        let w = field.byte_len();
        if bytes.len() != 5 * w {
            return Err(SignatureError::MalformedSignature {
                expected: 5 * w,
                actual: bytes.len(),
            });
        }
        let mut c = [field.zero(); 5];
        for (i, chunk) in bytes.chunks(w).enumerate() {
            c[i] = field.from_bytes(chunk)?;
        }
        Ok(Signature::from_components(c))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(field: Field, s: &str) -> Result<Self, SignatureError> {
        let bytes = hex::decode(s.trim()).map_err(|e| FieldError::Hex(e.to_string()))?;
        Self::from_bytes(field, &bytes)
    }
}

/// The per-signature randomness drawn by the signer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigningRandomness {
    pub alpha: FieldElement,
    pub beta: FieldElement,
    pub b: FieldElement,
    pub d: FieldElement,
    pub slope_eps: FieldElement,
    pub slope_k: FieldElement,
}

impl SigningRandomness {
    pub fn sample<R: RngCore + ?Sized>(field: Field, rng: &mut R) -> Self {
        SigningRandomness {
            alpha: field.sample_unit(rng),
            beta: field.sample_unit(rng),
            b: field.sample_unit(rng),
            d: field.sample_unit(rng),
            slope_eps: field.sample(rng),
            slope_k: field.sample(rng),
        }
    }
}

/// Every intermediate value of one signing run. Kept for tests and
/// extraction checks; never serialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigningTape {
    pub alpha: FieldElement,
    pub beta: FieldElement,
    pub b: FieldElement,
    pub d: FieldElement,
    pub eps: FieldElement,
    pub slope_eps: FieldElement,
    pub eps_shares: SharePair,
    pub k_prime: FieldElement,
    pub slope_k: FieldElement,
    pub k_shares: SharePair,
    pub n: FieldElement,
    pub r: FieldElement,
}

/// The signature equations for given `K'`, `r`, shares and masks.
///
/// `b`, `d` and `eps` must be nonzero. Performs 11 multiplications and two
/// inversions.
fn signature_core(
    k_prime: FieldElement,
    r: FieldElement,
    k_shares: &SharePair,
    eps: FieldElement,
    eps_shares: &SharePair,
    b: FieldElement,
    d: FieldElement,
) -> Signature {
    let b_inv = b.inv().expect("b is sampled from F_p*");
    let eps_inv = eps.inv().expect("eps is a product of units");
    let d_over_eps = d * eps_inv;
    Signature {
        s1: b * (k_prime - r),
        s2: d * b_inv,
        s3: k_shares.s1 * d,
        s4: d_over_eps * eps_shares.s1,
        s5: d * k_shares.s0 - (r * d_over_eps) * eps_shares.s0,
    }
}

/// Signs with explicit randomness; `n` and `r` are derived from `k_sig`.
pub fn sign_with_randomness(keys: &KeyMaterial, msg: &[u8], rand: &SigningRandomness) -> (Signature, SigningTape) {
    let field = keys.field();
    let (n, r) = keyed_hash::derive_receipt(&keys.k_sig, msg, field);
    let eps = rand.alpha * rand.beta;
    let eps_shares = sss::share_with_slope(eps, rand.slope_eps, &keys.pk);
    let k_prime = keyed_hash::message_key(&keys.sk, msg);
    let k_shares = sss::share_with_slope(k_prime, rand.slope_k, &keys.pk);
    let sig = signature_core(k_prime, r, &k_shares, eps, &eps_shares, rand.b, rand.d);
    let tape = SigningTape {
        alpha: rand.alpha,
        beta: rand.beta,
        b: rand.b,
        d: rand.d,
        eps,
        slope_eps: rand.slope_eps,
        eps_shares,
        k_prime,
        slope_k: rand.slope_k,
        k_shares,
        n,
        r,
    };
    (sig, tape)
}

/// Signs `msg`. About one signature in `p` has `s4 = 0` and will be
/// rejected by the verifier; see [`sign_until_valid`].
pub fn sign<R: RngCore + ?Sized>(keys: &KeyMaterial, msg: &[u8], rng: &mut R) -> (Signature, SigningTape) {
    let rand = SigningRandomness::sample(keys.field(), rng);
    sign_with_randomness(keys, msg, &rand)
}

/// Re-signs until `s4 != 0`, at most `max_attempts` times.
pub fn sign_until_valid<R: RngCore + ?Sized>(
    keys: &KeyMaterial,
    msg: &[u8],
    rng: &mut R,
    max_attempts: usize,
) -> Option<(Signature, SigningTape)> {
    (0..max_attempts)
        .map(|_| sign(keys, msg, rng))
        .find(|(sig, _)| !sig.s4.is_zero())
}

/// The verification shares `(V0, V1)` under receipt `r`.
pub fn verification_shares(sig: &Signature, r: FieldElement) -> SharePair {
    let prod = sig.s1 * sig.s2;
    SharePair {
        s0: prod - sig.s5,
        s1: prod - sig.s3 + r * sig.s4,
    }
}

/// The algebraic check: `s4 != 0` and `V0, V1` interpolate to zero.
pub fn verify_with_receipt(pk: &Weights, r: FieldElement, sig: &Signature) -> bool {
    if sig.s4.is_zero() {
        return false;
    }
    sss::reconstruct(&verification_shares(sig, r), pk).is_zero()
}

/// Designated-verifier check; recomputes `r` from `k_sig`.
pub fn verify(pk: &Weights, k_sig: &PairKey, msg: &[u8], sig: &Signature) -> bool {
    let (_, r) = keyed_hash::derive_receipt(k_sig, msg, pk.field());
    verify_with_receipt(pk, r, sig)
}

/// [`verify`] on a wire-encoded signature.
pub fn verify_bytes(pk: &Weights, k_sig: &PairKey, msg: &[u8], sig: &[u8]) -> Result<bool, SignatureError> {
    let sig = Signature::from_bytes(pk.field(), sig)?;
    Ok(verify(pk, k_sig, msg, &sig))
}

/// Verifier for the weakened variant with the public receipt `r = H(M)`.
pub fn verify_public_r(pk: &Weights, msg: &[u8], sig: &Signature) -> bool {
    verify_with_receipt(pk, keyed_hash::public_receipt(msg, pk.field()), sig)
}

/// Values a simulating verifier draws in place of the signer's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulatorChoice {
    pub k_prime: FieldElement,
    pub slope_k: FieldElement,
    pub slope_eps: FieldElement,
    pub d: FieldElement,
    pub eps: FieldElement,
    pub b: FieldElement,
}

impl SimulatorChoice {
    pub fn sample<R: RngCore + ?Sized>(field: Field, rng: &mut R) -> Self {
        SimulatorChoice {
            k_prime: field.sample(rng),
            slope_k: field.sample(rng),
            slope_eps: field.sample(rng),
            d: field.sample_unit(rng),
            eps: field.sample_unit(rng),
            b: field.sample_unit(rng),
        }
    }
}

/// Builds an accepting transcript from `r` alone, without the signing key.
pub fn simulate_with_receipt(pk: &Weights, r: FieldElement, choice: &SimulatorChoice) -> Signature {
    let k_shares = sss::share_with_slope(choice.k_prime, choice.slope_k, pk);
    let eps_shares = sss::share_with_slope(choice.eps, choice.slope_eps, pk);
    signature_core(
        choice.k_prime,
        r,
        &k_shares,
        choice.eps,
        &eps_shares,
        choice.b,
        choice.d,
    )
}

/// The designated verifier's simulator: any holder of `k_sig` can produce
/// signatures that verify and look like the signer's.
pub fn dv_forge<R: RngCore + ?Sized>(k_sig: &PairKey, pk: &Weights, msg: &[u8], rng: &mut R) -> Signature {
    let (_, r) = keyed_hash::derive_receipt(k_sig, msg, pk.field());
    simulate_with_receipt(pk, r, &SimulatorChoice::sample(pk.field(), rng))
}

/// Forgery against [`verify_public_r`]: pick `s1..s4` freely and solve the
/// single linear constraint for `s5`.
pub fn public_r_forge<R: RngCore + ?Sized>(pk: &Weights, msg: &[u8], rng: &mut R) -> Signature {
    let field = pk.field();
    let r = keyed_hash::public_receipt(msg, field);
    let (s1, s2, s3, s4) = (
        field.sample(rng),
        field.sample(rng),
        field.sample(rng),
        field.sample(rng),
    );
    forge_for_receipt(pk, r, [s1, s2, s3, s4])
}

/// `s5 = s1 s2 - (w0 / w1) V1` makes `V0 = (w0 / w1) V1`, which always
/// reconstructs to zero.
pub fn forge_for_receipt(pk: &Weights, r: FieldElement, free: [FieldElement; 4]) -> Signature {
    let [s1, s2, s3, s4] = free;
    let prod = s1 * s2;
    let v1 = prod - s3 + r * s4;
    let ratio = pk.w0() * pk.w1().inv().expect("weights are nonzero");
    Signature {
        s1,
        s2,
        s3,
        s4,
        s5: prod - ratio * v1,
    }
}

/// Which unknown the caller pins to select one member of the solution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hint {
    /// The mask `d`.
    D(FieldElement),
    /// The per-message key `s = K'`.
    S(FieldElement),
    /// The key-sharing slope `a = a_K`.
    A(FieldElement),
}

/// One consistent assignment of the hidden signing values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractedParams {
    pub d: FieldElement,
    /// `K'`
    pub s: FieldElement,
    /// `a_K`
    pub a: FieldElement,
    /// `e0 / e`, undetermined when `r = 0`
    pub u0: Option<FieldElement>,
    /// `e1 / e`
    pub u1: FieldElement,
    pub k0: FieldElement,
    pub k1: FieldElement,
}

/// The one-parameter family of hidden values consistent with an accepted
/// signature and its receipt.
///
/// From `R = s1 s2 / s3 = (s - r) / (a w1 + s)` every member satisfies
/// `s (R - 1) + a w1 R + r = 0`. The reconstruction constraint adds no
/// independent equation, so the family is indexed by `d`:
/// `s = r + s1 s2 / d`, `a = (s3 / d - s) / w1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractedFamily {
    pub sig: Signature,
    pub r: FieldElement,
    pub weights: Weights,
    /// `R = s1 s2 / s3`, absent when `s3 = 0`
    pub ratio: Option<FieldElement>,
}

impl ExtractedFamily {
    pub fn new(pk: &Weights, r: FieldElement, sig: &Signature) -> Self {
        let ratio = sig.s3.inv().ok().map(|inv| sig.s1 * sig.s2 * inv);
        ExtractedFamily {
            sig: *sig,
            r,
            weights: *pk,
            ratio,
        }
    }

    /// The member with mask `d`.
    pub fn member(&self, d: FieldElement) -> Result<ExtractedParams, SignatureError> {
        let d_inv = d.inv().map_err(|_| SignatureError::DegenerateExtraction("d = 0"))?;
        let (w0, w1) = (self.weights.w0(), self.weights.w1());
        let sig = &self.sig;
        let s = self.r + sig.s1 * sig.s2 * d_inv;
        let k1 = sig.s3 * d_inv;
        let a = (k1 - s) * w1.inv()?;
        let k0 = a * w0 + s;
        let u1 = sig.s4 * d_inv;
        let u0 = self.r.inv().ok().map(|r_inv| (k0 - sig.s5 * d_inv) * r_inv);
        Ok(ExtractedParams {
            d,
            s,
            a,
            u0,
            u1,
            k0,
            k1,
        })
    }

    pub fn pin(&self, hint: Hint) -> Result<ExtractedParams, SignatureError> {
        match hint {
            Hint::D(d) => self.member(d),
            Hint::S(s) => {
                let prod = self.sig.s1 * self.sig.s2;
                let diff = (s - self.r)
                    .inv()
                    .map_err(|_| SignatureError::DegenerateExtraction("s = r"))?;
                self.member(prod * diff)
            }
            Hint::A(a) => {
                let ratio = self.ratio.ok_or(SignatureError::DegenerateExtraction("s3 = 0"))?;
                let one = self.r.field().one();
                let ratio_minus_one = (ratio - one)
                    .inv()
                    .map_err(|_| SignatureError::DegenerateExtraction("R = 1"))?;
                let w1 = self.weights.w1();
                let s = (-(a * w1 * ratio) - self.r) * ratio_minus_one;
                let k1 = a * w1 + s;
                let k1_inv = k1
                    .inv()
                    .map_err(|_| SignatureError::DegenerateExtraction("a w1 + s = 0"))?;
                self.member(self.sig.s3 * k1_inv)
            }
        }
    }

    /// `s (R - 1) + a w1 R + r`, zero for every member. `None` when `s3 = 0`.
    pub fn ratio_residual(&self, m: &ExtractedParams) -> Option<FieldElement> {
        let ratio = self.ratio?;
        let one = self.r.field().one();
        Some(m.s * (ratio - one) + m.a * self.weights.w1() * ratio + self.r)
    }
}

/// Recomputes `r` with `k_sig` and pins the extraction family with `hint`.
pub fn extract_params(
    pk: &Weights,
    k_sig: &PairKey,
    msg: &[u8],
    sig: &Signature,
    hint: Hint,
) -> Result<(ExtractedFamily, ExtractedParams), SignatureError> {
    let (_, r) = keyed_hash::derive_receipt(k_sig, msg, pk.field());
    let family = ExtractedFamily::new(pk, r, sig);
    let pinned = family.pin(hint)?;
    Ok((family, pinned))
}
