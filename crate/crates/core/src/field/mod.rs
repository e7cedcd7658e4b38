//! Prime-field arithmetic with a modulus chosen at runtime.
//!
//! Every field shares one representation: four 64-bit limbs in Montgomery
//! form. A [`Field`] is a cheap `Copy` handle to interned constants, so two
//! handles built from the same prime compare equal and elements built from
//! them can be mixed freely. Elements of different fields never mix: the
//! operator impls panic on a modulus mismatch, the `checked_*` methods
//! return [`FieldError::ModulusMismatch`].

mod limbs;
pub mod ops;
mod prime;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::RngCore;
use thiserror::Error;

use limbs::{limbs_from_be, limbs_to_be, Limbs, Montgomery};
pub use prime::Prime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("operands belong to different fields")]
    ModulusMismatch,
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("expected {expected} bytes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("encoded value is not reduced modulo p")]
    NonCanonical,
    #[error("{0} is not an odd prime >= 3")]
    NotPrime(String),
    #[error("modulus exceeds 256 bits")]
    PrimeTooLarge,
    #[error("invalid hex: {0}")]
    Hex(String),
}

struct FieldParams {
    prime: Prime,
    mont: Montgomery,
    byte_len: usize,
}

fn registry() -> &'static Mutex<Vec<&'static FieldParams>> {
    static REGISTRY: OnceLock<Mutex<Vec<&'static FieldParams>>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(Vec::new()))
}

fn biguint_to_limbs(v: &BigUint) -> Limbs {
    let digits = v.to_u64_digits();
    let mut out = [0u64; 4];
    out[..digits.len()].copy_from_slice(&digits);
    out
}

/// Handle to the field `F_p`.
#[derive(Clone, Copy)]
pub struct Field {
    params: &'static FieldParams,
}

impl Field {
    /// Interns the constants for `prime`; repeated calls return the same handle.
    pub fn new(prime: &Prime) -> Field {
        let mut reg = registry().lock().unwrap_or_else(|e| e.into_inner());
        if let Some(params) = reg.iter().find(|f| f.prime == *prime) {
            return Field { params };
        }
        let p = prime.value();
        let r = BigUint::one() << 256u32;
        let r_mod = &r % p;
        let r2 = (&r_mod * &r_mod) % p;
        let r3 = (&r2 * &r_mod) % p;
        let mont = Montgomery::new(
            biguint_to_limbs(p),
            biguint_to_limbs(&r_mod),
            biguint_to_limbs(&r2),
            biguint_to_limbs(&r3),
            prime.bits(),
        );
        let params: &'static FieldParams = Box::leak(Box::new(FieldParams {
            prime: prime.clone(),
            mont,
            byte_len: prime.byte_len(),
        }));
        reg.push(params);
        Field { params }
    }

    /// Convenience for small test moduli. Panics if `p` is not prime.
    pub fn small(p: u64) -> Field {
        Field::new(&Prime::from_u64(p).expect("small modulus must be prime"))
    }

    pub fn secure() -> Field {
        Field::new(&Prime::secure())
    }

    pub fn prime(&self) -> &'static Prime {
        &self.params.prime
    }

    /// Modulus as `u64` when it fits.
    pub fn order_u64(&self) -> Option<u64> {
        self.params.prime.to_u64()
    }

    pub fn byte_len(&self) -> usize {
        self.params.byte_len
    }

    fn mont(&self) -> &'static Montgomery {
        &self.params.mont
    }

    fn wrap(&self, v: Limbs) -> FieldElement {
        FieldElement { v, field: *self }
    }

    pub fn zero(&self) -> FieldElement {
        self.wrap([0; 4])
    }

    pub fn one(&self) -> FieldElement {
        self.wrap(self.mont().one)
    }

    /// `value mod p`.
    pub fn from_u64(&self, value: u64) -> FieldElement {
        self.wrap(self.mont().to_mont(&[value, 0, 0, 0]))
    }

    pub fn from_biguint(&self, value: &BigUint) -> FieldElement {
        let reduced = value % self.params.prime.value();
        self.wrap(self.mont().to_mont(&biguint_to_limbs(&reduced)))
    }

    /// Uniform element of `F_p`, by rejection sampling on masked fixed-width draws.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let len = self.byte_len();
        let top_bits = self.mont().bits - 8 * (len as u32 - 1);
        let mask = if top_bits == 8 { 0xff } else { (1u8 << top_bits) - 1 };
        let mut buf = [0u8; 32];
        loop {
            rng.fill_bytes(&mut buf[..len]);
            buf[0] &= mask;
            let v = limbs_from_be(&buf[..len]);
            if self.mont().is_canonical(&v) {
                return self.wrap(self.mont().to_mont(&v));
            }
        }
    }

    /// Uniform element of `F_p \ {0}`.
    pub fn sample_unit<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        loop {
            let x = self.sample(rng);
            if !x.is_zero() {
                return x;
            }
        }
    }

    /// Reduces a 64-byte big-endian integer modulo `p`.
    pub fn reduce_wide(&self, bytes: &[u8]) -> Result<FieldElement, FieldError> {
        if bytes.len() != 64 {
            return Err(FieldError::LengthMismatch {
                expected: 64,
                actual: bytes.len(),
            });
        }
        let hi = limbs_from_be(&bytes[..32]);
        let lo = limbs_from_be(&bytes[32..]);
        Ok(self.wrap(self.mont().reduce_512(&hi, &lo)))
    }

    /// Decodes the fixed-width big-endian encoding, rejecting values `>= p`.
    pub fn from_bytes(&self, bytes: &[u8]) -> Result<FieldElement, FieldError> {
        if bytes.len() != self.byte_len() {
            return Err(FieldError::LengthMismatch {
                expected: self.byte_len(),
                actual: bytes.len(),
            });
        }
        let v = limbs_from_be(bytes);
        if !self.mont().is_canonical(&v) {
            return Err(FieldError::NonCanonical);
        }
        Ok(self.wrap(self.mont().to_mont(&v)))
    }

    pub fn from_hex(&self, s: &str) -> Result<FieldElement, FieldError> {
        let bytes = hex::decode(s.trim()).map_err(|e| FieldError::Hex(e.to_string()))?;
        self.from_bytes(&bytes)
    }

    /// All elements in order `0, 1, ..., p-1`. Meant for exhaustive tests on tiny fields.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let p = self
            .order_u64()
            .expect("exhaustive iteration needs a modulus that fits in u64");
        (0..p).map(move |i| self.from_u64(i))
    }

    /// All nonzero elements.
    pub fn units(&self) -> impl Iterator<Item = FieldElement> + '_ {
        self.elements().skip(1)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.params, other.params)
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.params.prime)
    }
}

/// A canonical residue modulo the field's prime.
#[derive(Clone, Copy)]
pub struct FieldElement {
    v: Limbs,
    field: Field,
}

impl FieldElement {
    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        Montgomery::is_zero(&self.v)
    }

    fn same_field(&self, other: &Self) -> Result<(), FieldError> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(FieldError::ModulusMismatch)
        }
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, FieldError> {
        self.same_field(rhs)?;
        Ok(self.field.wrap(self.field.mont().add(&self.v, &rhs.v)))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, FieldError> {
        self.same_field(rhs)?;
        Ok(self.field.wrap(self.field.mont().sub(&self.v, &rhs.v)))
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self, FieldError> {
        self.same_field(rhs)?;
        ops::record_mul();
        Ok(self.field.wrap(self.field.mont().mul(&self.v, &rhs.v)))
    }

    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        ops::record_inv();
        Ok(self.field.wrap(self.field.mont().invert(&self.v)))
    }

    pub fn square(&self) -> Self {
        *self * *self
    }

    /// Canonical residue limbs, little-endian.
    fn residue(&self) -> Limbs {
        self.field.mont().out_of_mont(&self.v)
    }

    /// Fixed-width big-endian encoding, `ceil(bits(p)/8)` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let full = limbs_to_be(&self.residue());
        full[32 - self.field.byte_len()..].to_vec()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn to_biguint(&self) -> BigUint {
        BigUint::from_bytes_be(&limbs_to_be(&self.residue()))
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.to_biguint().to_u64()
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && Montgomery::ct_eq(&self.v, &other.v)
    }
}

impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.field.prime().hash(state);
        self.v.hash(state);
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_biguint())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_biguint())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident, $assign_trait:ident, $assign:ident) => {
        impl std::ops::$trait for FieldElement {
            type Output = FieldElement;

            #[inline]
            fn $method(self, rhs: FieldElement) -> FieldElement {
                self.$checked(&rhs).expect("field element modulus mismatch")
            }
        }

        impl std::ops::$trait<&FieldElement> for &FieldElement {
            type Output = FieldElement;

            #[inline]
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$checked(rhs).expect("field element modulus mismatch")
            }
        }

        impl std::ops::$assign_trait for FieldElement {
            #[inline]
            fn $assign(&mut self, rhs: FieldElement) {
                *self = self.$checked(&rhs).expect("field element modulus mismatch");
            }
        }
    };
}

binop!(Add, add, checked_add, AddAssign, add_assign);
binop!(Sub, sub, checked_sub, SubAssign, sub_assign);
binop!(Mul, mul, checked_mul, MulAssign, mul_assign);

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        self.field.wrap(self.field.mont().sub(&[0; 4], &self.v))
    }
}
