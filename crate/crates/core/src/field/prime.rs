use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::FieldError;

/// Small primes used both for trial division and as Miller-Rabin witnesses.
const SMALL_PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// A validated odd prime `3 <= p < 2^256`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Prime {
    value: BigUint,
}

impl Prime {
    pub fn new(value: BigUint) -> Result<Self, FieldError> {
        if value.bits() > 256 {
            return Err(FieldError::PrimeTooLarge);
        }
        if value < BigUint::from(3u8) || !is_probable_prime(&value) {
            return Err(FieldError::NotPrime(value.to_str_radix(10)));
        }
        Ok(Prime { value })
    }

    pub fn from_u64(value: u64) -> Result<Self, FieldError> {
        Self::new(BigUint::from(value))
    }

    /// `2^255 - 19`.
    pub fn secure() -> Self {
        let value = (BigUint::one() << 255u32) - BigUint::from(19u8);
        Prime { value }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn bits(&self) -> u32 {
        self.value.bits() as u32
    }

    /// Width of the fixed big-endian element encoding.
    pub fn byte_len(&self) -> usize {
        (self.bits() as usize).div_ceil(8)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.value.to_u64()
    }
}

impl fmt::Debug for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prime({})", self.value)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl FromStr for Prime {
    type Err = FieldError;

    /// Accepts decimal, or hex with a `0x` prefix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parsed = match s.strip_prefix("0x") {
            Some(hex) => BigUint::parse_bytes(hex.as_bytes(), 16),
            None => BigUint::parse_bytes(s.as_bytes(), 10),
        };
        let value = parsed.ok_or_else(|| FieldError::NotPrime(s.to_string()))?;
        Prime::new(value)
    }
}

fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        if small < (1u64 << 32) {
            return trial_division(small);
        }
    }
    for &sp in SMALL_PRIMES.iter() {
        if (n % sp).is_zero() {
            return false;
        }
    }
    miller_rabin(n)
}

fn trial_division(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Miller-Rabin with the 40 smallest primes as witnesses.
fn miller_rabin(n: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for &a in SMALL_PRIMES.iter() {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_presets() {
        for p in [3u64, 5, 13, 251, 1009, 65537, 4294967311] {
            assert!(Prime::from_u64(p).is_ok(), "{p}");
        }
        assert_eq!(Prime::secure().bits(), 255);
        assert!(Prime::new(Prime::secure().value().clone()).is_ok());
    }

    #[test]
    fn rejects_composites_and_small() {
        for n in [0u64, 1, 2, 4, 9, 15, 561, 65535, 4294967297] {
            assert!(Prime::from_u64(n).is_err(), "{n}");
        }
        // 2^255 - 21 is composite.
        let big = (BigUint::one() << 255u32) - BigUint::from(21u8);
        assert!(Prime::new(big).is_err());
        assert_eq!(Prime::new(BigUint::one() << 300u32), Err(FieldError::PrimeTooLarge));
    }

    #[test]
    fn byte_widths() {
        assert_eq!(Prime::from_u64(13).unwrap().byte_len(), 1);
        assert_eq!(Prime::from_u64(251).unwrap().byte_len(), 1);
        assert_eq!(Prime::from_u64(1009).unwrap().byte_len(), 2);
        assert_eq!(Prime::from_u64(65537).unwrap().byte_len(), 3);
        assert_eq!(Prime::secure().byte_len(), 32);
    }

    #[test]
    fn parses_decimal_and_hex() {
        assert_eq!("251".parse::<Prime>().unwrap().to_u64(), Some(251));
        assert_eq!("0xfb".parse::<Prime>().unwrap().to_u64(), Some(251));
        assert!("250".parse::<Prime>().is_err());
    }
}
