//! 2-out-of-2 Shamir sharing with fixed public evaluation points.
//!
//! A secret `s` is hidden as the constant term of `f(x) = s + a*x` and the
//! shares are `f(w0)`, `f(w1)`. Reconstruction evaluates the Lagrange form
//! at zero: `s = (w0*s1 - w1*s0) / (w0 - w1)`.

use rand::RngCore;
use thiserror::Error;

use crate::field::{Field, FieldElement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SssError {
    #[error("interpolation weights must be distinct")]
    DegenerateWeights,
    #[error("interpolation weights must be nonzero")]
    ZeroWeight,
    #[error("weights and shares belong to different fields")]
    ModulusMismatch,
}

/// Public interpolation points `(w0, w1)` and their Lagrange coefficients at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Weights {
    w0: FieldElement,
    w1: FieldElement,
    lambda0: FieldElement,
    lambda1: FieldElement,
}

impl Weights {
    pub fn new(w0: FieldElement, w1: FieldElement) -> Result<Self, SssError> {
        if w0.field() != w1.field() {
            return Err(SssError::ModulusMismatch);
        }
        if w0.is_zero() || w1.is_zero() {
            return Err(SssError::ZeroWeight);
        }
        if w0 == w1 {
            return Err(SssError::DegenerateWeights);
        }
        let denom = (w0 - w1).inv().map_err(|_| SssError::DegenerateWeights)?;
        Ok(Weights {
            w0,
            w1,
            lambda0: -(w1 * denom),
            lambda1: w0 * denom,
        })
    }

    /// Distinct uniform weights from `F_p*`.
    pub fn sample<R: RngCore + ?Sized>(field: Field, rng: &mut R) -> Self {
        loop {
            let w0 = field.sample_unit(rng);
            let w1 = field.sample_unit(rng);
            if let Ok(w) = Weights::new(w0, w1) {
                return w;
            }
        }
    }

    pub fn w0(&self) -> FieldElement {
        self.w0
    }

    pub fn w1(&self) -> FieldElement {
        self.w1
    }

    /// `(lambda0, lambda1)` with `s = lambda0*s0 + lambda1*s1`.
    pub fn lagrange(&self) -> (FieldElement, FieldElement) {
        (self.lambda0, self.lambda1)
    }

    pub fn field(&self) -> Field {
        self.w0.field()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.w0.to_bytes();
        out.extend(self.w1.to_bytes());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharePair {
    pub s0: FieldElement,
    pub s1: FieldElement,
}

impl SharePair {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.s0.to_bytes();
        out.extend(self.s1.to_bytes());
        out
    }

    /// `alpha * self + other`, share-wise. Reconstruction is linear in the pair.
    pub fn combine(&self, alpha: FieldElement, other: &SharePair) -> SharePair {
        SharePair {
            s0: alpha * self.s0 + other.s0,
            s1: alpha * self.s1 + other.s1,
        }
    }
}

/// Shares `secret` with the given slope `a`.
pub fn share_with_slope(secret: FieldElement, slope: FieldElement, weights: &Weights) -> SharePair {
    SharePair {
        s0: secret + slope * weights.w0,
        s1: secret + slope * weights.w1,
    }
}

/// Shares `secret` with a uniform slope, returning the pair and the slope.
pub fn share<R: RngCore + ?Sized>(secret: FieldElement, weights: &Weights, rng: &mut R) -> (SharePair, FieldElement) {
    let slope = secret.field().sample(rng);
    (share_with_slope(secret, slope, weights), slope)
}

/// Evaluates at zero the line through `(w0, s0)` and `(w1, s1)`.
pub fn reconstruct(pair: &SharePair, weights: &Weights) -> FieldElement {
    weights.lambda0 * pair.s0 + weights.lambda1 * pair.s1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::mock::StepRng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn w(f: Field, a: u64, b: u64) -> Weights {
        Weights::new(f.from_u64(a), f.from_u64(b)).unwrap()
    }

    #[test]
    fn worked_example_at_13() {
        let f = Field::small(13);
        let weights = w(f, 1, 2);
        let pair = share_with_slope(f.from_u64(5), f.from_u64(3), &weights);
        assert_eq!(pair.s0, f.from_u64(8));
        assert_eq!(pair.s1, f.from_u64(11));
        assert_eq!(reconstruct(&pair, &weights), f.from_u64(5));
        let zero = SharePair {
            s0: f.zero(),
            s1: f.zero(),
        };
        assert!(reconstruct(&zero, &weights).is_zero());
    }

    #[test]
    fn zero_slope_gives_constant_shares() {
        let f = Field::small(251);
        let weights = w(f, 3, 7);
        // An all-zero byte stream makes the rejection sampler return zero.
        let mut rng = StepRng::new(0, 0);
        let secret = f.from_u64(99);
        let (pair, slope) = share(secret, &weights, &mut rng);
        assert!(slope.is_zero());
        assert_eq!(pair, SharePair { s0: secret, s1: secret });
    }

    #[test]
    fn weight_validation() {
        let f = Field::small(13);
        assert_eq!(
            Weights::new(f.from_u64(4), f.from_u64(4)),
            Err(SssError::DegenerateWeights)
        );
        assert_eq!(Weights::new(f.zero(), f.one()), Err(SssError::ZeroWeight));
        assert_eq!(
            Weights::new(f.one(), Field::small(5).from_u64(2)),
            Err(SssError::ModulusMismatch)
        );
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let ws = Weights::sample(f, &mut rng);
            assert!(!ws.w0().is_zero() && !ws.w1().is_zero() && ws.w0() != ws.w1());
        }
    }

    #[test]
    fn round_trip_exhaustive_at_13() {
        let f = Field::small(13);
        for w0 in f.units() {
            for w1 in f.units().filter(|&x| x != w0) {
                let weights = Weights::new(w0, w1).unwrap();
                for s in f.elements() {
                    for a in f.elements() {
                        let pair = share_with_slope(s, a, &weights);
                        assert_eq!(reconstruct(&pair, &weights), s);
                    }
                }
            }
        }
    }

    #[test]
    fn perfect_secrecy_exhaustive_at_5() {
        let f = Field::small(5);
        for w0 in f.units() {
            for w1 in f.units().filter(|&x| x != w0) {
                let weights = Weights::new(w0, w1).unwrap();
                for s in f.elements() {
                    let mut c0 = [0u32; 5];
                    let mut c1 = [0u32; 5];
                    for a in f.elements() {
                        let pair = share_with_slope(s, a, &weights);
                        c0[pair.s0.to_u64().unwrap() as usize] += 1;
                        c1[pair.s1.to_u64().unwrap() as usize] += 1;
                    }
                    assert_eq!(c0, [1; 5]);
                    assert_eq!(c1, [1; 5]);
                }
            }
        }
    }

    #[test]
    fn linearity_randomized_at_13() {
        let f = Field::small(13);
        let weights = w(f, 2, 9);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let pa = SharePair {
                s0: f.sample(&mut rng),
                s1: f.sample(&mut rng),
            };
            let pb = SharePair {
                s0: f.sample(&mut rng),
                s1: f.sample(&mut rng),
            };
            let alpha = f.sample(&mut rng);
            assert_eq!(
                reconstruct(&pa.combine(alpha, &pb), &weights),
                alpha * reconstruct(&pa, &weights) + reconstruct(&pb, &weights)
            );
        }
    }

    #[test]
    fn zero_iff_cross_products_match() {
        // reconstruct(V0, V1) = 0  <=>  V0*w1 = V1*w0
        let f = Field::small(13);
        let weights = w(f, 5, 11);
        for v0 in f.elements() {
            for v1 in f.elements() {
                let pair = SharePair { s0: v0, s1: v1 };
                assert_eq!(
                    reconstruct(&pair, &weights).is_zero(),
                    v0 * weights.w1() == v1 * weights.w0()
                );
            }
        }
    }
}
