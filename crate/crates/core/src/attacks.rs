//! Named adversary strategies for the three-party protocol.
//!
//! Each strategy corrupts one role and has a known success probability,
//! which the statistics harness checks against.

use thiserror::Error;

use crate::field::FieldElement;
use crate::net_sim::{Adversary, CorruptCtx, NoAdversary, Outgoing, PartyMut, Role};
use crate::three_party::{Declaration, Payload, ROUND_CHALLENGE, ROUND_P3_CHECK, ROUND_SETUP, ROUND_TRANSFER};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("strategy {name:?} corrupts {actual:?}, this experiment needs {expected}")]
    RoleMismatch {
        name: String,
        expected: Role,
        actual: Option<Role>,
    },
}

pub struct StrategyInfo {
    pub name: &'static str,
    pub corrupted: Option<Role>,
    pub summary: &'static str,
}

pub const STRATEGIES: &[StrategyInfo] = &[
    StrategyInfo {
        name: "none",
        corrupted: None,
        summary: "all parties honest",
    },
    StrategyInfo {
        name: "substitute-guess-k1",
        corrupted: Some(Role::P2),
        summary: "P2 transfers x* != x with sigma + g (x* - x) for a guessed slope g; wins w.p. 1/p",
    },
    StrategyInfo {
        name: "inconsistent-line",
        corrupted: Some(Role::P1),
        summary: "P1 gives P2 a point off P3's line; z2 != z3 w.p. 1/p (the challenge hits the root)",
    },
    StrategyInfo {
        name: "tamper-challenge",
        corrupted: Some(Role::P2),
        summary: "P2 broadcasts x_e + 1; P1 reveals (x, sigma) and the session still ends with z3 = x",
    },
    StrategyInfo {
        name: "false-reject",
        corrupted: Some(Role::P3),
        summary: "P3 rejects an honest challenge; P1 reveals (x, sigma) and P3's key is repaired",
    },
    StrategyInfo {
        name: "silent-verifier",
        corrupted: Some(Role::P3),
        summary: "P3 sends no declaration; P1 accuses P3 and reveals (k1, k2)",
    },
];

/// Builds a strategy with all its choices drawn from the adversary's tape.
pub fn by_name(name: &str) -> Result<Box<dyn Adversary>, AttackError> {
    Ok(match name {
        "none" => Box::new(NoAdversary),
        "substitute-guess-k1" => Box::new(SubstituteGuessK1::default()),
        "inconsistent-line" => Box::new(InconsistentLine::default()),
        "tamper-challenge" => Box::new(TamperChallenge),
        "false-reject" => Box::new(FalseReject),
        "silent-verifier" => Box::new(SilentVerifier),
        other => return Err(AttackError::UnknownStrategy(other.to_string())),
    })
}

/// Like [`by_name`], but insists the strategy corrupts `expected`.
pub fn by_name_for(name: &str, expected: Role) -> Result<Box<dyn Adversary>, AttackError> {
    let adv = by_name(name)?;
    if adv.corrupted() != Some(expected) {
        return Err(AttackError::RoleMismatch {
            name: name.to_string(),
            expected,
            actual: adv.corrupted(),
        });
    }
    Ok(adv)
}

/// Corrupt P2 moves the transferred value by `shift` and guesses `k1`
/// to keep the point on P3's line. `None` fields are sampled.
#[derive(Debug, Clone, Copy, Default)]
pub struct SubstituteGuessK1 {
    pub guess: Option<FieldElement>,
    pub shift: Option<FieldElement>,
}

impl Adversary for SubstituteGuessK1 {
    fn corrupted(&self) -> Option<Role> {
        Some(Role::P2)
    }

    fn rewrite(&mut self, ctx: CorruptCtx<'_>, honest: Vec<Outgoing>) -> Vec<Outgoing> {
        if ctx.round != ROUND_TRANSFER {
            return honest;
        }
        honest
            .into_iter()
            .map(|mut out| {
                if let Payload::Transfer { x, sigma, .. } = &mut out.payload {
                    let f = x.field();
                    let shift = self.shift.unwrap_or_else(|| f.sample_unit(ctx.rng));
                    let guess = self.guess.unwrap_or_else(|| f.sample(ctx.rng));
                    *x += shift;
                    *sigma += guess * shift;
                }
                out
            })
            .collect()
    }
}

/// Corrupt P1 shifts P2's points by `(delta, delta_prime)` while giving P3
/// the honest keys, then plays on honestly from the shifted values. P3's
/// check passes only if `delta_prime + e delta = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct InconsistentLine {
    pub delta: Option<FieldElement>,
    pub delta_prime: Option<FieldElement>,
}

impl Adversary for InconsistentLine {
    fn corrupted(&self) -> Option<Role> {
        Some(Role::P1)
    }

    fn rewrite(&mut self, ctx: CorruptCtx<'_>, honest: Vec<Outgoing>) -> Vec<Outgoing> {
        if ctx.round != ROUND_SETUP {
            return honest;
        }
        let PartyMut::P1(signer) = ctx.state else {
            return honest;
        };
        let Some(setup) = signer.setup.as_mut() else {
            return honest;
        };
        let f = setup.x.field();
        let delta = self.delta.unwrap_or_else(|| f.sample_unit(ctx.rng));
        let delta_prime = self.delta_prime.unwrap_or_else(|| f.sample(ctx.rng));
        setup.sigma += delta;
        setup.sigma_prime += delta_prime;
        let (sigma, sigma_prime) = (setup.sigma, setup.sigma_prime);
        honest
            .into_iter()
            .map(|mut out| {
                if let Payload::Setup {
                    sigma: s,
                    sigma_prime: sp,
                    ..
                } = &mut out.payload
                {
                    *s = sigma;
                    *sp = sigma_prime;
                }
                out
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TamperChallenge;

impl Adversary for TamperChallenge {
    fn corrupted(&self) -> Option<Role> {
        Some(Role::P2)
    }

    fn rewrite(&mut self, ctx: CorruptCtx<'_>, mut honest: Vec<Outgoing>) -> Vec<Outgoing> {
        if ctx.round == ROUND_CHALLENGE {
            for out in &mut honest {
                if let Payload::Challenge(c) = &mut out.payload {
                    c.x_e += c.x_e.field().one();
                }
            }
        }
        honest
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FalseReject;

impl Adversary for FalseReject {
    fn corrupted(&self) -> Option<Role> {
        Some(Role::P3)
    }

    fn rewrite(&mut self, ctx: CorruptCtx<'_>, honest: Vec<Outgoing>) -> Vec<Outgoing> {
        if ctx.round == ROUND_P3_CHECK {
            vec![Outgoing::broadcast(Payload::Declaration(Declaration::Reject))]
        } else {
            honest
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SilentVerifier;

impl Adversary for SilentVerifier {
    fn corrupted(&self) -> Option<Role> {
        Some(Role::P3)
    }

    fn rewrite(&mut self, ctx: CorruptCtx<'_>, honest: Vec<Outgoing>) -> Vec<Outgoing> {
        if ctx.round == ROUND_P3_CHECK {
            vec![]
        } else {
            honest
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::net_sim::{run_session, Parties, Scheduling};
    use crate::three_party::{Holder, Resolution, Signer, Verifier};
    use crate::two_party::{keygen, Params};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn parties() -> Parties {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let keys = keygen(&Params::generate(Field::small(251), &mut rng), &mut rng);
        Parties::new(Signer::new(keys, b"m".to_vec()), Holder::new(), Verifier::new())
    }

    #[test]
    fn registry() {
        for info in STRATEGIES {
            assert_eq!(by_name(info.name).unwrap().corrupted(), info.corrupted);
        }
        assert_eq!(
            by_name("guess").err(),
            Some(AttackError::UnknownStrategy("guess".into()))
        );
        assert!(matches!(
            by_name_for("inconsistent-line", Role::P2),
            Err(AttackError::RoleMismatch { .. })
        ));
        assert!(by_name_for("substitute-guess-k1", Role::P2).is_ok());
    }

    #[test]
    fn recovery_strategies_still_transfer_x() {
        let cases = [
            ("tamper-challenge", Resolution::P2Corrupt),
            ("false-reject", Resolution::P3Rejected),
            ("silent-verifier", Resolution::P3Corrupt),
        ];
        for (name, arm) in cases {
            for sched in [Scheduling::Rushing, Scheduling::Lockstep] {
                for i in 0..50u8 {
                    let mut adv = by_name(name).unwrap();
                    let s = run_session(parties(), adv.as_mut(), &[i; 32], sched).unwrap();
                    let o = &s.outcome;
                    assert_eq!(o.resolution, Some(arm), "{name}");
                    assert_eq!(o.z2, Some(o.x));
                    assert_eq!(o.z3, Some(o.x), "{name}");
                }
            }
        }
    }

    #[test]
    fn correct_key_guess_forges() {
        let mut p = parties();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        p.p1.start(&mut rng).unwrap();
        let k1 = p.p1.setup.unwrap().k1;
        let f = k1.field();
        let mut adv = SubstituteGuessK1 {
            guess: Some(k1),
            shift: Some(f.from_u64(7)),
        };
        let s = run_session(p.clone(), &mut adv, &[0; 32], Scheduling::Rushing).unwrap();
        assert_eq!(s.outcome.z3, Some(s.outcome.x + f.from_u64(7)));
        let mut adv = SubstituteGuessK1 {
            guess: Some(k1 + f.one()),
            shift: Some(f.from_u64(7)),
        };
        let s = run_session(p, &mut adv, &[0; 32], Scheduling::Rushing).unwrap();
        assert_eq!(s.outcome.z3, None);
    }

    #[test]
    fn inconsistent_line_wins_only_at_the_root() {
        let mut p = parties();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        p.p1.start(&mut rng).unwrap();
        let f = Field::small(251);
        let (delta, delta_prime) = (f.from_u64(3), f.from_u64(12));
        // e = -delta'/delta = -4
        let root = -f.from_u64(4);
        for e in [root, f.zero(), f.one()] {
            let mut q = p.clone();
            q.p2 = Holder::with_challenge(e);
            let mut adv = InconsistentLine {
                delta: Some(delta),
                delta_prime: Some(delta_prime),
            };
            let o = run_session(q, &mut adv, &[0; 32], Scheduling::Rushing).unwrap().outcome;
            assert_eq!(o.z2, Some(o.x));
            if e == root {
                assert_eq!(o.resolution, Some(Resolution::Agreed));
                assert_eq!(o.z3, None);
            } else {
                assert_eq!(o.resolution, Some(Resolution::P3Rejected));
                assert_eq!(o.z3, Some(o.x));
            }
        }
    }
}
