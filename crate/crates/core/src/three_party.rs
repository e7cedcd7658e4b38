//! Three-party signing with information checking.
//!
//! The signer P1 authenticates `x = H(M, sigma_alg)` to the holder P2 by
//! handing out a point `(x, sigma)` on a secret line `sigma = k1 x + k2`
//! whose coefficients go to the verifier P3. A cut-and-choose style check
//! with a second point `(x', sigma')` and P2's challenge `e` catches a
//! signer who gives P2 and P3 inconsistent lines, except when `e` hits the
//! single root. Later P2 transfers `(x, sigma)` and P3 accepts iff the
//! point is on its line.
//!
//! Each party is a state machine driven one round at a time by
//! [`crate::net_sim`]. The fixed schedule:
//!
//! | round | sender | message |
//! |-------|--------|---------|
//! | 1 | P1 | setup to P2, keys to P3 |
//! | 2 | P2 | challenge (broadcast) |
//! | 3 | P1 | accept, or "P2 corrupt" with `(x, sigma)` |
//! | 4 | P3 | accept / reject |
//! | 5 | P1 | "P3 corrupt" if P3's answer is wrong |
//! | 6 | P1 | resolution reveal |
//! | 7 | P2 | transfer to P3 |
//!
//! Round 8 only delivers the transfer.

use rand::RngCore;
use thiserror::Error;

use crate::field::{Field, FieldElement};
use crate::keyed_hash::{self, PairKey};
use crate::net_sim::{Channel, Envelope, Outgoing, Role};
use crate::sss::Weights;
use crate::two_party::{self, KeyMaterial, Signature};

pub const ROUND_SETUP: u8 = 1;
pub const ROUND_CHALLENGE: u8 = 2;
pub const ROUND_P1_CHECK: u8 = 3;
pub const ROUND_P3_CHECK: u8 = 4;
pub const ROUND_AUDIT: u8 = 5;
pub const ROUND_RESOLVE: u8 = 6;
pub const ROUND_TRANSFER: u8 = 7;
/// Delivery of the transfer; nobody speaks.
pub const ROUND_FINAL: u8 = 8;

/// Rounds in which `role` may emit.
pub fn schedule(role: Role) -> &'static [u8] {
    match role {
        Role::P1 => &[ROUND_SETUP, ROUND_P1_CHECK, ROUND_AUDIT, ROUND_RESOLVE],
        Role::P2 => &[ROUND_CHALLENGE, ROUND_TRANSFER],
        Role::P3 => &[ROUND_P3_CHECK],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("no IC setup received")]
    MissingSetup,
    #[error("phase violation: {0}")]
    PhaseViolation(&'static str),
    #[error("interpretation needs the nonce or the pair key")]
    MissingNonce,
}

/// What P1 deals: `(x, x', sigma, sigma')` for P2, `(k1, k2, k2')` for P3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IcSetup {
    pub x: FieldElement,
    pub x_prime: FieldElement,
    pub sigma: FieldElement,
    pub sigma_prime: FieldElement,
    pub k1: FieldElement,
    pub k2: FieldElement,
    pub k2_prime: FieldElement,
}

impl IcSetup {
    /// Honest dealing: both points lie on lines with slope `k1`.
    pub fn honest(
        x: FieldElement,
        k1: FieldElement,
        k2: FieldElement,
        x_prime: FieldElement,
        k2_prime: FieldElement,
    ) -> Self {
        IcSetup {
            x,
            x_prime,
            sigma: k1 * x + k2,
            sigma_prime: k1 * x_prime + k2_prime,
            k1,
            k2,
            k2_prime,
        }
    }

    pub fn sample<R: RngCore + ?Sized>(x: FieldElement, rng: &mut R) -> Self {
        let f = x.field();
        let (k1, k2, x_prime, k2_prime) = (f.sample(rng), f.sample(rng), f.sample(rng), f.sample(rng));
        IcSetup::honest(x, k1, k2, x_prime, k2_prime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Challenge {
    pub e: FieldElement,
    pub x_e: FieldElement,
    pub sigma_e: FieldElement,
}

/// The signed message that travels with the IC values so P3 can interpret `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPayload {
    pub msg: Vec<u8>,
    pub sig: Signature,
    pub n: FieldElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Declaration {
    Accept,
    Reject,
    P2Corrupt,
    P3Corrupt,
}

impl Declaration {
    fn code(self) -> u8 {
        match self {
            Declaration::Accept => 0,
            Declaration::Reject => 1,
            Declaration::P2Corrupt => 2,
            Declaration::P3Corrupt => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Declaration::Accept => "accept",
            Declaration::Reject => "reject",
            Declaration::P2Corrupt => "P2 corrupt",
            Declaration::P3Corrupt => "P3 corrupt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Setup {
        x: FieldElement,
        x_prime: FieldElement,
        sigma: FieldElement,
        sigma_prime: FieldElement,
        signed: SignedPayload,
    },
    Keys {
        k1: FieldElement,
        k2: FieldElement,
        k2_prime: FieldElement,
    },
    Challenge(Challenge),
    Declaration(Declaration),
    Reveal {
        x: FieldElement,
        sigma: FieldElement,
    },
    RevealKeys {
        k1: FieldElement,
        k2: FieldElement,
    },
    Transfer {
        x: FieldElement,
        sigma: FieldElement,
        signed: SignedPayload,
    },
}

impl Payload {
    /// Tag byte followed by fixed-width field elements; messages are
    /// length-prefixed.
    pub fn encode(&self) -> Vec<u8> {
        fn put(out: &mut Vec<u8>, elems: &[FieldElement]) {
            for e in elems {
                out.extend(e.to_bytes());
            }
        }
        fn put_signed(out: &mut Vec<u8>, s: &SignedPayload) {
            out.extend((s.msg.len() as u64).to_be_bytes());
            out.extend(&s.msg);
            out.extend(s.sig.to_bytes());
            out.extend(s.n.to_bytes());
        }
        let mut out = Vec::new();
        match self {
            Payload::Setup {
                x,
                x_prime,
                sigma,
                sigma_prime,
                signed,
            } => {
                out.push(1);
                put(&mut out, &[*x, *x_prime, *sigma, *sigma_prime]);
                put_signed(&mut out, signed);
            }
            Payload::Keys { k1, k2, k2_prime } => {
                out.push(2);
                put(&mut out, &[*k1, *k2, *k2_prime]);
            }
            Payload::Challenge(c) => {
                out.push(3);
                put(&mut out, &[c.e, c.x_e, c.sigma_e]);
            }
            Payload::Declaration(d) => out.extend([4, d.code()]),
            Payload::Reveal { x, sigma } => {
                out.push(5);
                put(&mut out, &[*x, *sigma]);
            }
            Payload::RevealKeys { k1, k2 } => {
                out.push(6);
                put(&mut out, &[*k1, *k2]);
            }
            Payload::Transfer { x, sigma, signed } => {
                out.push(7);
                put(&mut out, &[*x, *sigma]);
                put_signed(&mut out, signed);
            }
        }
        out
    }
}

/// The terminal branch of the signing phase. Guards are tested in this
/// order; the first match wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    /// P1 rejected the challenge and revealed `(x, sigma)` in round 3.
    P2Corrupt,
    /// P3 and P1 both accepted.
    Agreed,
    /// P3 rejected while P1 accepted; P1 reveals `(x, sigma)`.
    P3Rejected,
    /// P1 accused P3; P1 reveals `(k1, k2)`.
    P3Corrupt,
    /// No guard matched. Needs a silent or malformed P1 declaration, so it
    /// never happens with an honest signer. Everyone keeps their values.
    Fallthrough,
}

/// Broadcasts as seen by one party. Every party absorbs the same broadcasts,
/// so every honest party computes the same resolution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Board {
    pub challenge: Option<Challenge>,
    pub p1_check: Option<Declaration>,
    pub early_reveal: Option<(FieldElement, FieldElement)>,
    pub p3_check: Option<Declaration>,
    pub p1_audit: Option<Declaration>,
    pub reveal: Option<(FieldElement, FieldElement)>,
    pub reveal_keys: Option<(FieldElement, FieldElement)>,
}

impl Board {
    /// Records a broadcast if it has the sender and round the schedule
    /// expects; anything else is ignored. Only the first of each kind counts.
    pub fn absorb(&mut self, env: &Envelope) {
        if env.channel != Channel::Broadcast {
            return;
        }
        fn first<T>(slot: &mut Option<T>, v: T) {
            if slot.is_none() {
                *slot = Some(v);
            }
        }
        match (env.round, env.sender, &env.payload) {
            (ROUND_CHALLENGE, Role::P2, Payload::Challenge(c)) => first(&mut self.challenge, *c),
            (ROUND_P1_CHECK, Role::P1, Payload::Declaration(d)) => first(&mut self.p1_check, *d),
            (ROUND_P1_CHECK, Role::P1, Payload::Reveal { x, sigma }) => first(&mut self.early_reveal, (*x, *sigma)),
            (ROUND_P3_CHECK, Role::P3, Payload::Declaration(d)) => first(&mut self.p3_check, *d),
            (ROUND_AUDIT, Role::P1, Payload::Declaration(d)) => first(&mut self.p1_audit, *d),
            (ROUND_RESOLVE, Role::P1, Payload::Reveal { x, sigma }) => first(&mut self.reveal, (*x, *sigma)),
            (ROUND_RESOLVE, Role::P1, Payload::RevealKeys { k1, k2 }) => first(&mut self.reveal_keys, (*k1, *k2)),
            _ => {}
        }
    }

    /// True once P1 has ended the signing phase in round 3.
    pub fn terminated_early(&self) -> bool {
        self.p1_check == Some(Declaration::P2Corrupt)
    }

    pub fn resolution(&self) -> Resolution {
        if self.terminated_early() {
            return Resolution::P2Corrupt;
        }
        let p1_accepts = self.p1_check == Some(Declaration::Accept);
        match self.p3_check {
            Some(Declaration::Accept) if p1_accepts => Resolution::Agreed,
            Some(Declaration::Reject) if p1_accepts => Resolution::P3Rejected,
            _ if self.p1_audit == Some(Declaration::P3Corrupt) => Resolution::P3Corrupt,
            _ => Resolution::Fallthrough,
        }
    }

    /// The `(x, sigma)` pair P1 made public under `resolution`, if any.
    fn revealed_point(&self, resolution: Resolution) -> Option<(FieldElement, FieldElement)> {
        match resolution {
            Resolution::P2Corrupt => self.early_reveal,
            Resolution::P3Rejected => self.reveal,
            _ => None,
        }
    }

    fn absorb_all(&mut self, inbox: &[Envelope]) {
        for env in inbox {
            self.absorb(env);
        }
    }
}

/// `sigma_e == k1 x_e + k2' + e k2`
pub fn challenge_consistent(ch: &Challenge, k1: FieldElement, k2: FieldElement, k2_prime: FieldElement) -> bool {
    ch.sigma_e == k1 * ch.x_e + k2_prime + ch.e * k2
}

/// P1, the signer.
#[derive(Debug, Clone)]
pub struct Signer {
    keys: Option<KeyMaterial>,
    msg: Vec<u8>,
    pub signed: Option<SignedPayload>,
    pub setup: Option<IcSetup>,
    pub board: Board,
}

impl Signer {
    pub fn new(keys: KeyMaterial, msg: Vec<u8>) -> Self {
        Signer {
            keys: Some(keys),
            msg,
            signed: None,
            setup: None,
            board: Board::default(),
        }
    }

    /// A signer whose signature and IC values are fixed in advance, for
    /// exhaustive enumeration. Round 1 then consumes no randomness.
    pub fn preset(signed: SignedPayload, setup: IcSetup) -> Self {
        Signer {
            keys: None,
            msg: signed.msg.clone(),
            signed: Some(signed),
            setup: Some(setup),
            board: Board::default(),
        }
    }

    pub fn msg(&self) -> &[u8] {
        &self.msg
    }

    /// Signs, derives `x`, deals the IC values.
    pub fn start<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<Outgoing>, ProtocolError> {
        if self.setup.is_none() {
            let keys = self.keys.as_ref().ok_or(ProtocolError::MissingSetup)?;
            let (sig, tape) = two_party::sign(keys, &self.msg, rng);
            let x = keyed_hash::ic_value(&self.msg, &sig.to_bytes(), keys.field());
            self.signed = Some(SignedPayload {
                msg: self.msg.clone(),
                sig,
                n: tape.n,
            });
            self.setup = Some(IcSetup::sample(x, rng));
        }
        let s = self.setup.expect("set above");
        let signed = self.signed.clone().ok_or(ProtocolError::MissingSetup)?;
        Ok(vec![
            Outgoing::private(
                Role::P2,
                Payload::Setup {
                    x: s.x,
                    x_prime: s.x_prime,
                    sigma: s.sigma,
                    sigma_prime: s.sigma_prime,
                    signed,
                },
            ),
            Outgoing::private(
                Role::P3,
                Payload::Keys {
                    k1: s.k1,
                    k2: s.k2,
                    k2_prime: s.k2_prime,
                },
            ),
        ])
    }

    /// Round 3: P2's challenge must be the honest combination of P2's points.
    pub fn check_challenge(&self, ch: Option<&Challenge>) -> Result<Vec<Outgoing>, ProtocolError> {
        let s = self.setup.ok_or(ProtocolError::MissingSetup)?;
        let ok = ch.is_some_and(|c| c.x_e == s.x_prime + c.e * s.x && c.sigma_e == s.sigma_prime + c.e * s.sigma);
        Ok(if ok {
            vec![Outgoing::broadcast(Payload::Declaration(Declaration::Accept))]
        } else {
            vec![
                Outgoing::broadcast(Payload::Declaration(Declaration::P2Corrupt)),
                Outgoing::broadcast(Payload::Reveal { x: s.x, sigma: s.sigma }),
            ]
        })
    }

    /// Round 5: P1 knows all three keys, so it knows what P3 should have said.
    pub fn audit(&self, board: &Board) -> Result<Vec<Outgoing>, ProtocolError> {
        let s = self.setup.ok_or(ProtocolError::MissingSetup)?;
        if board.terminated_early() {
            return Ok(vec![]);
        }
        let expected = board
            .challenge
            .is_some_and(|c| challenge_consistent(&c, s.k1, s.k2, s.k2_prime));
        let consistent = match board.p3_check {
            Some(Declaration::Accept) => expected,
            Some(Declaration::Reject) => !expected,
            _ => false,
        };
        Ok(if consistent {
            vec![]
        } else {
            vec![Outgoing::broadcast(Payload::Declaration(Declaration::P3Corrupt))]
        })
    }

    /// Round 6: the reveal required by the resolution arm.
    pub fn resolve(&self, board: &Board) -> Result<Vec<Outgoing>, ProtocolError> {
        let s = self.setup.ok_or(ProtocolError::MissingSetup)?;
        Ok(match board.resolution() {
            Resolution::P3Rejected => vec![Outgoing::broadcast(Payload::Reveal { x: s.x, sigma: s.sigma })],
            Resolution::P3Corrupt => vec![Outgoing::broadcast(Payload::RevealKeys { k1: s.k1, k2: s.k2 })],
            _ => vec![],
        })
    }

    pub fn step(
        &mut self,
        round: u8,
        inbox: &[Envelope],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Outgoing>, ProtocolError> {
        self.board.absorb_all(inbox);
        match round {
            ROUND_SETUP => self.start(rng),
            ROUND_P1_CHECK => self.check_challenge(self.board.challenge.as_ref()),
            ROUND_AUDIT => self.audit(&self.board),
            ROUND_RESOLVE => self.resolve(&self.board),
            _ => Ok(vec![]),
        }
    }
}

/// P2, the holder.
#[derive(Debug, Clone, Default)]
pub struct Holder {
    preset_e: Option<FieldElement>,
    pub setup: Option<Payload>,
    pub point: Option<(FieldElement, FieldElement)>,
    pub board: Board,
    pub resolution: Option<Resolution>,
    /// `z2`; set when the signing phase resolves.
    pub output: Option<FieldElement>,
}

impl Holder {
    pub fn new() -> Self {
        Holder::default()
    }

    /// A holder that will challenge with `e` instead of sampling.
    pub fn with_challenge(e: FieldElement) -> Self {
        Holder {
            preset_e: Some(e),
            ..Holder::default()
        }
    }

    fn receive(&mut self, env: &Envelope) {
        if env.sender == Role::P1 && env.channel == Channel::Private(Role::P2) {
            if let Payload::Setup { x, sigma, .. } = &env.payload {
                if self.setup.is_none() {
                    self.point = Some((*x, *sigma));
                    self.setup = Some(env.payload.clone());
                }
            }
        }
        self.board.absorb(env);
    }

    pub fn challenge<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Outgoing, ProtocolError> {
        let Some(Payload::Setup {
            x,
            x_prime,
            sigma,
            sigma_prime,
            ..
        }) = &self.setup
        else {
            return Err(ProtocolError::MissingSetup);
        };
        let e = match self.preset_e {
            Some(e) => e,
            None => x.field().sample(rng),
        };
        Ok(Outgoing::broadcast(Payload::Challenge(Challenge {
            e,
            x_e: *x_prime + e * *x,
            sigma_e: *sigma_prime + e * *sigma,
        })))
    }

    /// Applies the resolution arm to the held point and fixes `z2 = x`.
    pub fn conclude(&mut self) -> Result<Resolution, ProtocolError> {
        let (mut x, mut sigma) = self.point.ok_or(ProtocolError::MissingSetup)?;
        let resolution = self.board.resolution();
        if let Some(p) = self.board.revealed_point(resolution) {
            (x, sigma) = p;
        }
        if resolution == Resolution::P3Corrupt {
            if let Some((k1, k2)) = self.board.reveal_keys {
                sigma = k1 * x + k2;
            }
        }
        self.point = Some((x, sigma));
        self.resolution = Some(resolution);
        self.output = Some(x);
        Ok(resolution)
    }

    pub fn transfer(&self) -> Result<Outgoing, ProtocolError> {
        if self.resolution.is_none() {
            return Err(ProtocolError::PhaseViolation(
                "transfer before the signing phase resolved",
            ));
        }
        let (x, sigma) = self.point.ok_or(ProtocolError::MissingSetup)?;
        let Some(Payload::Setup { signed, .. }) = &self.setup else {
            return Err(ProtocolError::MissingSetup);
        };
        Ok(Outgoing::private(
            Role::P3,
            Payload::Transfer {
                x,
                sigma,
                signed: signed.clone(),
            },
        ))
    }

    pub fn step(
        &mut self,
        round: u8,
        inbox: &[Envelope],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Outgoing>, ProtocolError> {
        for env in inbox {
            self.receive(env);
        }
        match round {
            ROUND_CHALLENGE => Ok(vec![self.challenge(rng)?]),
            ROUND_TRANSFER => {
                self.conclude()?;
                Ok(vec![self.transfer()?])
            }
            _ => Ok(vec![]),
        }
    }
}

/// P3, the verifier.
#[derive(Debug, Clone, Default)]
pub struct Verifier {
    /// `(k1, k2, k2')`
    pub keys: Option<(FieldElement, FieldElement, FieldElement)>,
    pub board: Board,
    pub resolution: Option<Resolution>,
    pub transfer: Option<(FieldElement, FieldElement, SignedPayload)>,
    /// `Some(z3)` once the transfer has been checked; `z3 = None` is bottom.
    pub output: Option<Option<FieldElement>>,
}

impl Verifier {
    pub fn new() -> Self {
        Verifier::default()
    }

    fn receive(&mut self, env: &Envelope) {
        if env.sender == Role::P1 && env.channel == Channel::Private(Role::P3) && self.keys.is_none() {
            if let Payload::Keys { k1, k2, k2_prime } = env.payload {
                self.keys = Some((k1, k2, k2_prime));
            }
        }
        if env.sender == Role::P2 && env.channel == Channel::Private(Role::P3) && self.transfer.is_none() {
            if let Payload::Transfer { x, sigma, signed } = &env.payload {
                self.transfer = Some((*x, *sigma, signed.clone()));
            }
        }
        self.board.absorb(env);
    }

    /// Round 4 declaration. A missing challenge is rejected.
    pub fn check_challenge(&self, ch: Option<&Challenge>) -> Result<Outgoing, ProtocolError> {
        let (k1, k2, k2_prime) = self.keys.ok_or(ProtocolError::MissingSetup)?;
        let ok = ch.is_some_and(|c| challenge_consistent(c, k1, k2, k2_prime));
        let d = if ok { Declaration::Accept } else { Declaration::Reject };
        Ok(Outgoing::broadcast(Payload::Declaration(d)))
    }

    /// Applies the resolution arm to the held line.
    pub fn conclude(&mut self) -> Result<Resolution, ProtocolError> {
        let (mut k1, mut k2, k2_prime) = self.keys.ok_or(ProtocolError::MissingSetup)?;
        let resolution = self.board.resolution();
        if let Some((x, sigma)) = self.board.revealed_point(resolution) {
            k2 = sigma - k1 * x;
        }
        if resolution == Resolution::P3Corrupt {
            if let Some(keys) = self.board.reveal_keys {
                (k1, k2) = keys;
            }
        }
        self.keys = Some((k1, k2, k2_prime));
        self.resolution = Some(resolution);
        Ok(resolution)
    }

    /// `z3 = x` iff `sigma = k1 x + k2`.
    pub fn extract_transfer(
        &self,
        x: FieldElement,
        sigma: FieldElement,
    ) -> Result<Option<FieldElement>, ProtocolError> {
        let (k1, k2, _) = self.keys.ok_or(ProtocolError::MissingSetup)?;
        Ok((sigma == k1 * x + k2).then_some(x))
    }

    pub fn step(
        &mut self,
        round: u8,
        inbox: &[Envelope],
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<Outgoing>, ProtocolError> {
        for env in inbox {
            self.receive(env);
        }
        match round {
            ROUND_P3_CHECK if !self.board.terminated_early() => {
                Ok(vec![self.check_challenge(self.board.challenge.as_ref())?])
            }
            ROUND_FINAL => {
                self.conclude()?;
                let z3 = match &self.transfer {
                    Some((x, sigma, _)) => self.extract_transfer(*x, *sigma)?,
                    None => None,
                };
                self.output = Some(z3);
                Ok(vec![])
            }
            _ => Ok(vec![]),
        }
    }
}

/// Whether `x` is the authenticated value of a valid signature on `msg`:
/// `H(M, sigma_alg) = x` and the two-party predicate holds. The receipt is
/// recomputed from `k_sig` when given, otherwise from the nonce `n`.
pub fn interpret_value(
    pk: &Weights,
    k_sig: Option<&PairKey>,
    n: Option<FieldElement>,
    msg: &[u8],
    sig: &Signature,
    x: FieldElement,
) -> Result<bool, ProtocolError> {
    let field: Field = pk.field();
    let r = match (k_sig, n) {
        (Some(k), _) => keyed_hash::derive_receipt(k, msg, field).1,
        (None, Some(n)) => keyed_hash::receipt_from_nonce(msg, &n),
        (None, None) => return Err(ProtocolError::MissingNonce),
    };
    if keyed_hash::ic_value(msg, &sig.to_bytes(), field) != x {
        return Ok(false);
    }
    Ok(two_party::verify_with_receipt(pk, r, sig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::two_party::{keygen, Params};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn env(round: u8, sender: Role, channel: Channel, payload: Payload) -> Envelope {
        Envelope {
            round,
            sender,
            channel,
            payload,
        }
    }

    fn bc(round: u8, sender: Role, payload: Payload) -> Envelope {
        env(round, sender, Channel::Broadcast, payload)
    }

    fn keys(seed: u64) -> (KeyMaterial, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let params = Params::generate(Field::small(251), &mut rng);
        (keygen(&params, &mut rng), rng)
    }

    fn setup_envelope(s: &Signer) -> Envelope {
        let out = s.clone().start(&mut rand::rngs::mock::StepRng::new(0, 0)).unwrap();
        env(ROUND_SETUP, Role::P1, out[0].channel, out[0].payload.clone())
    }

    #[test]
    fn honest_setup_is_on_both_lines() {
        let f = Field::small(13);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for x in f.elements() {
            for _ in 0..50 {
                let s = IcSetup::sample(x, &mut rng);
                assert_eq!(s.sigma, s.k1 * s.x + s.k2);
                assert_eq!(s.sigma_prime, s.k1 * s.x_prime + s.k2_prime);
            }
        }
    }

    #[test]
    fn start_derives_x_from_the_signature() {
        let (k, mut rng) = keys(2);
        let mut p1 = Signer::new(k, b"hello".to_vec());
        let out = p1.start(&mut rng).unwrap();
        assert_eq!(out.len(), 2);
        let signed = p1.signed.clone().unwrap();
        let x = keyed_hash::ic_value(b"hello", &signed.sig.to_bytes(), Field::small(251));
        assert_eq!(p1.setup.unwrap().x, x);
        assert_eq!(out[0].channel, Channel::Private(Role::P2));
        assert_eq!(out[1].channel, Channel::Private(Role::P3));
    }

    #[test]
    fn zero_challenge_reveals_the_check_point() {
        let (k, mut rng) = keys(3);
        let mut p1 = Signer::new(k, b"m".to_vec());
        p1.start(&mut rng).unwrap();
        let f = Field::small(251);
        let mut p2 = Holder::with_challenge(f.zero());
        p2.receive(&setup_envelope(&p1));
        let Payload::Challenge(c) = p2.challenge(&mut rng).unwrap().payload else {
            panic!("expected a challenge");
        };
        let s = p1.setup.unwrap();
        assert_eq!((c.x_e, c.sigma_e), (s.x_prime, s.sigma_prime));
    }

    #[test]
    fn challenge_checks() {
        let (k, mut rng) = keys(4);
        let mut p1 = Signer::new(k, b"m".to_vec());
        p1.start(&mut rng).unwrap();
        let s = p1.setup.unwrap();
        let mut p2 = Holder::new();
        p2.receive(&setup_envelope(&p1));
        let mut p3 = Verifier::new();
        p3.keys = Some((s.k1, s.k2, s.k2_prime));
        for _ in 0..200 {
            let Payload::Challenge(c) = p2.challenge(&mut rng).unwrap().payload else {
                unreachable!()
            };
            let d = p1.check_challenge(Some(&c)).unwrap();
            assert_eq!(d[0].payload, Payload::Declaration(Declaration::Accept));
            assert_eq!(
                p3.check_challenge(Some(&c)).unwrap().payload,
                Payload::Declaration(Declaration::Accept)
            );
            let tampered = Challenge {
                x_e: c.x_e + s.x.field().one(),
                ..c
            };
            let d = p1.check_challenge(Some(&tampered)).unwrap();
            assert_eq!(d[0].payload, Payload::Declaration(Declaration::P2Corrupt));
            assert_eq!(d[1].payload, Payload::Reveal { x: s.x, sigma: s.sigma });
        }
        // P3 holding k2' + 1 never accepts.
        p3.keys = Some((s.k1, s.k2, s.k2_prime + s.x.field().one()));
        for _ in 0..200 {
            let Payload::Challenge(c) = p2.challenge(&mut rng).unwrap().payload else {
                unreachable!()
            };
            assert_eq!(
                p3.check_challenge(Some(&c)).unwrap().payload,
                Payload::Declaration(Declaration::Reject)
            );
        }
    }

    #[test]
    fn resolution_arms_in_order() {
        use Declaration::*;
        let mut b = Board::default();
        assert_eq!(b.resolution(), Resolution::Fallthrough);
        b.p1_check = Some(Accept);
        b.p3_check = Some(Accept);
        assert_eq!(b.resolution(), Resolution::Agreed);
        b.p3_check = Some(Reject);
        assert_eq!(b.resolution(), Resolution::P3Rejected);
        // A reject that P1 also flags still takes the reject arm first.
        b.p1_audit = Some(P3Corrupt);
        assert_eq!(b.resolution(), Resolution::P3Rejected);
        b.p3_check = None;
        assert_eq!(b.resolution(), Resolution::P3Corrupt);
        b.p1_check = Some(P2Corrupt);
        assert_eq!(b.resolution(), Resolution::P2Corrupt);
    }

    #[test]
    fn board_ignores_wrong_sender_or_round() {
        let mut b = Board::default();
        b.absorb(&bc(ROUND_P3_CHECK, Role::P2, Payload::Declaration(Declaration::Accept)));
        b.absorb(&bc(ROUND_AUDIT, Role::P1, Payload::Declaration(Declaration::Accept)));
        b.absorb(&env(
            ROUND_P1_CHECK,
            Role::P1,
            Channel::Private(Role::P3),
            Payload::Declaration(Declaration::P2Corrupt),
        ));
        assert_eq!(b.p3_check, None);
        assert_eq!(b.p1_check, None);
        assert_eq!(b.p1_audit, Some(Declaration::Accept));
    }

    #[test]
    fn key_updates_make_transfer_pass() {
        let f = Field::small(13);
        let (x, sigma) = (f.from_u64(4), f.from_u64(9));
        let mut p3 = Verifier::new();
        p3.keys = Some((f.from_u64(2), f.from_u64(7), f.from_u64(1)));
        assert_eq!(p3.extract_transfer(x, sigma).unwrap(), None);
        p3.board.p1_check = Some(Declaration::P2Corrupt);
        p3.board.early_reveal = Some((x, sigma));
        assert_eq!(p3.conclude().unwrap(), Resolution::P2Corrupt);
        assert_eq!(p3.extract_transfer(x, sigma).unwrap(), Some(x));
        assert_eq!(p3.extract_transfer(x, sigma + f.one()).unwrap(), None);

        // Keys revealed after a P3 accusation: P2 moves its sigma onto the line.
        let mut p2 = Holder::new();
        p2.point = Some((x, sigma));
        p2.board.p1_check = Some(Declaration::Accept);
        p2.board.p1_audit = Some(Declaration::P3Corrupt);
        p2.board.reveal_keys = Some((f.from_u64(3), f.from_u64(5)));
        assert_eq!(p2.conclude().unwrap(), Resolution::P3Corrupt);
        assert_eq!(p2.point.unwrap().1, f.from_u64(3) * x + f.from_u64(5));
    }

    #[test]
    fn transfer_before_resolution_is_a_phase_violation() {
        let (k, mut rng) = keys(5);
        let mut p1 = Signer::new(k, b"m".to_vec());
        p1.start(&mut rng).unwrap();
        let mut p2 = Holder::new();
        p2.receive(&setup_envelope(&p1));
        assert!(matches!(p2.transfer(), Err(ProtocolError::PhaseViolation(_))));
        assert_eq!(Holder::new().challenge(&mut rng), Err(ProtocolError::MissingSetup));
        assert_eq!(Verifier::new().check_challenge(None), Err(ProtocolError::MissingSetup));
    }

    #[test]
    fn interpretation() {
        let (k, mut rng) = keys(6);
        let (sig, tape) = two_party::sign_until_valid(&k, b"doc", &mut rng, 16).unwrap();
        let f = k.field();
        let x = keyed_hash::ic_value(b"doc", &sig.to_bytes(), f);
        assert_eq!(interpret_value(&k.pk, Some(&k.k_sig), None, b"doc", &sig, x), Ok(true));
        assert_eq!(interpret_value(&k.pk, None, Some(tape.n), b"doc", &sig, x), Ok(true));
        assert_eq!(
            interpret_value(&k.pk, None, Some(tape.n), b"doc", &sig, x + f.one()),
            Ok(false)
        );
        assert_eq!(
            interpret_value(&k.pk, None, None, b"doc", &sig, x),
            Err(ProtocolError::MissingNonce)
        );
    }

    #[test]
    fn payload_encodings_are_tagged_and_distinct() {
        let f = Field::small(251);
        let e = |v| f.from_u64(v);
        let sig = Signature::from_components([e(1), e(2), e(3), e(4), e(5)]);
        let signed = SignedPayload {
            msg: b"ab".to_vec(),
            sig,
            n: e(6),
        };
        let all = [
            Payload::Setup {
                x: e(1),
                x_prime: e(2),
                sigma: e(3),
                sigma_prime: e(4),
                signed: signed.clone(),
            },
            Payload::Keys {
                k1: e(1),
                k2: e(2),
                k2_prime: e(3),
            },
            Payload::Challenge(Challenge {
                e: e(1),
                x_e: e(2),
                sigma_e: e(3),
            }),
            Payload::Declaration(Declaration::Reject),
            Payload::Reveal { x: e(1), sigma: e(2) },
            Payload::RevealKeys { k1: e(1), k2: e(2) },
            Payload::Transfer {
                x: e(1),
                sigma: e(2),
                signed,
            },
        ];
        for (i, p) in all.iter().enumerate() {
            assert_eq!(p.encode()[0] as usize, i + 1);
        }
        assert_eq!(all[1].encode(), vec![2, 1, 2, 3]);
        assert_eq!(all[6].encode().len(), 1 + 2 + 8 + 2 + 5 + 1);
    }
}
