//! Synchronous network for the three-party protocol.
//!
//! Channels are ideal: private envelopes reach only their recipient, and
//! broadcasts reach all three parties, sender included, as the same value.
//! The scheduler stamps `round` and `sender` itself, so no party or
//! adversary can spoof a sender or hand different recipients different
//! copies of a broadcast.
//!
//! At most one party is corrupted. In every round the scheduler still runs
//! that party's honest code, then passes the result to the adversary, which
//! may keep, change, drop or add envelopes. Under [`Scheduling::Rushing`]
//! the adversary also sees the honest envelopes addressed to it in the
//! current round before it answers.

use std::fmt;

use hmac::{Hmac, Mac};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::Sha512;
use thiserror::Error;

use crate::field::FieldElement;
use crate::three_party::{
    self, Declaration, Holder, Payload, ProtocolError, Resolution, SignedPayload, Signer, Verifier, ROUND_FINAL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    P1,
    P2,
    P3,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::P1, Role::P2, Role::P3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Role::P1 => "P1",
            Role::P2 => "P2",
            Role::P3 => "P3",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Private(Role),
    Broadcast,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Private(r) => write!(f, "private:{r}"),
            Channel::Broadcast => f.write_str("broadcast"),
        }
    }
}

/// A message as handed to the scheduler. Carries no sender or round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outgoing {
    pub channel: Channel,
    pub payload: Payload,
}

impl Outgoing {
    pub fn private(to: Role, payload: Payload) -> Self {
        Outgoing {
            channel: Channel::Private(to),
            payload,
        }
    }

    pub fn broadcast(payload: Payload) -> Self {
        Outgoing {
            channel: Channel::Broadcast,
            payload,
        }
    }
}

/// A message as delivered, stamped by the scheduler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub round: u8,
    pub sender: Role,
    pub channel: Channel,
    pub payload: Payload,
}

impl Envelope {
    pub fn addressed_to(&self, role: Role) -> bool {
        match self.channel {
            Channel::Broadcast => true,
            Channel::Private(r) => r == role,
        }
    }

    /// `round sender channel hex-payload`
    pub fn log_line(&self) -> String {
        format!(
            "{} {} {} {}",
            self.round,
            self.sender,
            self.channel,
            hex::encode(self.payload.encode())
        )
    }
}

/// One line per envelope, in transcript order.
pub fn transcript_log(transcript: &[Envelope]) -> String {
    let mut out = String::new();
    for env in transcript {
        out.push_str(&env.log_line());
        out.push('\n');
    }
    out
}

/// A party's inputs, random tape and received messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyView {
    pub role: Role,
    pub input: Vec<u8>,
    pub tape_seed: [u8; 32],
    pub received: Vec<Envelope>,
}

#[derive(Debug, Clone)]
pub struct Parties {
    pub p1: Signer,
    pub p2: Holder,
    pub p3: Verifier,
}

impl Parties {
    pub fn new(p1: Signer, p2: Holder, p3: Verifier) -> Self {
        Parties { p1, p2, p3 }
    }

    fn step(
        &mut self,
        role: Role,
        round: u8,
        inbox: &[Envelope],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Outgoing>, ProtocolError> {
        match role {
            Role::P1 => self.p1.step(round, inbox, rng),
            Role::P2 => self.p2.step(round, inbox, rng),
            Role::P3 => self.p3.step(round, inbox, rng),
        }
    }

    fn state_mut(&mut self, role: Role) -> PartyMut<'_> {
        match role {
            Role::P1 => PartyMut::P1(&mut self.p1),
            Role::P2 => PartyMut::P2(&mut self.p2),
            Role::P3 => PartyMut::P3(&mut self.p3),
        }
    }
}

/// Mutable access to the corrupted party's state.
pub enum PartyMut<'a> {
    P1(&'a mut Signer),
    P2(&'a mut Holder),
    P3(&'a mut Verifier),
}

/// Everything the adversary may look at in one round: the corrupted
/// party's state and view, never an honest party's.
pub struct CorruptCtx<'a> {
    pub round: u8,
    pub state: PartyMut<'a>,
    pub view: &'a PartyView,
    /// Honest envelopes of this round addressed to the corrupted party.
    /// Empty under lockstep scheduling.
    pub rushed: &'a [Envelope],
    pub rng: &'a mut ChaCha20Rng,
}

pub trait Adversary {
    fn corrupted(&self) -> Option<Role>;

    /// Replaces the corrupted party's honest output for this round.
    fn rewrite(&mut self, ctx: CorruptCtx<'_>, honest: Vec<Outgoing>) -> Vec<Outgoing>;
}

/// No corruption.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAdversary;

impl Adversary for NoAdversary {
    fn corrupted(&self) -> Option<Role> {
        None
    }

    fn rewrite(&mut self, _: CorruptCtx<'_>, honest: Vec<Outgoing>) -> Vec<Outgoing> {
        honest
    }
}

/// Corrupts `role` but forwards its honest output unchanged.
#[derive(Debug, Clone, Copy)]
pub struct Passive(pub Role);

impl Adversary for Passive {
    fn corrupted(&self) -> Option<Role> {
        Some(self.0)
    }

    fn rewrite(&mut self, _: CorruptCtx<'_>, honest: Vec<Outgoing>) -> Vec<Outgoing> {
        honest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheduling {
    /// The corrupted party speaks last in each round and sees that
    /// round's honest envelopes first.
    #[default]
    Rushing,
    Lockstep,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{role} emitted in round {round}, which is not one of its rounds")]
    ScheduleViolation { role: Role, round: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionOutcome {
    /// The value P1 set out to authenticate.
    pub x: FieldElement,
    pub z2: Option<FieldElement>,
    /// `None` is bottom.
    pub z3: Option<FieldElement>,
    pub verdicts: Vec<(Role, Declaration)>,
    pub resolution: Option<Resolution>,
    /// The signed message P3 received with the transfer.
    pub delivered: Option<SignedPayload>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub outcome: SessionOutcome,
    pub transcript: Vec<Envelope>,
    /// Indexed by [`Role::index`].
    pub views: [PartyView; 3],
    pub parties: Parties,
}

type HmacSha512 = Hmac<Sha512>;

/// Expands the session seed into an independent 32-byte seed per label.
pub fn derive_seed(seed: &[u8; 32], label: &str) -> [u8; 32] {
    let mut mac = HmacSha512::new_from_slice(seed).expect("HMAC accepts any key length");
    mac.update(b"tape/");
    mac.update(label.as_bytes());
    let digest = mac.finalize().into_bytes();
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest[..32]);
    out
}

/// Runs one session to completion.
///
/// Each party draws from its own tape, derived from `seed` and its role, so
/// whatever the adversary does cannot shift honest randomness.
pub fn run_session(
    mut parties: Parties,
    adversary: &mut dyn Adversary,
    seed: &[u8; 32],
    scheduling: Scheduling,
) -> Result<Session, SimError> {
    let corrupted = adversary.corrupted();
    let tape_seeds = Role::ALL.map(|r| derive_seed(seed, r.label()));
    let mut tapes = tape_seeds.map(ChaCha20Rng::from_seed);
    let mut adv_rng = ChaCha20Rng::from_seed(derive_seed(seed, "adversary"));
    let mut views = Role::ALL.map(|role| PartyView {
        role,
        input: if role == Role::P1 {
            parties.p1.msg().to_vec()
        } else {
            Vec::new()
        },
        tape_seed: tape_seeds[role.index()],
        received: Vec::new(),
    });

    let mut transcript: Vec<Envelope> = Vec::new();
    let mut in_flight: Vec<Envelope> = Vec::new();

    for round in 1..=ROUND_FINAL {
        let inboxes = Role::ALL.map(|r| {
            in_flight
                .iter()
                .filter(|e| e.addressed_to(r))
                .cloned()
                .collect::<Vec<_>>()
        });
        for r in Role::ALL {
            views[r.index()].received.extend(inboxes[r.index()].iter().cloned());
        }

        let mut sent: Vec<Envelope> = Vec::new();
        let stamp = |role: Role, outs: Vec<Outgoing>, sent: &mut Vec<Envelope>| -> Result<(), SimError> {
            if !outs.is_empty() && !three_party::schedule(role).contains(&round) {
                return Err(SimError::ScheduleViolation { role, round });
            }
            sent.extend(outs.into_iter().map(|o| Envelope {
                round,
                sender: role,
                channel: o.channel,
                payload: o.payload,
            }));
            Ok(())
        };

        for role in Role::ALL.into_iter().filter(|&r| Some(r) != corrupted) {
            let outs = parties.step(role, round, &inboxes[role.index()], &mut tapes[role.index()])?;
            stamp(role, outs, &mut sent)?;
        }

        if let Some(role) = corrupted {
            // The corrupted party's own code may fail on inputs the adversary
            // broke; the adversary then starts from nothing.
            let honest = parties
                .step(role, round, &inboxes[role.index()], &mut tapes[role.index()])
                .unwrap_or_default();
            let rushed: Vec<Envelope> = match scheduling {
                Scheduling::Rushing => sent.iter().filter(|e| e.addressed_to(role)).cloned().collect(),
                Scheduling::Lockstep => Vec::new(),
            };
            let ctx = CorruptCtx {
                round,
                state: parties.state_mut(role),
                view: &views[role.index()],
                rushed: &rushed,
                rng: &mut adv_rng,
            };
            let outs = adversary.rewrite(ctx, honest);
            stamp(role, outs, &mut sent)?;
        }

        sent.sort_by_key(|e| e.sender);
        transcript.extend(sent.iter().cloned());
        in_flight = sent;
    }

    let x = parties.p1.setup.ok_or(ProtocolError::MissingSetup)?.x;
    let verdicts = transcript
        .iter()
        .filter_map(|e| match (e.channel, &e.payload) {
            (Channel::Broadcast, Payload::Declaration(d)) => Some((e.sender, *d)),
            _ => None,
        })
        .collect();
    let resolution = if corrupted == Some(Role::P3) {
        parties.p2.resolution
    } else {
        parties.p3.resolution
    };
    let outcome = SessionOutcome {
        x,
        z2: parties.p2.output,
        z3: parties.p3.output.flatten(),
        verdicts,
        resolution,
        delivered: parties.p3.transfer.as_ref().map(|t| t.2.clone()),
    };
    Ok(Session {
        outcome,
        transcript,
        views,
        parties,
    })
}

/// Every broadcast in the transcript appears exactly once, unchanged, in
/// each of the three views, and no view holds a broadcast the transcript
/// lacks.
pub fn broadcast_consistency_check(transcript: &[Envelope], views: &[PartyView]) -> bool {
    let broadcasts: Vec<&Envelope> = transcript.iter().filter(|e| e.channel == Channel::Broadcast).collect();
    views.len() == 3
        && views.iter().all(|v| {
            let seen: Vec<&Envelope> = v.received.iter().filter(|e| e.channel == Channel::Broadcast).collect();
            seen == broadcasts
        })
}
