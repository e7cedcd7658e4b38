//! Monte-Carlo estimates and exhaustive counts for the error bounds.
//!
//! Every experiment is reproducible from its [`Config`]: trial `i` runs on a
//! seed derived from the root seed and `i`, and keys come from a separate
//! derived seed. Monte-Carlo rows carry a Wilson 95% interval and a `3 sigma`
//! slack `3 sqrt(target / trials)`; exhaustive rows compare exact rationals.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use crate::attacks::{self, AttackError, InconsistentLine, SubstituteGuessK1};
use crate::field::{Field, FieldElement};
use crate::keyed_hash;
use crate::net_sim::{derive_seed, run_session, Adversary, NoAdversary, Parties, Role, Scheduling, SimError};
use crate::sss::Weights;
use crate::three_party::{self, Holder, IcSetup, SignedPayload, Signer, Verifier, ROUND_RESOLVE};
use crate::two_party::{self, keygen, KeyMaterial, Params, Signature, SimulatorChoice};

pub type Rational = Ratio<BigUint>;

/// Largest prime for the five-variable session enumerations.
pub const EXHAUSTIVE_MAX_P: u64 = 7;
/// Largest prime for the six-variable core-forgery count.
pub const CORE_EXHAUSTIVE_MAX_P: u64 = 13;
/// Largest prime for the honest-vs-simulated transcript comparison.
pub const DV_TV_MAX_P: u64 = 5;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("experiment has zero trials")]
    EmptyExperiment,
    #[error("p = {p} is above the exhaustive limit {max}")]
    PrimeTooLarge { p: String, max: u64 },
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

fn ratio_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::INFINITY) / r.denom().to_f64().unwrap_or(f64::INFINITY)
}

fn ratio(n: u64, d: u64) -> Rational {
    Ratio::new(BigUint::from(n), BigUint::from(d))
}

/// `1 / p`
pub fn inverse_p(field: Field) -> Rational {
    Ratio::new(BigUint::from(1u8), field.prime().value().clone())
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// A Monte-Carlo rate compared against an upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub name: String,
    pub p: String,
    pub trials: u64,
    pub successes: u64,
    pub point: Rational,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub target: Rational,
    pub slack: f64,
    pub verdict: Verdict,
}

impl Estimate {
    /// Passes iff `wilson_low <= target + slack`.
    pub fn new(name: &str, field: Field, successes: u64, trials: u64, target: Rational) -> Result<Self, StatsError> {
        if trials == 0 {
            return Err(StatsError::EmptyExperiment);
        }
        let (wilson_low, wilson_high) = wilson_interval(successes, trials, Z95);
        let t = ratio_f64(&target);
        let slack = 3.0 * (t / trials as f64).sqrt();
        let verdict = if wilson_low <= t + slack {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Ok(Estimate {
            name: name.to_string(),
            p: field.prime().to_string(),
            trials,
            successes,
            point: ratio(successes, trials),
            wilson_low,
            wilson_high,
            target,
            slack,
            verdict,
        })
    }

    /// Two-sided check: the target lies in the slack-widened interval.
    pub fn band_contains_target(&self) -> bool {
        let t = ratio_f64(&self.target);
        self.wilson_low - self.slack <= t && t <= self.wilson_high + self.slack
    }

    pub fn rate(&self) -> f64 {
        ratio_f64(&self.point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equals,
    AtMost,
}

/// An exact value from full enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub name: String,
    pub p: String,
    pub value: Rational,
    pub target: Rational,
    pub relation: Relation,
    pub verdict: Verdict,
}

impl ExactResult {
    pub fn new(name: &str, field: Field, value: Rational, target: Rational, relation: Relation) -> Self {
        let ok = match relation {
            Relation::Equals => value == target,
            Relation::AtMost => value <= target,
        };
        ExactResult {
            name: name.to_string(),
            p: field.prime().to_string(),
            value,
            target,
            relation,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    Estimate(Estimate),
    Exact(ExactResult),
}

#[derive(Serialize)]
struct RowRecord<'a> {
    test: &'a str,
    p: &'a str,
    kind: &'static str,
    trials: Option<u64>,
    successes: Option<u64>,
    point: String,
    wilson_low: Option<f64>,
    wilson_high: Option<f64>,
    target: String,
    relation: &'static str,
    slack: Option<f64>,
    verdict: Verdict,
}

impl Row {
    pub fn name(&self) -> &str {
        match self {
            Row::Estimate(e) => &e.name,
            Row::Exact(x) => &x.name,
        }
    }

    pub fn verdict(&self) -> Verdict {
        match self {
            Row::Estimate(e) => e.verdict,
            Row::Exact(x) => x.verdict,
        }
    }

    fn record(&self) -> RowRecord<'_> {
        match self {
            Row::Estimate(e) => RowRecord {
                test: &e.name,
                p: &e.p,
                kind: "monte-carlo",
                trials: Some(e.trials),
                successes: Some(e.successes),
                point: e.point.to_string(),
                wilson_low: Some(e.wilson_low),
                wilson_high: Some(e.wilson_high),
                target: e.target.to_string(),
                relation: "at-most",
                slack: Some(e.slack),
                verdict: e.verdict,
            },
            Row::Exact(x) => RowRecord {
                test: &x.name,
                p: &x.p,
                kind: "exhaustive",
                trials: None,
                successes: None,
                point: x.value.to_string(),
                wilson_low: None,
                wilson_high: None,
                target: x.target.to_string(),
                relation: match x.relation {
                    Relation::Equals => "equals",
                    Relation::AtMost => "at-most",
                },
                slack: None,
                verdict: x.verdict,
            },
        }
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(&self.record()).expect("plain record serializes")
    }
}

impl From<Estimate> for Row {
    fn from(e: Estimate) -> Self {
        Row::Estimate(e)
    }
}

impl From<ExactResult> for Row {
    fn from(x: ExactResult) -> Self {
        Row::Exact(x)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict() == Verdict::Pass)
    }

    pub fn to_jsonl(&self) -> String {
        self.rows.iter().map(|r| r.json_line() + "\n").collect()
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<34} {:>6} {:>9} {:>12} {:>25} {:>14} {:>7}\n",
            "test", "p", "trials", "point", "interval", "target", "verdict"
        );
        for row in &self.rows {
            let r = row.record();
            let p = if r.p.len() > 6 { "large" } else { r.p };
            let point = match row {
                Row::Estimate(e) => format!("{:.6}", e.rate()),
                Row::Exact(_) => r.point.clone(),
            };
            let interval = match (r.wilson_low, r.wilson_high) {
                (Some(lo), Some(hi)) => format!("[{lo:.6}, {hi:.6}]"),
                _ => "exact".to_string(),
            };
            let target = if r.target.len() > 14 {
                "1/p".to_string()
            } else {
                r.target.clone()
            };
            let trials = r.trials.map_or("-".to_string(), |t| t.to_string());
            out += &format!(
                "{:<34} {:>6} {:>9} {:>12} {:>25} {:>14} {:>7}\n",
                r.test, p, trials, point, interval, target, r.verdict
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub field: Field,
    pub trials: u64,
    pub seed: [u8; 32],
    pub scheduling: Scheduling,
}

impl Config {
    pub fn new(field: Field, trials: u64, seed: [u8; 32]) -> Self {
        Config {
            field,
            trials,
            seed,
            scheduling: Scheduling::Rushing,
        }
    }

    fn check(&self) -> Result<(), StatsError> {
        if self.trials == 0 {
            Err(StatsError::EmptyExperiment)
        } else {
            Ok(())
        }
    }

    /// Keys shared by all trials of one experiment.
    pub fn keys(&self) -> KeyMaterial {
        let mut rng = ChaCha20Rng::from_seed(derive_seed(&self.seed, "keys"));
        let params = Params::generate(self.field, &mut rng);
        keygen(&params, &mut rng)
    }

    /// A single stream for experiments that need no per-trial isolation.
    pub fn stream(&self, label: &str) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(derive_seed(&self.seed, label))
    }

    pub fn trial_seed(&self, i: u64) -> [u8; 32] {
        derive_seed(&self.seed, &format!("trial/{i}"))
    }
}

fn small_field(field: Field, max: u64) -> Result<u64, StatsError> {
    match field.order_u64() {
        Some(p) if p <= max => Ok(p),
        _ => Err(StatsError::PrimeTooLarge {
            p: field.prime().to_string(),
            max,
        }),
    }
}

/// Two-party rejection rate of honest signatures. Rejections come from
/// `s4 = 0`, which happens with probability exactly `1/p`.
pub fn estimate_signature_correctness(cfg: &Config) -> Result<Estimate, StatsError> {
    cfg.check()?;
    let keys = cfg.keys();
    let mut rng = cfg.stream("sign");
    let mut rejected = 0;
    for i in 0..cfg.trials {
        let msg = i.to_be_bytes();
        let (sig, _) = two_party::sign(&keys, &msg, &mut rng);
        if !two_party::verify(&keys.pk, &keys.k_sig, &msg, &sig) {
            rejected += 1;
        }
    }
    Estimate::new(
        "signature-correctness",
        cfg.field,
        rejected,
        cfg.trials,
        inverse_p(cfg.field),
    )
}

fn session_for(
    cfg: &Config,
    keys: &KeyMaterial,
    i: u64,
    adversary: &mut dyn Adversary,
) -> Result<crate::net_sim::Session, StatsError> {
    let parties = Parties::new(
        Signer::new(keys.clone(), i.to_be_bytes().to_vec()),
        Holder::new(),
        Verifier::new(),
    );
    Ok(run_session(parties, adversary, &cfg.trial_seed(i), cfg.scheduling)?)
}

/// All-honest sessions. A trial fails when `z2 != x`, when `z3 != x`, or
/// when P3 cannot interpret `x` as a valid signature on the delivered
/// message (the `s4 = 0` case).
pub fn estimate_correctness(cfg: &Config) -> Result<Estimate, StatsError> {
    cfg.check()?;
    let keys = cfg.keys();
    let mut failures = 0;
    for i in 0..cfg.trials {
        let o = session_for(cfg, &keys, i, &mut NoAdversary)?.outcome;
        let interpreted = o
            .delivered
            .as_ref()
            .is_some_and(|d| three_party::interpret_value(&keys.pk, None, Some(d.n), &d.msg, &d.sig, o.x) == Ok(true));
        if o.z2 != Some(o.x) || o.z3 != Some(o.x) || !interpreted {
            failures += 1;
        }
    }
    Estimate::new(
        "session-correctness",
        cfg.field,
        failures,
        cfg.trials,
        inverse_p(cfg.field),
    )
}

fn scheduling_label(s: Scheduling) -> &'static str {
    match s {
        Scheduling::Rushing => "rushing",
        Scheduling::Lockstep => "lockstep",
    }
}

/// Success = P3 outputs a value other than `x` and other than bottom.
pub fn estimate_unforgeability(cfg: &Config, strategy: &str) -> Result<Estimate, StatsError> {
    cfg.check()?;
    attacks::by_name_for(strategy, Role::P2)?;
    let keys = cfg.keys();
    let mut wins = 0;
    for i in 0..cfg.trials {
        let mut adv = attacks::by_name(strategy)?;
        let o = session_for(cfg, &keys, i, adv.as_mut())?.outcome;
        if o.z3.is_some_and(|z| z != o.x) {
            wins += 1;
        }
    }
    let name = format!("unforgeability/{strategy}/{}", scheduling_label(cfg.scheduling));
    Estimate::new(&name, cfg.field, wins, cfg.trials, inverse_p(cfg.field))
}

/// Success = `z2 != bottom` and `z2 != z3`.
pub fn estimate_transferability(cfg: &Config, strategy: &str) -> Result<Estimate, StatsError> {
    cfg.check()?;
    attacks::by_name_for(strategy, Role::P1)?;
    let keys = cfg.keys();
    let mut wins = 0;
    for i in 0..cfg.trials {
        let mut adv = attacks::by_name(strategy)?;
        let o = session_for(cfg, &keys, i, adv.as_mut())?.outcome;
        if o.z2.is_some() && o.z2 != o.z3 {
            wins += 1;
        }
    }
    let name = format!("transferability/{strategy}/{}", scheduling_label(cfg.scheduling));
    Estimate::new(&name, cfg.field, wins, cfg.trials, inverse_p(cfg.field))
}

/// A fixed real signature to carry through enumerated sessions. Its
/// content does not affect the IC layer.
fn fixed_payload(field: Field) -> SignedPayload {
    let cfg = Config::new(field, 1, [0u8; 32]);
    let keys = cfg.keys();
    let (sig, tape) = two_party::sign(&keys, b"enumeration", &mut cfg.stream("payload"));
    SignedPayload {
        msg: b"enumeration".to_vec(),
        sig,
        n: tape.n,
    }
}

/// Calls `f(k1, k2, x', k2', e)` for every point of `F_p^5`.
fn for_each_ic_randomness(
    field: Field,
    mut f: impl FnMut([FieldElement; 5]) -> Result<(), StatsError>,
) -> Result<(), StatsError> {
    let all: Vec<FieldElement> = field.elements().collect();
    for &k1 in &all {
        for &k2 in &all {
            for &xp in &all {
                for &k2p in &all {
                    for &e in &all {
                        f([k1, k2, xp, k2p, e])?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn preset_session(
    signed: &SignedPayload,
    x: FieldElement,
    r: [FieldElement; 5],
    adversary: &mut dyn Adversary,
) -> Result<crate::net_sim::Session, StatsError> {
    let [k1, k2, xp, k2p, e] = r;
    let parties = Parties::new(
        Signer::preset(signed.clone(), IcSetup::honest(x, k1, k2, xp, k2p)),
        Holder::with_challenge(e),
        Verifier::new(),
    );
    Ok(run_session(parties, adversary, &[0u8; 32], Scheduling::Rushing)?)
}

/// Enumerates session randomness, the shift `x* - x` and the guess of `k1`.
pub fn exhaustive_unforgeability(field: Field) -> Result<ExactResult, StatsError> {
    small_field(field, EXHAUSTIVE_MAX_P)?;
    let signed = fixed_payload(field);
    let x = keyed_hash::ic_value(&signed.msg, &signed.sig.to_bytes(), field);
    let (mut wins, mut total) = (0u64, 0u64);
    for_each_ic_randomness(field, |r| {
        for shift in field.units() {
            for guess in field.elements() {
                let mut adv = SubstituteGuessK1 {
                    guess: Some(guess),
                    shift: Some(shift),
                };
                let o = preset_session(&signed, x, r, &mut adv)?.outcome;
                total += 1;
                if o.z3.is_some_and(|z| z != o.x) {
                    wins += 1;
                }
            }
        }
        Ok(())
    })?;
    Ok(ExactResult::new(
        "unforgeability-exhaustive",
        field,
        ratio(wins, total),
        inverse_p(field),
        Relation::Equals,
    ))
}

/// Enumerates session randomness and the offsets `(delta, delta')`.
pub fn exhaustive_transferability(field: Field) -> Result<ExactResult, StatsError> {
    small_field(field, EXHAUSTIVE_MAX_P)?;
    let signed = fixed_payload(field);
    let x = keyed_hash::ic_value(&signed.msg, &signed.sig.to_bytes(), field);
    let (mut wins, mut total) = (0u64, 0u64);
    for_each_ic_randomness(field, |r| {
        for delta in field.units() {
            for delta_prime in field.elements() {
                let mut adv = InconsistentLine {
                    delta: Some(delta),
                    delta_prime: Some(delta_prime),
                };
                let o = preset_session(&signed, x, r, &mut adv)?.outcome;
                total += 1;
                if o.z2.is_some() && o.z2 != o.z3 {
                    wins += 1;
                }
            }
        }
        Ok(())
    })?;
    Ok(ExactResult::new(
        "transferability-exhaustive",
        field,
        ratio(wins, total),
        inverse_p(field),
        Relation::Equals,
    ))
}

/// Distribution of P3's signing-phase view (everything it received up to
/// and including the resolution round) for an honest run authenticating `x`.
fn p3_view_distribution(
    field: Field,
    signed: &SignedPayload,
    x: FieldElement,
) -> Result<HashMap<Vec<u8>, u64>, StatsError> {
    let mut counts = HashMap::new();
    for_each_ic_randomness(field, |r| {
        let s = preset_session(signed, x, r, &mut NoAdversary)?;
        let mut key = Vec::new();
        for env in s.views[Role::P3.index()]
            .received
            .iter()
            .filter(|e| e.round <= ROUND_RESOLVE)
        {
            key.extend(env.log_line().into_bytes());
            key.push(b'\n');
        }
        *counts.entry(key).or_insert(0u64) += 1;
        Ok(())
    })?;
    Ok(counts)
}

fn total_variation<K: std::hash::Hash + Eq>(a: &HashMap<K, u64>, b: &HashMap<K, u64>) -> Rational {
    let (na, nb): (u64, u64) = (a.values().sum(), b.values().sum());
    let mut l1 = Ratio::new(BigUint::zero(), BigUint::from(1u8));
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        let (pa, pb) = (ratio(ca, na), ratio(cb, nb));
        l1 += if pa > pb { pa - pb } else { pb - pa };
    }
    for (k, &cb) in b {
        if !a.contains_key(k) {
            l1 += ratio(cb, nb);
        }
    }
    l1 / BigUint::from(2u8)
}

/// Exact total variation between P3's views for `x_a` and `x_b`.
pub fn secrecy_tv(field: Field, x_a: FieldElement, x_b: FieldElement) -> Result<Rational, StatsError> {
    small_field(field, EXHAUSTIVE_MAX_P)?;
    let signed = fixed_payload(field);
    let a = p3_view_distribution(field, &signed, x_a)?;
    let b = p3_view_distribution(field, &signed, x_b)?;
    Ok(total_variation(&a, &b))
}

/// The largest view distance over all pairs of distinct values.
pub fn secrecy_tv_max(field: Field) -> Result<ExactResult, StatsError> {
    small_field(field, EXHAUSTIVE_MAX_P)?;
    let signed = fixed_payload(field);
    let dists = field
        .elements()
        .map(|x| p3_view_distribution(field, &signed, x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst = Ratio::new(BigUint::zero(), BigUint::from(1u8));
    for i in 0..dists.len() {
        for j in 0..i {
            worst = worst.max(total_variation(&dists[i], &dists[j]));
        }
    }
    Ok(ExactResult::new(
        "secrecy-tv",
        field,
        worst,
        Ratio::new(BigUint::zero(), BigUint::from(1u8)),
        Relation::Equals,
    ))
}

/// Uniform 5-tuples against a fresh uniform receipt. The acceptance rate
/// is exactly `(p - 1) / p^2`: given `s4 != 0`, one receipt value works.
pub fn estimate_core_forgery(cfg: &Config) -> Result<Estimate, StatsError> {
    cfg.check()?;
    let pk = cfg.keys().pk;
    let mut rng = cfg.stream("core");
    let f = cfg.field;
    let mut accepted = 0;
    for _ in 0..cfg.trials {
        let sig = Signature::from_components([(); 5].map(|_| f.sample(&mut rng)));
        let r = f.sample(&mut rng);
        if two_party::verify_with_receipt(&pk, r, &sig) {
            accepted += 1;
        }
    }
    Estimate::new("core-forgery", f, accepted, cfg.trials, inverse_p(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreCount {
    pub accepted: u64,
    pub total: u64,
}

/// Counts accepting `(s1..s5, r)` over all of `F_p^6` for fixed weights.
pub fn exhaustive_core_count(pk: &Weights) -> Result<CoreCount, StatsError> {
    let field = pk.field();
    small_field(field, CORE_EXHAUSTIVE_MAX_P)?;
    let all: Vec<FieldElement> = field.elements().collect();
    let mut accepted = 0u64;
    let mut total = 0u64;
    for &s1 in &all {
        for &s2 in &all {
            for &s3 in &all {
                for &s4 in &all {
                    for &s5 in &all {
                        let sig = Signature { s1, s2, s3, s4, s5 };
                        for &r in &all {
                            total += 1;
                            if two_party::verify_with_receipt(pk, r, &sig) {
                                accepted += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CoreCount { accepted, total })
}

/// The exhaustive count as a row: expected rate `(p - 1) / p^2`.
pub fn exhaustive_core_forgery(pk: &Weights) -> Result<ExactResult, StatsError> {
    let field = pk.field();
    let p = small_field(field, CORE_EXHAUSTIVE_MAX_P)?;
    let c = exhaustive_core_count(pk)?;
    Ok(ExactResult::new(
        "core-forgery-exhaustive",
        field,
        ratio(c.accepted, c.total),
        ratio(p - 1, p * p),
        Relation::Equals,
    ))
}

/// With the receipt in hand the forger solves for `s5`; it never fails
/// once `s4 != 0`, so only nonzero `s4` are drawn here.
pub fn estimate_known_receipt_forgery(cfg: &Config) -> Result<Estimate, StatsError> {
    cfg.check()?;
    let pk = cfg.keys().pk;
    let mut rng = cfg.stream("known-receipt");
    let f = cfg.field;
    let mut accepted = 0;
    for _ in 0..cfg.trials {
        let r = f.sample(&mut rng);
        let free = [
            f.sample(&mut rng),
            f.sample(&mut rng),
            f.sample(&mut rng),
            f.sample_unit(&mut rng),
        ];
        if two_party::verify_with_receipt(&pk, r, &two_party::forge_for_receipt(&pk, r, free)) {
            accepted += 1;
        }
    }
    let mut e = Estimate::new("known-receipt-forgery", f, accepted, cfg.trials, ratio(1, 1))?;
    // Here the target is a floor, not a ceiling.
    e.verdict = if accepted == cfg.trials {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(e)
}

fn tuple_index(sig: &Signature, p: u64) -> usize {
    sig.components()
        .iter()
        .fold(0u64, |acc, c| acc * p + c.to_u64().expect("small field")) as usize
}

/// Honest transcripts fix `K'` (never equal to `r`); the simulator draws
/// `K'*` uniformly. Both draw the other values as the signer does.
/// Returns the largest total variation over all weights, receipts and
/// `K' != r`.
pub fn dv_transcript_tv(field: Field) -> Result<ExactResult, StatsError> {
    let p = small_field(field, DV_TV_MAX_P)?;
    let size = (p as usize).pow(5);
    let all: Vec<FieldElement> = field.elements().collect();
    let units: Vec<FieldElement> = field.units().collect();

    // Accumulates counts of the tuples produced with a given K'.
    let fill = |counts: &mut [u64], pk: &Weights, r: FieldElement, k_prime: FieldElement| {
        for &slope_k in &all {
            for &slope_eps in &all {
                for &d in &units {
                    for &eps in &units {
                        for &b in &units {
                            let c = SimulatorChoice {
                                k_prime,
                                slope_k,
                                slope_eps,
                                d,
                                eps,
                                b,
                            };
                            counts[tuple_index(&two_party::simulate_with_receipt(pk, r, &c), p)] += 1;
                        }
                    }
                }
            }
        }
    };

    let mut worst = Ratio::new(BigUint::zero(), BigUint::from(1u8));
    for &w0 in &units {
        for &w1 in units.iter().filter(|&&w| w != w0) {
            let pk = Weights::new(w0, w1).expect("distinct nonzero weights");
            for &r in &all {
                let mut by_key: Vec<Vec<u64>> = Vec::with_capacity(all.len());
                for &k in &all {
                    let mut counts = vec![0u64; size];
                    fill(&mut counts, &pk, r, k);
                    by_key.push(counts);
                }
                let simulated: Vec<u64> = (0..size).map(|i| by_key.iter().map(|c| c[i]).sum()).collect();
                let n_sim: u64 = simulated.iter().sum();
                for (ki, &k) in all.iter().enumerate() {
                    if k == r {
                        continue;
                    }
                    let honest = &by_key[ki];
                    let n_honest: u64 = honest.iter().sum();
                    // sum |h/n_h - s/n_s| over a common denominator n_h n_s
                    let l1: u64 = (0..size)
                        .map(|i| (honest[i] * n_sim).abs_diff(simulated[i] * n_honest))
                        .sum();
                    worst = worst.max(ratio(l1, 2 * n_honest * n_sim));
                }
            }
        }
    }
    Ok(ExactResult::new(
        "dv-transcript-tv",
        field,
        worst,
        ratio(2, p),
        Relation::AtMost,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Correctness,
    Unforgeability,
    Transferability,
    Secrecy,
    Core,
    All,
}

impl Suite {
    /// Whether the suite has rows that enumerate a tiny field.
    pub fn needs_exhaustive(self) -> bool {
        !matches!(self, Suite::Correctness)
    }
}

impl FromStr for Suite {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "correctness" => Suite::Correctness,
            "unforgeability" => Suite::Unforgeability,
            "transferability" => Suite::Transferability,
            "secrecy" => Suite::Secrecy,
            "core" => Suite::Core,
            "all" => Suite::All,
            other => return Err(StatsError::UnknownSuite(other.to_string())),
        })
    }
}

/// Runs a suite. Monte-Carlo rows use the configured field; exhaustive
/// rows use fixed tiny primes. Large-prime profiles are limited to the
/// suites without exhaustive rows.
pub fn run_suite(suite: Suite, cfg: &Config) -> Result<Report, StatsError> {
    if suite.needs_exhaustive() && cfg.field.order_u64().is_none() {
        return Err(StatsError::PrimeTooLarge {
            p: cfg.field.prime().to_string(),
            max: CORE_EXHAUSTIVE_MAX_P,
        });
    }
    let want = |s: Suite| suite == s || suite == Suite::All;
    let both = [Scheduling::Rushing, Scheduling::Lockstep].map(|s| Config { scheduling: s, ..*cfg });
    let mut rows: Vec<Row> = Vec::new();
    if want(Suite::Correctness) {
        rows.push(estimate_signature_correctness(cfg)?.into());
        rows.push(estimate_correctness(cfg)?.into());
    }
    if want(Suite::Unforgeability) {
        for c in &both {
            rows.push(estimate_unforgeability(c, "substitute-guess-k1")?.into());
        }
        rows.push(exhaustive_unforgeability(Field::small(5))?.into());
    }
    if want(Suite::Transferability) {
        for c in &both {
            rows.push(estimate_transferability(c, "inconsistent-line")?.into());
        }
        rows.push(exhaustive_transferability(Field::small(5))?.into());
    }
    if want(Suite::Secrecy) {
        rows.push(secrecy_tv_max(Field::small(5))?.into());
        rows.push(secrecy_tv_max(Field::small(7))?.into());
        rows.push(dv_transcript_tv(Field::small(5))?.into());
    }
    if want(Suite::Core) {
        rows.push(estimate_core_forgery(cfg)?.into());
        let small = Config::new(Field::small(13), 1, cfg.seed);
        rows.push(exhaustive_core_forgery(&small.keys().pk)?.into());
        rows.push(estimate_known_receipt_forgery(cfg)?.into());
    }
    Ok(Report { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Endpoints of `{q : (k - n q)^2 <= z^2 n q (1 - q)}` by grid scan.
    fn score_set_bounds(k: u64, n: u64, step: f64) -> (f64, f64) {
        let (kf, nf) = (k as f64, n as f64);
        let z2 = Z95 * Z95;
        let inside = |q: f64| (kf - nf * q).powi(2) <= z2 * nf * q * (1.0 - q);
        let steps = (1.0 / step) as u64;
        let pts: Vec<f64> = (0..=steps).map(|i| i as f64 * step).filter(|&q| inside(q)).collect();
        (pts.first().copied().unwrap_or(0.0), pts.last().copied().unwrap_or(1.0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn wilson_matches_score_test_inversion(n in 1u64..60, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).round() as u64;
            let step = 1e-5;
            let (lo, hi) = wilson_interval(k, n, Z95);
            let (glo, ghi) = score_set_bounds(k, n, step);
            // The endpoints 0 and 1 satisfy the inequality with equality.
            if k > 0 { prop_assert!((lo - glo).abs() <= 2.0 * step, "{} vs {}", lo, glo); }
            if k < n { prop_assert!((hi - ghi).abs() <= 2.0 * step, "{} vs {}", hi, ghi); }
        }
    }

    #[test]
    fn wilson_reference_values() {
        // 0 of 10: upper bound z^2 / (n + z^2).
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - Z95 * Z95 / (10.0 + Z95 * Z95)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(5, 10, Z95);
        assert!((lo + hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_experiment() {
        let cfg = Config::new(Field::small(13), 0, [0; 32]);
        assert_eq!(estimate_correctness(&cfg).unwrap_err(), StatsError::EmptyExperiment);
        assert_eq!(estimate_core_forgery(&cfg).unwrap_err(), StatsError::EmptyExperiment);
        assert!(Estimate::new("x", Field::small(13), 0, 0, ratio(1, 13)).is_err());
    }

    #[test]
    fn verdict_rule() {
        let f = Field::small(251);
        let e = Estimate::new("t", f, 4, 1000, ratio(1, 251)).unwrap();
        assert_eq!(e.verdict, Verdict::Pass);
        assert!(e.band_contains_target());
        let e = Estimate::new("t", f, 100, 1000, ratio(1, 251)).unwrap();
        assert_eq!(e.verdict, Verdict::Fail);
        assert!(!e.band_contains_target());
        // Far below the bound still passes the one-sided verdict.
        let e = Estimate::new("t", f, 0, 100_000, ratio(1, 251)).unwrap();
        assert_eq!(e.verdict, Verdict::Pass);
        assert!(!e.band_contains_target());
    }

    #[test]
    fn strategy_role_checks() {
        let cfg = Config::new(Field::small(13), 10, [0; 32]);
        assert!(matches!(
            estimate_unforgeability(&cfg, "inconsistent-line"),
            Err(StatsError::Attack(AttackError::RoleMismatch { .. }))
        ));
        assert!(matches!(
            estimate_transferability(&cfg, "nope"),
            Err(StatsError::Attack(AttackError::UnknownStrategy(_)))
        ));
    }

    #[test]
    fn exhaustive_limits() {
        assert!(matches!(
            secrecy_tv_max(Field::small(11)),
            Err(StatsError::PrimeTooLarge { .. })
        ));
        assert!(matches!(
            dv_transcript_tv(Field::small(7)),
            Err(StatsError::PrimeTooLarge { .. })
        ));
        assert!(matches!(
            run_suite(Suite::All, &Config::new(Field::secure(), 10, [0; 32])),
            Err(StatsError::PrimeTooLarge { .. })
        ));
    }

    #[test]
    fn secrecy_same_value_is_zero() {
        let f = Field::small(5);
        assert!(secrecy_tv(f, f.from_u64(2), f.from_u64(2)).unwrap().is_zero());
    }

    #[test]
    fn total_variation_oracle() {
        let a: HashMap<u8, u64> = [(0, 1), (1, 3)].into();
        let b: HashMap<u8, u64> = [(1, 1), (2, 1)].into();
        // P = (1/4, 3/4, 0), Q = (0, 1/2, 1/2): TV = (1/4 + 1/4 + 1/2) / 2
        assert_eq!(total_variation(&a, &b), ratio(1, 2));
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = Config::new(Field::small(13), 300, [7; 32]);
        let a = run_suite(Suite::Correctness, &cfg).unwrap();
        let b = run_suite(Suite::Correctness, &cfg).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        assert_eq!(a.table(), b.table());
        assert_eq!(a.to_jsonl().lines().count(), 2);
    }
}
