//! The `tdvsig` command line.
//!
//! Key files are hex text in one directory: `sk.hex`, `pk.hex` (`w0 || w1`),
//! `ksig.hex` and `params.json`. `ksig.hex` is the designated verifier's
//! secret; hand it only to the verifier.
//!
//! Exit codes: 0 success or accept, 1 reject or failed verdict, 2 usage,
//! 3 I/O, 4 malformed input, 5 degenerate algebra, 6 unknown strategy.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::{self, AttackError};
use crate::field::{ops, Field, FieldElement, FieldError, Prime};
use crate::keyed_hash::{self, PairKey};
use crate::net_sim::{derive_seed, run_session, transcript_log, Parties, Scheduling};
use crate::sss::Weights;
use crate::stats_harness::{self, Config, StatsError, Suite};
use crate::three_party::{Holder, Resolution, Signer, Verifier};
use crate::two_party::{self, Hint, KeyMaterial, Params, Signature, SignatureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// p = 2^255 - 19
    Secure,
    #[value(name = "toy-5")]
    #[serde(rename = "toy-5")]
    Toy5,
    #[value(name = "toy-13")]
    #[serde(rename = "toy-13")]
    Toy13,
    #[value(name = "toy-251")]
    #[serde(rename = "toy-251")]
    Toy251,
    #[value(name = "toy-1009")]
    #[serde(rename = "toy-1009")]
    Toy1009,
}

impl Profile {
    pub fn label(self) -> &'static str {
        match self {
            Profile::Secure => "secure",
            Profile::Toy5 => "toy-5",
            Profile::Toy13 => "toy-13",
            Profile::Toy251 => "toy-251",
            Profile::Toy1009 => "toy-1009",
        }
    }

    pub fn field(self) -> Field {
        match self {
            Profile::Secure => Field::secure(),
            Profile::Toy5 => Field::small(5),
            Profile::Toy13 => Field::small(13),
            Profile::Toy251 => Field::small(251),
            Profile::Toy1009 => Field::small(1009),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tdvsig", version, about = "Designated-verifier signatures over prime fields")]
pub struct Cli {
    /// Field profile for commands that create keys or run experiments.
    #[arg(long, value_enum, default_value = "secure", global = true)]
    pub profile: Profile,
    /// 32-byte hex seed; every command is deterministic under a fixed seed.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate sk.hex, pk.hex, ksig.hex and params.json in a directory.
    Keygen {
        #[arg(long)]
        out: PathBuf,
    },
    /// Sign a message file; writes the signature as hex.
    Sign {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify with ksig.hex, or with a published receipt via --receipt.
    Verify {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        sig: PathBuf,
        /// Hex receipt r; replaces ksig.hex.
        #[arg(long)]
        receipt: Option<String>,
        /// Use the insecure verifier that takes r = H(M).
        #[arg(long)]
        weakened: bool,
    },
    /// Print the receipt r for a message (needs ksig.hex).
    Receipt {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        msg: PathBuf,
    },
    /// Produce an accepting signature from ksig.hex alone.
    ForgeDv {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the hidden signing values of an accepted signature.
    Extract {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        receipt: Option<String>,
        /// One of d:HEX, s:HEX, a:HEX.
        #[arg(long)]
        hint: String,
    },
    /// Forge against the weakened r = H(M) verifier using only pk.hex.
    ForgePublicR {
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run three-party sessions and report outcomes.
    Sim3p {
        #[arg(long, default_value = "none")]
        adversary: String,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long)]
        msg: Option<PathBuf>,
        /// Write the transcript log of every session here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        lockstep: bool,
    },
    /// Run a statistics suite and print a verdict table.
    Stats {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Write one JSON line per result here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report sizes, field-operation counts and sign/verify timings.
    Bench {
        #[arg(long, default_value_t = 2001)]
        iterations: usize,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    UnknownStrategy(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Malformed(_) => 4,
            CliError::Degenerate(_) => 5,
            CliError::UnknownStrategy(_) => 6,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Malformed(e.to_string())
    }
}

impl From<SignatureError> for CliError {
    fn from(e: SignatureError) -> Self {
        match e {
            SignatureError::DegenerateExtraction(_) => CliError::Degenerate(e.to_string()),
            _ => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<AttackError> for CliError {
    fn from(e: AttackError) -> Self {
        CliError::UnknownStrategy(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::Attack(a) => a.into(),
            StatsError::Sim(s) => CliError::Malformed(s.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// What a command produced: an exit status plus text for stdout.
#[derive(Debug, Default)]
pub struct Output {
    pub status: i32,
    pub stdout: String,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output { status: 0, stdout }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsFile {
    profile: Profile,
    prime: String,
    element_bytes: usize,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    String::from_utf8(read(path)?).map_err(|_| CliError::Malformed(format!("{} is not text", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_seed(seed: Option<&str>) -> Result<[u8; 32], CliError> {
    match seed {
        Some(s) => {
            let bytes = hex::decode(s.trim()).map_err(|e| CliError::Usage(format!("--seed: {e}")))?;
            bytes
                .try_into()
                .map_err(|_| CliError::Usage("--seed must be 32 bytes of hex".into()))
        }
        None => {
            let mut out = [0u8; 32];
            rand::RngCore::fill_bytes(&mut ChaCha20Rng::from_entropy(), &mut out);
            Ok(out)
        }
    }
}

struct LoadedKeys {
    field: Field,
    sk: Option<FieldElement>,
    pk: Weights,
    k_sig: Option<PairKey>,
}

impl LoadedKeys {
    fn load(dir: &Path) -> Result<Self, CliError> {
        let params: ParamsFile = serde_json::from_str(&read_text(&dir.join("params.json"))?)
            .map_err(|e| CliError::Malformed(format!("params.json: {e}")))?;
        let prime: Prime = params.prime.parse()?;
        let field = Field::new(&prime);
        let pk_bytes = hex::decode(read_text(&dir.join("pk.hex"))?.trim())
            .map_err(|e| CliError::Malformed(format!("pk.hex: {e}")))?;
        let w = field.byte_len();
        if pk_bytes.len() != 2 * w {
            return Err(FieldError::LengthMismatch {
                expected: 2 * w,
                actual: pk_bytes.len(),
            }
            .into());
        }
        let pk = Weights::new(field.from_bytes(&pk_bytes[..w])?, field.from_bytes(&pk_bytes[w..])?)
            .map_err(|e| CliError::Malformed(format!("pk.hex: {e}")))?;
        let optional = |name: &str| -> Result<Option<String>, CliError> {
            let path = dir.join(name);
            if path.exists() {
                read_text(&path).map(Some)
            } else {
                Ok(None)
            }
        };
        let sk = optional("sk.hex")?.map(|s| field.from_hex(&s)).transpose()?;
        let k_sig = optional("ksig.hex")?.map(|s| PairKey::from_hex(&s)).transpose()?;
        Ok(LoadedKeys { field, sk, pk, k_sig })
    }

    fn signing_keys(&self) -> Result<KeyMaterial, CliError> {
        let sk = self.sk.ok_or_else(|| CliError::Usage("sk.hex is required".into()))?;
        if sk.is_zero() {
            return Err(CliError::Malformed("sk.hex is zero".into()));
        }
        Ok(KeyMaterial {
            sk,
            pk: self.pk,
            k_sig: self.pair_key()?.clone(),
        })
    }

    fn pair_key(&self) -> Result<&PairKey, CliError> {
        self.k_sig
            .as_ref()
            .ok_or_else(|| CliError::Usage("ksig.hex is required (or pass --receipt)".into()))
    }

    fn receipt(&self, msg: &[u8], given: Option<&str>) -> Result<FieldElement, CliError> {
        match given {
            Some(hex) => Ok(self.field.from_hex(hex)?),
            None => Ok(keyed_hash::derive_receipt(self.pair_key()?, msg, self.field).1),
        }
    }

    fn signature(&self, path: &Path) -> Result<Signature, CliError> {
        Ok(Signature::from_hex(self.field, &read_text(path)?)?)
    }
}

fn emit(out: Option<&Path>, text: String) -> Result<Output, CliError> {
    match out {
        Some(path) => {
            write(path, &(text + "\n"))?;
            Ok(Output::default())
        }
        None => Ok(Output::ok(text + "\n")),
    }
}

fn parse_hint(field: Field, s: &str) -> Result<Hint, CliError> {
    let (kind, value) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage("--hint must look like d:HEX, s:HEX or a:HEX".into()))?;
    let v = field.from_hex(value)?;
    match kind {
        "d" => Ok(Hint::D(v)),
        "s" => Ok(Hint::S(v)),
        "a" => Ok(Hint::A(v)),
        _ => Err(CliError::Usage(format!("unknown hint kind {kind:?}"))),
    }
}

pub fn run(cli: Cli) -> Result<Output, CliError> {
    let seed = parse_seed(cli.seed.as_deref())?;
    let rng_for = |label: &str| ChaCha20Rng::from_seed(derive_seed(&seed, label));
    match cli.command {
        Command::Keygen { out } => {
            let field = cli.profile.field();
            let mut rng = rng_for("keygen");
            let keys = two_party::keygen(&Params::generate(field, &mut rng), &mut rng);
            fs::create_dir_all(&out).map_err(|source| CliError::Io {
                path: out.clone(),
                source,
            })?;
            let params = ParamsFile {
                profile: cli.profile,
                prime: field.prime().to_string(),
                element_bytes: field.byte_len(),
            };
            write(&out.join("sk.hex"), &(keys.sk.to_hex() + "\n"))?;
            write(&out.join("pk.hex"), &(hex::encode(keys.pk_bytes()) + "\n"))?;
            write(&out.join("ksig.hex"), &(keys.k_sig.to_hex() + "\n"))?;
            write(
                &out.join("params.json"),
                &(serde_json::to_string_pretty(&params).expect("plain struct") + "\n"),
            )?;
            Ok(Output::ok(format!("wrote keys to {}\n", out.display())))
        }
        Command::Sign { keys, msg, out } => {
            let k = LoadedKeys::load(&keys)?.signing_keys()?;
            let msg = read(&msg)?;
            let (sig, _) = two_party::sign(&k, &msg, &mut rng_for("sign"));
            emit(out.as_deref(), sig.to_hex())
        }
        Command::Verify {
            keys,
            msg,
            sig,
            receipt,
            weakened,
        } => {
            let k = LoadedKeys::load(&keys)?;
            let msg = read(&msg)?;
            let sig = k.signature(&sig)?;
            let ok = if weakened {
                two_party::verify_public_r(&k.pk, &msg, &sig)
            } else {
                two_party::verify_with_receipt(&k.pk, k.receipt(&msg, receipt.as_deref())?, &sig)
            };
            Ok(Output {
                status: if ok { 0 } else { 1 },
                stdout: if ok { "accept\n" } else { "reject\n" }.to_string(),
            })
        }
        Command::Receipt { keys, msg } => {
            let k = LoadedKeys::load(&keys)?;
            let r = k.receipt(&read(&msg)?, None)?;
            Ok(Output::ok(r.to_hex() + "\n"))
        }
        Command::ForgeDv { keys, msg, out } => {
            let k = LoadedKeys::load(&keys)?;
            let msg = read(&msg)?;
            let sig = two_party::dv_forge(k.pair_key()?, &k.pk, &msg, &mut rng_for("forge-dv"));
            emit(out.as_deref(), sig.to_hex())
        }
        Command::Extract {
            keys,
            msg,
            sig,
            receipt,
            hint,
        } => {
            let k = LoadedKeys::load(&keys)?;
            let msg = read(&msg)?;
            let sig = k.signature(&sig)?;
            let r = k.receipt(&msg, receipt.as_deref())?;
            if !two_party::verify_with_receipt(&k.pk, r, &sig) {
                return Ok(Output {
                    status: 1,
                    stdout: "reject: extraction needs an accepted signature\n".into(),
                });
            }
            let family = two_party::ExtractedFamily::new(&k.pk, r, &sig);
            let m = family.pin(parse_hint(k.field, &hint)?)?;
            let json = serde_json::json!({
                "ratio": family.ratio.map(|v| v.to_hex()),
                "d": m.d.to_hex(),
                "s": m.s.to_hex(),
                "a": m.a.to_hex(),
                "u0": m.u0.map(|v| v.to_hex()),
                "u1": m.u1.to_hex(),
                "k0": m.k0.to_hex(),
                "k1": m.k1.to_hex(),
            });
            Ok(Output::ok(
                serde_json::to_string_pretty(&json).expect("json value") + "\n",
            ))
        }
        Command::ForgePublicR { keys, msg, out } => {
            let k = LoadedKeys::load(&keys)?;
            let msg = read(&msg)?;
            let sig = two_party::public_r_forge(&k.pk, &msg, &mut rng_for("forge-public-r"));
            emit(out.as_deref(), sig.to_hex())
        }
        Command::Sim3p {
            adversary,
            trials,
            msg,
            out,
            lockstep,
        } => sim3p(
            cli.profile,
            &seed,
            &adversary,
            trials,
            msg.as_deref(),
            out.as_deref(),
            lockstep,
        ),
        Command::Stats { suite, trials, out } => {
            let suite: Suite = suite.parse()?;
            let cfg = Config::new(cli.profile.field(), trials, seed);
            let report = stats_harness::run_suite(suite, &cfg)?;
            if let Some(path) = out {
                write(&path, &report.to_jsonl())?;
            }
            Ok(Output {
                status: if report.all_pass() { 0 } else { 1 },
                stdout: format!("seed {}\n{}", hex::encode(seed), report.table()),
            })
        }
        Command::Bench { iterations } => bench(cli.profile, &seed, iterations),
    }
}

#[derive(Debug, Default, Serialize)]
struct SimSummary {
    trials: u64,
    adversary: String,
    z2_equals_x: u64,
    z3_equals_x: u64,
    z3_bottom: u64,
    forgeries: u64,
    disagreements: u64,
    agreed: u64,
    p2_corrupt: u64,
    p3_rejected: u64,
    p3_corrupt: u64,
    fallthrough: u64,
}

fn sim3p(
    profile: Profile,
    seed: &[u8; 32],
    adversary: &str,
    trials: u64,
    msg: Option<&Path>,
    out: Option<&Path>,
    lockstep: bool,
) -> Result<Output, CliError> {
    attacks::by_name(adversary)?;
    let cfg = Config::new(profile.field(), trials.max(1), *seed);
    let keys = cfg.keys();
    let msg = match msg {
        Some(p) => Some(read(p)?),
        None => None,
    };
    let scheduling = if lockstep {
        Scheduling::Lockstep
    } else {
        Scheduling::Rushing
    };
    let mut summary = SimSummary {
        trials,
        adversary: adversary.to_string(),
        ..SimSummary::default()
    };
    let mut log = String::new();
    let mut last = String::new();
    for i in 0..trials {
        let m = msg.clone().unwrap_or_else(|| i.to_be_bytes().to_vec());
        let parties = Parties::new(Signer::new(keys.clone(), m), Holder::new(), Verifier::new());
        let mut adv = attacks::by_name(adversary)?;
        let s = run_session(parties, adv.as_mut(), &cfg.trial_seed(i), scheduling)
            .map_err(|e| CliError::Malformed(e.to_string()))?;
        let o = &s.outcome;
        summary.z2_equals_x += u64::from(o.z2 == Some(o.x));
        summary.z3_equals_x += u64::from(o.z3 == Some(o.x));
        summary.z3_bottom += u64::from(o.z3.is_none());
        summary.forgeries += u64::from(o.z3.is_some_and(|z| z != o.x));
        summary.disagreements += u64::from(o.z2.is_some() && o.z2 != o.z3);
        match o.resolution {
            Some(Resolution::Agreed) => summary.agreed += 1,
            Some(Resolution::P2Corrupt) => summary.p2_corrupt += 1,
            Some(Resolution::P3Rejected) => summary.p3_rejected += 1,
            Some(Resolution::P3Corrupt) => summary.p3_corrupt += 1,
            Some(Resolution::Fallthrough) | None => summary.fallthrough += 1,
        }
        if out.is_some() {
            log += &format!("# session {i}\n{}", transcript_log(&s.transcript));
        }
        let show = |v: Option<FieldElement>| v.map_or("bottom".to_string(), |z| z.to_hex());
        last = format!("x {} z2 {} z3 {}\n", o.x.to_hex(), show(o.z2), show(o.z3));
    }
    if let Some(path) = out {
        write(path, &log)?;
    }
    let mut stdout = format!("seed {}\n", hex::encode(seed));
    if trials == 1 {
        stdout += &last;
    }
    stdout += &(serde_json::to_string(&summary).expect("plain struct") + "\n");
    Ok(Output::ok(stdout))
}

fn median_nanos(mut samples: Vec<u128>) -> u128 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

fn bench(profile: Profile, seed: &[u8; 32], iterations: usize) -> Result<Output, CliError> {
    let field = profile.field();
    let mut rng = ChaCha20Rng::from_seed(derive_seed(seed, "bench"));
    let keys = two_party::keygen(&Params::generate(field, &mut rng), &mut rng);
    let msg = b"benchmark message";
    let ((sig, _), sign_ops) = ops::measure(|| two_party::sign(&keys, msg, &mut rng));
    let (_, verify_ops) = ops::measure(|| two_party::verify(&keys.pk, &keys.k_sig, msg, &sig));
    let iterations = iterations.max(1);
    let mut sign_t = Vec::with_capacity(iterations);
    let mut verify_t = Vec::with_capacity(iterations);
    let mut sigs = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let t = Instant::now();
        let (s, _) = two_party::sign(&keys, msg, &mut rng);
        sign_t.push(t.elapsed().as_nanos());
        sigs.push(s);
    }
    for s in &sigs {
        let t = Instant::now();
        std::hint::black_box(two_party::verify(&keys.pk, &keys.k_sig, msg, s));
        verify_t.push(t.elapsed().as_nanos());
    }
    let counts = |c: ops::OpCounts| {
        if ops::enabled() {
            format!("{} mul, {} inv", c.mul, c.inv)
        } else {
            "not counted (build with --features op-count)".to_string()
        }
    };
    let mut out = format!("profile {}, p = {}\n", profile.label(), field.prime());
    out += &format!("sk bytes        {}\n", keys.sk_bytes().len());
    out += &format!("pk bytes        {}\n", keys.pk_bytes().len());
    out += &format!("ksig bytes      {}\n", keys.k_sig.as_bytes().len());
    out += &format!("signature bytes {}\n", sig.to_bytes().len());
    out += &format!("receipt bytes   {}\n", field.byte_len());
    out += &format!("sign ops        {}\n", counts(sign_ops));
    out += &format!("verify ops      {}\n", counts(verify_ops));
    out += &format!("sign median     {:.2} us\n", median_nanos(sign_t) as f64 / 1e3);
    out += &format!("verify median   {:.2} us\n", median_nanos(verify_t) as f64 / 1e3);
    Ok(Output::ok(out))
}
