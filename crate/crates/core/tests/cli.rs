use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SEED: &str = "0101010101010101010101010101010101010101010101010101010101010101";

fn tdvsig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdvsig")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn keygen(dir: &Path, profile: &str, seed: &str) {
    let out = tdvsig(&["--profile", profile, "--seed", seed, "keygen", "--out", path(dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn hex_len(p: &Path) -> usize {
    hex::decode(fs::read_to_string(p).unwrap().trim()).unwrap().len()
}

#[test]
fn secure_key_sizes_and_reproducible_keygen() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    keygen(&a, "secure", SEED);
    keygen(&b, "secure", SEED);
    assert_eq!(hex_len(&a.join("sk.hex")), 32);
    assert_eq!(hex_len(&a.join("pk.hex")), 64);
    assert_eq!(hex_len(&a.join("ksig.hex")), 32);
    for f in ["sk.hex", "pk.hex", "ksig.hex", "params.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn toy_13_uses_one_byte_elements() {
    let dir = tempfile::tempdir().unwrap();
    keygen(dir.path(), "toy-13", SEED);
    assert_eq!(hex_len(&dir.path().join("sk.hex")), 1);
    assert_eq!(hex_len(&dir.path().join("pk.hex")), 2);
}

#[test]
fn sign_verify_forge_and_extract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let keys = d.join("keys");
    keygen(&keys, "secure", SEED);
    let msg = d.join("msg");
    fs::write(&msg, b"pay 10 to bob").unwrap();
    let other = d.join("other");
    fs::write(&other, b"pay 99 to eve").unwrap();
    let sig = d.join("sig");

    let out = tdvsig(&[
        "--seed",
        SEED,
        "sign",
        "--keys",
        path(&keys),
        "--msg",
        path(&msg),
        "--out",
        path(&sig),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(hex_len(&sig), 160);
    let verify = |m: &Path, s: &Path, extra: &[&str]| {
        let mut args = vec!["verify", "--keys", path(&keys), "--msg", path(m), "--sig", path(s)];
        args.extend_from_slice(extra);
        code(&tdvsig(&args))
    };
    assert_eq!(verify(&msg, &sig, &[]), 0);
    assert_eq!(verify(&other, &sig, &[]), 1);

    // Third-party check with a published receipt and no pair key.
    let out = tdvsig(&["receipt", "--keys", path(&keys), "--msg", path(&msg)]);
    let receipt = String::from_utf8(out.stdout).unwrap();
    let public = d.join("public");
    fs::create_dir(&public).unwrap();
    for f in ["pk.hex", "params.json"] {
        fs::copy(keys.join(f), public.join(f)).unwrap();
    }
    let pub_verify = |extra: &[&str]| {
        let mut args = vec![
            "verify",
            "--keys",
            path(&public),
            "--msg",
            path(&msg),
            "--sig",
            path(&sig),
        ];
        args.extend_from_slice(extra);
        code(&tdvsig(&args))
    };
    assert_eq!(pub_verify(&["--receipt", receipt.trim()]), 0);
    assert_eq!(pub_verify(&[]), 2);

    let truncated = d.join("truncated");
    let text = fs::read_to_string(&sig).unwrap();
    fs::write(&truncated, &text.trim()[..318]).unwrap();
    assert_eq!(verify(&msg, &truncated, &[]), 4);
    assert_eq!(verify(&msg, &d.join("missing"), &[]), 3);

    let forged = d.join("forged");
    let out = tdvsig(&[
        "--seed",
        SEED,
        "forge-dv",
        "--keys",
        path(&keys),
        "--msg",
        path(&other),
        "--out",
        path(&forged),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(verify(&other, &forged, &[]), 0);

    let weak = d.join("weak");
    let out = tdvsig(&[
        "--seed",
        SEED,
        "forge-public-r",
        "--keys",
        path(&public),
        "--msg",
        path(&other),
        "--out",
        path(&weak),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(verify(&other, &weak, &["--weakened"]), 0);
    assert_eq!(verify(&other, &weak, &[]), 1);

    let extract = |hint: &str| {
        tdvsig(&[
            "extract",
            "--keys",
            path(&keys),
            "--msg",
            path(&msg),
            "--sig",
            path(&sig),
            "--hint",
            hint,
        ])
    };
    let five = "0".repeat(63) + "5";
    assert_eq!(code(&extract(&format!("d:{}", "0".repeat(64)))), 5);
    assert_eq!(code(&extract("d:05")), 4);
    let out = extract(&format!("d:{five}"));
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["d"], five);
    assert_eq!(code(&extract(&format!("q:{five}"))), 2);
}

#[test]
fn sim3p_reports_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let run = |adv: &str, trials: &str, log: &str| {
        tdvsig(&[
            "--profile",
            "toy-251",
            "--seed",
            SEED,
            "sim3p",
            "--adversary",
            adv,
            "--trials",
            trials,
            "--out",
            path(&dir.path().join(log)),
        ])
    };
    let out = run("none", "200", "a");
    assert_eq!(code(&out), 0);
    let summary: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).lines().last().unwrap()).unwrap();
    assert_eq!(summary["z2_equals_x"], 200);
    assert_eq!(summary["z3_equals_x"], 200);

    let again = run("none", "200", "b");
    assert_eq!(again.stdout, out.stdout);
    let (a, b) = (
        fs::read(dir.path().join("a")).unwrap(),
        fs::read(dir.path().join("b")).unwrap(),
    );
    assert!(!a.is_empty());
    assert_eq!(a, b);

    let out = run("substitute-guess-k1", "100000", "c");
    let summary: serde_json::Value =
        serde_json::from_str(String::from_utf8(out.stdout).unwrap().lines().last().unwrap()).unwrap();
    let forgeries = summary["forgeries"].as_f64().unwrap();
    let mean = 1e5 / 251.0;
    assert!((forgeries - mean).abs() <= 4.0 * mean.sqrt(), "{forgeries}");

    assert_eq!(code(&run("guess-everything", "1", "d")), 6);
}

#[test]
fn stats_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("report.jsonl");
    let out = tdvsig(&[
        "--profile",
        "toy-251",
        "--seed",
        SEED,
        "stats",
        "--suite",
        "all",
        "--trials",
        "20000",
        "--out",
        path(&jsonl),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let lines = fs::read_to_string(&jsonl).unwrap();
    for line in lines.lines() {
        let row: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(row["verdict"], "pass", "{line}");
    }

    let out = tdvsig(&["--profile", "secure", "--seed", SEED, "stats", "--suite", "secrecy"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&tdvsig(&["stats", "--suite", "everything"])), 2);

    let out = tdvsig(&["--seed", SEED, "bench", "--iterations", "51"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for want in ["sk bytes        32", "pk bytes        64", "signature bytes 160"] {
        assert!(text.contains(want), "{text}");
    }
}
