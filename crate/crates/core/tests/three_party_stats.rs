//! Session-level statistics and exhaustive facts about the IC layer.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use tdvsig::attacks::{self, STRATEGIES};
use tdvsig::field::Field;
use tdvsig::keyed_hash;
use tdvsig::net_sim::{run_session, Parties, Role, Scheduling};
use tdvsig::stats_harness::{self as stats, Config};
use tdvsig::three_party::{self, Declaration, Holder, IcSetup, Signer, Verifier};
use tdvsig::two_party::{self, Signature};

fn within_sigmas(hits: u64, n: u64, q: f64, k: f64) -> bool {
    let mean = n as f64 * q;
    (hits as f64 - mean).abs() <= k * (mean * (1.0 - q)).sqrt()
}

#[test]
fn check_point_is_uniform_and_independent_of_x_at_5() {
    let f = Field::small(5);
    for x in f.elements() {
        let mut counts: HashMap<(u64, u64), u64> = HashMap::new();
        for k1 in f.elements() {
            for k2 in f.elements() {
                for xp in f.elements() {
                    for k2p in f.elements() {
                        let s = IcSetup::honest(x, k1, k2, xp, k2p);
                        *counts
                            .entry((s.x_prime.to_u64().unwrap(), s.sigma_prime.to_u64().unwrap()))
                            .or_default() += 1;
                    }
                }
            }
        }
        assert_eq!(counts.len(), 25);
        assert!(counts.values().all(|&c| c == 25), "x = {x:?}");
    }
}

#[test]
fn inconsistent_setup_passes_p3_check_at_rate_one_over_p() {
    let cfg = Config::new(Field::small(251), 100_000, [3; 32]);
    let keys = cfg.keys();
    let mut passed = 0;
    for i in 0..cfg.trials {
        let parties = Parties::new(
            Signer::new(keys.clone(), i.to_le_bytes().to_vec()),
            Holder::new(),
            Verifier::new(),
        );
        let mut adv = attacks::by_name("inconsistent-line").unwrap();
        let s = run_session(parties, adv.as_mut(), &cfg.trial_seed(i), Scheduling::Rushing).unwrap();
        passed += u64::from(s.outcome.verdicts.contains(&(Role::P3, Declaration::Accept)));
    }
    assert!(within_sigmas(passed, cfg.trials, 1.0 / 251.0, 4.0), "{passed}");
}

#[test]
fn perturbed_signature_fails_interpretation() {
    let f = Field::small(251);
    let keys = Config::new(f, 1, [4; 32]).keys();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let n = 100_000u64;
    let mut rejected = 0;
    for i in 0..n {
        let msg = i.to_le_bytes();
        let (sig, _) = two_party::sign(&keys, &msg, &mut rng);
        let x = keyed_hash::ic_value(&msg, &sig.to_bytes(), f);
        let mut c = sig.components();
        c[rng.gen_range(0..5)] += f.sample_unit(&mut rng);
        let bad = Signature::from_components(c);
        rejected +=
            u64::from(three_party::interpret_value(&keys.pk, Some(&keys.k_sig), None, &msg, &bad, x) == Ok(false));
    }
    assert!(rejected as f64 >= n as f64 * (1.0 - 3.0 / 251.0), "{rejected}");
}

#[test]
fn session_correctness_at_13() {
    let cfg = Config::new(Field::small(13), 100_000, [5; 32]);
    let e = stats::estimate_correctness(&cfg).unwrap();
    assert!(e.band_contains_target(), "{e:?}");
}

#[test]
fn every_strategy_reaches_a_resolution() {
    let cfg = Config::new(Field::small(13), 200, [6; 32]);
    let keys = cfg.keys();
    for info in STRATEGIES {
        for sched in [Scheduling::Rushing, Scheduling::Lockstep] {
            for i in 0..cfg.trials {
                let parties = Parties::new(Signer::new(keys.clone(), vec![i as u8]), Holder::new(), Verifier::new());
                let mut adv = attacks::by_name(info.name).unwrap();
                let o = run_session(parties, adv.as_mut(), &cfg.trial_seed(i), sched)
                    .unwrap()
                    .outcome;
                assert!(o.resolution.is_some(), "{} {sched:?}", info.name);
                // Only the line-shifting signer can leave P2 holding a value P3 refuses.
                if info.name != "inconsistent-line" {
                    assert_eq!(o.z2, Some(o.x), "{}", info.name);
                }
            }
        }
    }
}
