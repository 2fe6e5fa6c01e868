//! Exhaustive and randomized checks of the protocol algebra.

use std::f64::consts::{FRAC_PI_2, PI};

use kkkp_core::adversary::{EveStrategy, ImpersonationTap, PulseChoice, ShuffleGuess};
use kkkp_core::analysis::{estimate_qber, exact_qber, run_attack, Attack};
use kkkp_core::channel::{IdentityTap, Message, Payload, PulseSlot, QubitPair};
use kkkp_core::protocol::{
    alice_encode_block, alice_forward, bob_apply_shuffle, bob_decode, bob_measure, random_angle, run_session,
    survivor_closed_form, AliceRoundSecrets, BobRoundSecrets, ProtocolVariant,
};
use kkkp_core::qubit::{canonicalize, Angle, Bit, PolarizationQubit};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BITS: [Bit; 2] = [Bit::Zero, Bit::One];

/// All 16 (k, s₁, s₂, b) assignments.
fn discrete() -> Vec<(Bit, Bit, Bit, PulseSlot)> {
    let mut out = Vec::new();
    for k in BITS {
        for s1 in BITS {
            for s2 in BITS {
                for b in PulseSlot::BOTH {
                    out.push((k, s1, s2, b));
                }
            }
        }
    }
    out
}

fn survivor_of(alice: &AliceRoundSecrets, bob: &BobRoundSecrets) -> PolarizationQubit {
    let pair = match alice_forward(0, alice).payload {
        Payload::ForwardPair(p) => p,
        _ => unreachable!(),
    };
    let ret = Message::new(0, Payload::ReturnPair(bob_apply_shuffle(&pair, bob).unwrap()));
    match alice_encode_block(ret, alice).unwrap().payload {
        Payload::Survivor(q) => q,
        _ => unreachable!(),
    }
}

#[test]
fn honest_completeness_all_assignments() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (k, s1, s2, b) in discrete() {
        for _ in 0..100 {
            let alice = AliceRoundSecrets { theta1: random_angle(&mut rng), theta2: random_angle(&mut rng), k, b };
            let mut bob = BobRoundSecrets::new(random_angle(&mut rng), s1, s2);
            let survivor = survivor_of(&alice, &bob);

            let frame = survivor.rotate(-bob.phi.radians()).unwrap();
            let a = frame.angle();
            assert!(a.approx_eq(Angle::ZERO, 1e-9) || a.approx_eq(canonicalize(FRAC_PI_2).unwrap(), 1e-9));

            let l = bob_measure(Message::new(0, Payload::Survivor(survivor)), &mut bob, &mut rng).unwrap();
            let s_b = if b == PulseSlot::First { s1 } else { s2 };
            assert_eq!(l, s_b ^ k ^ b.bit_value());
            assert_eq!(bob_decode(l, s1, s2, b), k);
        }
    }
}

#[test]
fn step_by_step_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (k, s1, s2, b) in discrete() {
        for _ in 0..100 {
            let alice = AliceRoundSecrets { theta1: random_angle(&mut rng), theta2: random_angle(&mut rng), k, b };
            let bob = BobRoundSecrets::new(random_angle(&mut rng), s1, s2);
            let s_b = bob.shuffle(b);
            let closed = survivor_closed_form(bob.phi, s_b, k, b).unwrap();
            assert!(survivor_of(&alice, &bob).angle().approx_eq(closed, 1e-12));
        }
    }
}

#[test]
fn original_decoding_ignores_the_blocking_factor() {
    for s1 in BITS {
        let s2 = ProtocolVariant::Original.second_shuffle(s1, Bit::Zero);
        for l in BITS {
            let first = bob_decode(l, s1, s2, PulseSlot::First);
            let second = bob_decode(l, s1, s2, PulseSlot::Second);
            assert_eq!(first, second);
            assert_eq!(first, s1 ^ l ^ Bit::One);
        }
    }
}

#[test]
fn honest_sessions_are_deterministic() {
    for variant in ProtocolVariant::ALL {
        let a = run_session(variant, 500, &mut IdentityTap, 99).unwrap();
        let b = run_session(variant, 500, &mut IdentityTap, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.verified);
    }
}

#[test]
fn honest_parties_draw_the_same_secrets_under_attack() {
    let honest = run_session(ProtocolVariant::Modified, 200, &mut IdentityTap, 5).unwrap();
    let mut eve = ImpersonationTap::new(EveStrategy::zhang());
    let attacked = run_session(ProtocolVariant::Modified, 200, &mut eve, 5).unwrap();
    for (h, a) in honest.transcripts.iter().zip(&attacked.transcripts) {
        assert_eq!(h.alice, a.alice);
        assert_eq!(h.bob.phi, a.bob.phi);
        assert_eq!((h.bob.s1, h.bob.s2), (a.bob.s1, a.bob.s2));
    }
}

#[test]
fn eve_stores_ground_truth() {
    let mut eve = ImpersonationTap::new(EveStrategy::zhang());
    let session = run_session(ProtocolVariant::Modified, 300, &mut eve, 12).unwrap();
    for t in &session.transcripts {
        let state = eve.round(t.round_id).unwrap();
        let e1 = state.e1.as_ref().unwrap();
        assert_eq!(e1.first.angle(), t.alice.theta1);
        assert_eq!(e1.second.angle(), t.alice.theta2);
        let e2: &QubitPair = state.e2.as_ref().unwrap();
        for slot in PulseSlot::BOTH {
            let expected = canonicalize(t.bob.phi.radians() + t.bob.shuffle(slot).quarter_turn()).unwrap();
            assert!(e2.get(slot).angle().approx_eq(expected, 1e-9));
        }
        assert_eq!(t.eve_key_guess, Some(t.alice.k));
    }
}

fn strategy_from(shuffle: u8, pulse: u8, mimic: bool) -> EveStrategy {
    let shuffle_guess = match shuffle {
        4 => ShuffleGuess::RandomPerRound,
        n => ShuffleGuess::Fixed(Bit::from(n & 2 != 0), Bit::from(n & 1 != 0)),
    };
    EveStrategy { shuffle_guess, pulse_choice: PulseChoice::ALL[pulse as usize], mimic_correlation: mimic }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // A session with zero error rate in the oracle never errs in simulation,
    // and a session that errs is always caught by the digest comparison.
    #[test]
    fn simulation_respects_the_oracle(
        shuffle in 0u8..5,
        pulse in 0u8..3,
        mimic: bool,
        original: bool,
        seed: u64,
    ) {
        let variant = if original { ProtocolVariant::Original } else { ProtocolVariant::Modified };
        let attack = Attack::Impersonation(strategy_from(shuffle, pulse, mimic));
        let report = estimate_qber(&run_attack(variant, &attack, 400, seed).unwrap());
        let exact = exact_qber(variant, &attack);
        if *exact.numer() == 0 {
            prop_assert_eq!(report.errors, 0);
        }
        prop_assert_eq!(report.detected, report.errors > 0);
        prop_assert_eq!(report.eve_key_accuracy, Some(1.0));
    }

    #[test]
    fn honest_rounds_decode(k: bool, s1: bool, s2: bool, first: bool, t1 in 0.0f64..PI, t2 in 0.0f64..PI, phi in 0.0f64..PI) {
        let b = if first { PulseSlot::First } else { PulseSlot::Second };
        let alice = AliceRoundSecrets { theta1: Angle::new(t1).unwrap(), theta2: Angle::new(t2).unwrap(), k: k.into(), b };
        let mut bob = BobRoundSecrets::new(Angle::new(phi).unwrap(), s1.into(), s2.into());
        let survivor = survivor_of(&alice, &bob);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = bob_measure(Message::new(0, Payload::Survivor(survivor)), &mut bob, &mut rng).unwrap();
        prop_assert_eq!(bob_decode(l, bob.s1, bob.s2, b), alice.k);
    }
}
