//! Error-rate estimation and the exact enumeration oracle.
//!
//! The oracle works over bits only. Every angle the protocol produces is an
//! offset of `±π/4 ± π/4` from a known reference, so each H/V measurement
//! collapses to one rule: equal signs give `±π/2` (outcome 1), opposite
//! signs give `0` (outcome 0). The simulator works over floating-point
//! angles, and comparing the two is the main cross-check.

use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::adversary::{EveStrategy, ImpersonationTap};
use crate::channel::{IdentityTap, PulseSlot, QubitPair};
use crate::protocol::{
    bob_apply_shuffle, bob_decode, run_session, AliceRoundSecrets, BobRoundSecrets, ProtocolError, ProtocolVariant,
    SessionResult,
};
use crate::qubit::{Angle, Bit, PolarizationQubit, QubitError};

/// Smallest session the Monte Carlo comparison accepts.
pub const MIN_MONTE_CARLO_ROUNDS: u64 = 10_000;

/// Width of the acceptance band, in binomial standard deviations.
pub const TOLERANCE_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attack {
    None,
    Impersonation(EveStrategy),
}

impl Attack {
    pub fn strategy(&self) -> Option<&EveStrategy> {
        match self {
            Attack::None => None,
            Attack::Impersonation(s) => Some(s),
        }
    }
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attack::None => f.write_str("none"),
            Attack::Impersonation(s) => write!(f, "impersonation/{s}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Qubit(#[from] QubitError),
    #[error("angle {0} reached a measurement without being an H/V eigenstate")]
    NotEigenstate(Angle),
    #[error("Monte Carlo comparison needs at least {MIN_MONTE_CARLO_ROUNDS} rounds, got {0}")]
    TooFewRounds(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QberReport {
    pub variant: ProtocolVariant,
    /// Set by [`QberReport::with_oracle`].
    pub attack: Option<Attack>,
    pub rounds: u64,
    pub errors: u64,
    pub qber: f64,
    pub exact_qber: Option<Ratio<u64>>,
    /// Fraction of rounds where the eavesdropper's guess equals Alice's bit.
    /// `None` when no tap guessed.
    pub eve_key_accuracy: Option<f64>,
    /// The digest comparison failed.
    pub detected: bool,
}

impl QberReport {
    /// Records the attack and fills in the oracle's exact error rate.
    pub fn with_oracle(mut self, attack: Attack) -> Self {
        self.exact_qber = Some(exact_qber(self.variant, &attack));
        self.attack = Some(attack);
        self
    }
}

/// Per-round Hamming distance between the two keys.
pub fn estimate_qber(session: &SessionResult) -> QberReport {
    let rounds = session.alice_key.len() as u64;
    let errors = session
        .alice_key
        .iter()
        .zip(&session.bob_key)
        .filter(|(a, b)| a != b)
        .count() as u64;
    let guesses: Vec<bool> = session
        .transcripts
        .iter()
        .filter_map(|t| t.eve_key_guess.map(|g| g == t.alice.k))
        .collect();
    let eve_key_accuracy = if guesses.is_empty() {
        None
    } else {
        Some(guesses.iter().filter(|&&c| c).count() as f64 / guesses.len() as f64)
    };
    QberReport {
        variant: session.variant,
        attack: None,
        rounds,
        errors,
        qber: if rounds == 0 { 0.0 } else { errors as f64 / rounds as f64 },
        exact_qber: None,
        eve_key_accuracy,
        detected: !session.verified,
    }
}

/// Runs a session with the tap `attack` calls for.
pub fn run_attack(
    variant: ProtocolVariant,
    attack: &Attack,
    rounds: u64,
    seed: u64,
) -> Result<SessionResult, ProtocolError> {
    match attack {
        Attack::None => run_session(variant, rounds, &mut IdentityTap, seed),
        Attack::Impersonation(strategy) => run_session(variant, rounds, &mut ImpersonationTap::new(*strategy), seed),
    }
}

/// H/V outcome of `(−1)^a π/4 + (−1)^b π/4` relative to the measurement frame.
fn hv_outcome(a: Bit, b: Bit) -> Bit {
    a ^ b ^ Bit::One
}

/// Counts over the oracle's hidden-parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleTally {
    pub assignments: u64,
    pub bob_errors: u64,
    pub eve_correct: u64,
}

impl OracleTally {
    pub fn error_rate(&self) -> Ratio<u64> {
        Ratio::new(self.bob_errors, self.assignments)
    }

    pub fn eve_accuracy(&self) -> Ratio<u64> {
        Ratio::new(self.eve_correct, self.assignments)
    }
}

/// One equally likely point of the discrete hidden-parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HiddenAssignment {
    pub k: Bit,
    pub b: PulseSlot,
    pub s1: Bit,
    pub s2: Bit,
    /// Eve's `(s′₁, s′₂)` and pulse, when attacking.
    pub eve: Option<((Bit, Bit), PulseSlot)>,
}

/// All equally likely assignments of `(s₁, s₂, k, b)` and Eve's random choices.
pub fn hidden_assignments(variant: ProtocolVariant, attack: &Attack) -> Vec<HiddenAssignment> {
    const BITS: [Bit; 2] = [Bit::Zero, Bit::One];
    let eve_options: Vec<Option<((Bit, Bit), PulseSlot)>> = match attack {
        Attack::None => alloc::vec![None],
        Attack::Impersonation(strategy) => strategy
            .shuffle_options()
            .into_iter()
            .flat_map(|g| strategy.pulse_choice.options().iter().map(move |&p| Some((g, p))))
            .collect(),
    };
    let mut out = Vec::new();
    for s1 in BITS {
        let s2_options: &[Bit] = match variant {
            ProtocolVariant::Original => &[Bit::Zero],
            ProtocolVariant::Modified => &BITS,
        };
        for &draw in s2_options {
            let s2 = variant.second_shuffle(s1, draw);
            for k in BITS {
                for b in PulseSlot::BOTH {
                    for &eve in &eve_options {
                        out.push(HiddenAssignment { k, b, s1, s2, eve });
                    }
                }
            }
        }
    }
    out
}

fn pick(pair: (Bit, Bit), slot: PulseSlot) -> Bit {
    match slot {
        PulseSlot::First => pair.0,
        PulseSlot::Second => pair.1,
    }
}

/// XOR-algebra evaluation of one assignment: (Bob's decoded key, Eve's guess).
fn evaluate_bits(a: &HiddenAssignment) -> (Bit, Option<Bit>) {
    let beta = a.b.bit_value();
    let s = (a.s1, a.s2);
    let survivor_sign = a.k ^ beta ^ Bit::One;
    match a.eve {
        None => {
            let l = hv_outcome(pick(s, a.b), survivor_sign);
            (bob_decode(l, a.s1, a.s2, a.b), None)
        }
        Some((guess, pulse)) => {
            let prekey = hv_outcome(pick(guess, a.b), survivor_sign);
            let e = prekey ^ pick(guess, pulse);
            let l = hv_outcome(pick(s, pulse), e.flip());
            let eve_k = prekey ^ pick(guess, a.b) ^ beta;
            (bob_decode(l, a.s1, a.s2, a.b), Some(eve_k))
        }
    }
}

pub fn oracle_tally(variant: ProtocolVariant, attack: &Attack) -> OracleTally {
    let mut tally = OracleTally::default();
    for a in hidden_assignments(variant, attack) {
        let (k_bob, eve_k) = evaluate_bits(&a);
        tally.assignments += 1;
        tally.bob_errors += u64::from(k_bob != a.k);
        tally.eve_correct += u64::from(eve_k == Some(a.k));
    }
    tally
}

/// Exact attack-induced error rate as a reduced fraction.
pub fn exact_qber(variant: ProtocolVariant, attack: &Attack) -> Ratio<u64> {
    oracle_tally(variant, attack).error_rate()
}

/// Continuous angles for the angle-tracking enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSample {
    pub theta1: Angle,
    pub theta2: Angle,
    pub phi: Angle,
    /// Eve's decoy angles.
    pub theta_prime: (Angle, Angle),
}

fn eigen(q: &PolarizationQubit) -> Result<Bit, AnalysisError> {
    q.eigen_outcome().ok_or(AnalysisError::NotEigenstate(q.angle()))
}

/// Propagates the actual rotations for one assignment; every measurement
/// must land on an eigenstate.
fn evaluate_angles(a: &HiddenAssignment, sample: &AngleSample) -> Result<Bit, AnalysisError> {
    let alice = AliceRoundSecrets { theta1: sample.theta1, theta2: sample.theta2, k: a.k, b: a.b };
    let bob = BobRoundSecrets::new(sample.phi, a.s1, a.s2);
    let (enc1, enc2) = alice.encoding_rotations();
    let originals = QubitPair::new(PolarizationQubit::new(sample.theta1), PolarizationQubit::new(sample.theta2));
    let to_bob = match a.eve {
        None => {
            let back = bob_apply_shuffle(&originals, &bob)?;
            back.rotate(enc1, enc2)?.into_slot(a.b)
        }
        Some((guess, pulse)) => {
            let (t1, t2) = sample.theta_prime;
            let decoy = QubitPair::new(PolarizationQubit::new(t1), PolarizationQubit::new(t2));
            let e2 = bob_apply_shuffle(&decoy, &bob)?.rotate(-t1.radians(), -t2.radians())?;
            let e1_shuffled = originals.rotate(guess.0.quarter_turn(), guess.1.quarter_turn())?;
            let seen = e1_shuffled.rotate(enc1, enc2)?.into_slot(a.b);
            let prekey = eigen(&seen)?;
            let e = prekey ^ pick(guess, pulse);
            e2.get(pulse).rotate(e.flip().quarter_turn())?
        }
    };
    let l = eigen(&to_bob.rotate(-sample.phi.radians())?)?;
    Ok(bob_decode(l, a.s1, a.s2, a.b))
}

/// The same enumeration as [`exact_qber`], but pushing real angles through
/// every rotation for each sample. Angles cancel, so the result must not
/// depend on the samples.
pub fn exact_qber_with_angles(
    variant: ProtocolVariant,
    attack: &Attack,
    samples: &[AngleSample],
) -> Result<Ratio<u64>, AnalysisError> {
    let assignments = hidden_assignments(variant, attack);
    let mut errors = 0u64;
    let mut total = 0u64;
    for sample in samples {
        for a in &assignments {
            errors += u64::from(evaluate_angles(a, sample)? != a.k);
            total += 1;
        }
    }
    Ok(Ratio::new(errors, total.max(1)))
}

/// `sigmas · sqrt(p(1−p)/n)`.
pub fn binomial_tolerance(p: f64, n: u64, sigmas: f64) -> f64 {
    sigmas * libm::sqrt(p * (1.0 - p) / n as f64)
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloCheck {
    pub report: QberReport,
    pub exact: Ratio<u64>,
    pub tolerance: f64,
    pub matches: bool,
}

/// Simulates `rounds` rounds and checks the estimate lies within 5σ of the oracle.
pub fn montecarlo_matches_oracle(
    variant: ProtocolVariant,
    attack: &Attack,
    rounds: u64,
    seed: u64,
) -> Result<MonteCarloCheck, AnalysisError> {
    if rounds < MIN_MONTE_CARLO_ROUNDS {
        return Err(AnalysisError::TooFewRounds(rounds));
    }
    let session = run_attack(variant, attack, rounds, seed)?;
    let report = estimate_qber(&session).with_oracle(*attack);
    let exact = report.exact_qber.unwrap_or_default();
    let p = ratio_to_f64(exact);
    let tolerance = binomial_tolerance(p, rounds, TOLERANCE_SIGMAS);
    let matches = libm::fabs(report.qber - p) <= tolerance;
    Ok(MonteCarloCheck { report, exact, tolerance, matches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::adversary::{PulseChoice, ShuffleGuess};
    use crate::protocol::random_angle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BITS: [Bit; 2] = [Bit::Zero, Bit::One];

    fn fixed(a: Bit, b: Bit, pulse: PulseChoice) -> Attack {
        Attack::Impersonation(EveStrategy {
            shuffle_guess: ShuffleGuess::Fixed(a, b),
            pulse_choice: pulse,
            mimic_correlation: false,
        })
    }

    fn samples(n: usize, seed: u64) -> Vec<AngleSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| AngleSample {
                theta1: random_angle(&mut rng),
                theta2: random_angle(&mut rng),
                phi: random_angle(&mut rng),
                theta_prime: (random_angle(&mut rng), random_angle(&mut rng)),
            })
            .collect()
    }

    #[test]
    fn oracle_headline_values() {
        assert_eq!(exact_qber(ProtocolVariant::Modified, &Attack::Impersonation(EveStrategy::zhang())), Ratio::new(1, 4));
        assert_eq!(exact_qber(ProtocolVariant::Original, &Attack::Impersonation(EveStrategy::mimic())), Ratio::from(0));
        assert_eq!(exact_qber(ProtocolVariant::Modified, &Attack::None), Ratio::from(0));
        assert_eq!(exact_qber(ProtocolVariant::Original, &Attack::None), Ratio::from(0));
    }

    #[test]
    fn modified_rate_is_a_quarter_for_every_guess_and_policy() {
        for a in BITS {
            for b in BITS {
                for pulse in PulseChoice::ALL {
                    assert_eq!(exact_qber(ProtocolVariant::Modified, &fixed(a, b, pulse)), Ratio::new(1, 4));
                }
            }
        }
        let random = Attack::Impersonation(EveStrategy {
            shuffle_guess: ShuffleGuess::RandomPerRound,
            pulse_choice: PulseChoice::RandomPerRound,
            mimic_correlation: false,
        });
        assert_eq!(exact_qber(ProtocolVariant::Modified, &random), Ratio::new(1, 4));
        for pulse in PulseChoice::ALL {
            let mimic = Attack::Impersonation(EveStrategy::mimic().with_pulse(pulse));
            assert_eq!(exact_qber(ProtocolVariant::Modified, &mimic), Ratio::new(1, 4));
            assert_eq!(exact_qber(ProtocolVariant::Original, &mimic), Ratio::from(0));
        }
    }

    #[test]
    fn eve_always_learns_the_key() {
        for variant in ProtocolVariant::ALL {
            for attack in [Attack::Impersonation(EveStrategy::zhang()), Attack::Impersonation(EveStrategy::mimic())] {
                let t = oracle_tally(variant, &attack);
                assert_eq!(t.eve_accuracy(), Ratio::from(1));
            }
        }
        assert_eq!(oracle_tally(ProtocolVariant::Original, &Attack::None).eve_correct, 0);
    }

    #[test]
    fn assignment_counts() {
        assert_eq!(hidden_assignments(ProtocolVariant::Modified, &Attack::None).len(), 16);
        assert_eq!(hidden_assignments(ProtocolVariant::Original, &Attack::None).len(), 8);
        let random = Attack::Impersonation(EveStrategy {
            shuffle_guess: ShuffleGuess::RandomPerRound,
            pulse_choice: PulseChoice::RandomPerRound,
            mimic_correlation: false,
        });
        assert_eq!(hidden_assignments(ProtocolVariant::Modified, &random).len(), 16 * 8);
    }

    #[test]
    fn angles_cancel_in_the_oracle() {
        let s = samples(50, 9);
        let mut attacks = alloc::vec![Attack::None, Attack::Impersonation(EveStrategy::mimic())];
        for a in BITS {
            for b in BITS {
                for p in PulseChoice::ALL {
                    attacks.push(fixed(a, b, p));
                }
            }
        }
        for variant in ProtocolVariant::ALL {
            for attack in &attacks {
                assert_eq!(
                    exact_qber_with_angles(variant, attack, &s).unwrap(),
                    exact_qber(variant, attack),
                    "{variant:?} {attack}"
                );
            }
        }
    }

    #[test]
    fn binomial_band() {
        let t = binomial_tolerance(0.25, 100_000, 5.0);
        assert!((t - 0.0068465).abs() < 1e-6);
        assert_eq!(binomial_tolerance(0.0, 10, 5.0), 0.0);
    }

    #[test]
    fn monte_carlo_needs_enough_rounds() {
        assert!(matches!(
            montecarlo_matches_oracle(ProtocolVariant::Modified, &Attack::None, 10, 0),
            Err(AnalysisError::TooFewRounds(10))
        ));
    }

    #[test]
    fn honest_estimate() {
        let c = montecarlo_matches_oracle(ProtocolVariant::Modified, &Attack::None, 10_000, 3).unwrap();
        assert!(c.matches);
        assert_eq!(c.report.errors, 0);
        assert!(!c.report.detected);
        assert_eq!(c.report.eve_key_accuracy, None);
    }

    #[test]
    fn labels() {
        assert_eq!(Attack::None.to_string(), "none");
        assert_eq!(Attack::Impersonation(EveStrategy::zhang()).to_string(), "impersonation/00/first");
    }
}
