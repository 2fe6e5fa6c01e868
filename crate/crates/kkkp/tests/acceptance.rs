//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kkkp::config::{AttackArg, EvePulseArg, EveShuffleArg, OutputFormat, RunConfig};
use kkkp::execute;
use kkkp_core::adversary::{EveStrategy, PulseChoice, ShuffleGuess};
use kkkp_core::analysis::{binomial_tolerance, estimate_qber, exact_qber, run_attack, Attack};
use kkkp_core::channel::{Message, Payload, PulseSlot};
use kkkp_core::protocol::{
    alice_encode_block, alice_forward, bob_apply_shuffle, bob_decode, random_angle, survivor_closed_form,
    AliceRoundSecrets, BobRoundSecrets, ProtocolVariant,
};
use kkkp_core::qubit::{Bit, PolarizationQubit};
use kkkp_core::rng::{Role, SeedStreams};
use kkkp_core::sidechannel::{count_detections, dark_port_click_probability, CoherentAmplitude};

const N: u64 = 100_000;
const SIGMAS: f64 = 5.0;
/// Stated half-width of the 5σ band around 1/4 at N = 10⁵.
const HEADLINE_BAND: f64 = 0.0069;
const MAX_HONEST_RUNTIME: Duration = Duration::from_secs(5);
const ANGLE_TOLERANCE: f64 = 1e-12;
const BITS: [Bit; 2] = [Bit::Zero, Bit::One];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn honest_completeness() -> Outcome {
    let mut notes = Vec::new();
    for variant in ProtocolVariant::ALL {
        for seed in [1u64, 0xDEAD_BEEF] {
            let start = Instant::now();
            let session = run_attack(variant, &Attack::None, N, seed).map_err(|e| e.to_string())?;
            let elapsed = start.elapsed();
            let report = estimate_qber(&session);
            if report.errors != 0 || !session.verified || session.alice_key != session.bob_key {
                return Err(format!("{variant:?} seed {seed}: errors={} verified={}", report.errors, session.verified));
            }
            if elapsed > MAX_HONEST_RUNTIME {
                return Err(format!("{variant:?} seed {seed}: took {elapsed:?}"));
            }
            notes.push(format!("{}:{:.2}s", variant.as_str(), elapsed.as_secs_f64()));
        }
    }
    Ok(format!("qber=0, keys equal, verified [{}]", notes.join(" ")))
}

fn attack_vs_modified() -> Outcome {
    for a in BITS {
        for b in BITS {
            for pulse in PulseChoice::ALL {
                let attack = Attack::Impersonation(EveStrategy {
                    shuffle_guess: ShuffleGuess::Fixed(a, b),
                    pulse_choice: pulse,
                    mimic_correlation: false,
                });
                let exact = exact_qber(ProtocolVariant::Modified, &attack);
                if exact.to_string() != "1/4" {
                    return Err(format!("oracle gave {exact} for {attack}"));
                }
            }
        }
    }
    let attack = Attack::Impersonation(EveStrategy::zhang());
    let report = estimate_qber(&run_attack(ProtocolVariant::Modified, &attack, N, 7).map_err(|e| e.to_string())?);
    let band = binomial_tolerance(0.25, N, SIGMAS);
    let deviation = (report.qber - 0.25).abs();
    check(
        band <= HEADLINE_BAND && deviation <= band && report.detected,
        format!("oracle 1/4 for 12 strategies; MC qber={:.5} (|Δ|={deviation:.5} ≤ {band:.5}); detected", report.qber),
        format!("MC qber={} band={band} detected={}", report.qber, report.detected),
    )
}

fn attack_vs_original() -> Outcome {
    let attack = Attack::Impersonation(EveStrategy::mimic());
    let exact = exact_qber(ProtocolVariant::Original, &attack);
    let session = run_attack(ProtocolVariant::Original, &attack, N, 11).map_err(|e| e.to_string())?;
    let report = estimate_qber(&session);
    check(
        *exact.numer() == 0 && report.errors == 0 && report.eve_key_accuracy == Some(1.0) && session.verified,
        "oracle 0; MC errors=0; eve accuracy=1.0; verified (undetected)".into(),
        format!("exact={exact} errors={} accuracy={:?} verified={}", report.errors, report.eve_key_accuracy, session.verified),
    )
}

fn survivor_closed_form_agreement() -> Outcome {
    let mut rng = SeedStreams::new(4).stream(0, Role::Auxiliary);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for k in BITS {
        for s1 in BITS {
            for s2 in BITS {
                for b in PulseSlot::BOTH {
                    for _ in 0..100 {
                        let alice = AliceRoundSecrets { theta1: random_angle(&mut rng), theta2: random_angle(&mut rng), k, b };
                        let bob = BobRoundSecrets::new(random_angle(&mut rng), s1, s2);
                        let pair = match alice_forward(0, &alice).payload {
                            Payload::ForwardPair(p) => p,
                            _ => unreachable!(),
                        };
                        let ret = Message::new(0, Payload::ReturnPair(bob_apply_shuffle(&pair, &bob).unwrap()));
                        let survivor = match alice_encode_block(ret, &alice).unwrap().payload {
                            Payload::Survivor(q) => q,
                            _ => unreachable!(),
                        };
                        let closed = survivor_closed_form(bob.phi, bob.shuffle(b), k, b).unwrap();
                        worst = worst.max(survivor.angle().distance(closed));
                        cases += 1;
                    }
                }
            }
        }
    }
    check(
        worst <= ANGLE_TOLERANCE,
        format!("{cases} cases, max deviation {worst:.2e} rad"),
        format!("max deviation {worst:e} rad"),
    )
}

fn beta_cancellation() -> Outcome {
    for s1 in BITS {
        let s2 = s1.flip();
        for l in BITS {
            let d1 = bob_decode(l, s1, s2, PulseSlot::First);
            let d2 = bob_decode(l, s1, s2, PulseSlot::Second);
            if d1 != d2 {
                return Err(format!("s1={s1} l={l}: {d1} vs {d2}"));
            }
        }
    }
    Ok("decoded bit independent of b for all (s1, l)".into())
}

fn beam_splitter() -> Outcome {
    let mut rng = SeedStreams::new(6).stream(0, Role::Auxiliary);
    let alpha = CoherentAmplitude::new(0.9, -0.4);
    let p_same = dark_port_click_probability(alpha, alpha);
    let clicks_same = count_detections(alpha, alpha, N, &mut rng);
    let one = CoherentAmplitude::real(1.0);
    let p = dark_port_click_probability(one, CoherentAmplitude::VACUUM);
    let expected = 1.0 - (-0.5f64).exp();
    let freq = count_detections(one, CoherentAmplitude::VACUUM, N, &mut rng) as f64 / N as f64;
    let band = binomial_tolerance(expected, N, SIGMAS);
    check(
        p_same == 0.0 && clicks_same == 0 && (p - expected).abs() < 1e-15 && (freq - expected).abs() <= band,
        format!("identical: p=0, 0 clicks; |a−b|²=1: freq={freq:.5} vs {expected:.5} (±{band:.5})"),
        format!("p_same={p_same} clicks={clicks_same} freq={freq} expected={expected}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("t{run}.jsonl"));
        let config = RunConfig {
            variant: ProtocolVariant::Modified,
            attack: AttackArg::Impersonation,
            eve_shuffle: EveShuffleArg::Random,
            eve_pulse: EvePulseArg::Random,
            rounds: 5_000,
            seed: 42,
            output_format: OutputFormat::Csv,
            transcript_path: Some(path.clone()),
        };
        let out = execute(&config).map_err(|e| e.to_string())?;
        let transcript = fs::read(&path).map_err(|e| e.to_string())?;
        outputs.push((out.rendered, transcript));
    }
    check(
        outputs[0] == outputs[1] && !outputs[0].1.is_empty(),
        format!("reports and transcripts ({} bytes) byte-identical", outputs[0].1.len()),
        "outputs differ between runs".into(),
    )
}

fn malus_statistics() -> Outcome {
    let mut rng = SeedStreams::new(8).stream(0, Role::Auxiliary);
    let mut notes = Vec::new();
    for theta in [0.0, FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8, FRAC_PI_2] {
        let q = PolarizationQubit::from_radians(theta).unwrap();
        let p = theta.sin().powi(2);
        let ones = (0..N).filter(|_| q.clone().measure_hv(&mut rng) == Bit::One).count();
        let freq = ones as f64 / N as f64;
        let band = binomial_tolerance(p, N, SIGMAS);
        if (freq - p).abs() > band + 1e-12 {
            return Err(format!("θ={theta}: freq={freq} expected {p} ± {band}"));
        }
        notes.push(format!("{freq:.4}"));
    }
    Ok(format!("frequencies [{}] within 5σ of sin²θ", notes.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 honest completeness", honest_completeness),
        ("2 attack vs modified = 1/4", attack_vs_modified),
        ("3 attack vs original = 0, key leaked", attack_vs_original),
        ("4 survivor closed form", survivor_closed_form_agreement),
        ("5 b-independent decoding (original)", beta_cancellation),
        ("6 beam-splitter check", beam_splitter),
        ("7 determinism", determinism),
        ("8 Malus statistics", malus_statistics),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
