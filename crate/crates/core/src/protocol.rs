//! Honest Alice and Bob for both protocol variants.
//!
//! One round is three quantum legs:
//!
//! 1. Alice sends `|θ₁⟩ ⊗ |θ₂⟩` with private random angles.
//! 2. Bob rotates slot `i` by `φ + (−1)^{sᵢ}π/4` and returns the pair.
//! 3. Alice rotates slot 1 by `−θ₁ + (−1)^k π/4` and slot 2 by
//!    `−θ₂ + (−1)^{k⊕1} π/4`, blocks one slot and forwards the survivor.
//!
//! Bob undoes `φ` and measures H/V, obtaining `l = s_b ⊕ k ⊕ β`. After all
//! rounds Alice announces every blocking factor, Bob decodes
//! `k = s_b ⊕ l ⊕ β`, and the two sides compare key digests.
//!
//! `β` is the blocking factor as a bit: first pulse = 1, second pulse = 0.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, RngCore};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::channel::{Channel, ChannelError, ChannelTap, Message, MessageKind, Party, Payload, PulseSlot, QubitPair};
use crate::qubit::{canonicalize, Angle, Bit, PolarizationQubit, QubitError};
use crate::rng::{Role, SeedStreams, MAX_ROUND_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolVariant {
    /// Bob's two shuffling factors are `(s, s⊕1)`.
    Original,
    /// Bob's two shuffling factors are independent.
    Modified,
}

impl ProtocolVariant {
    pub const ALL: [ProtocolVariant; 2] = [ProtocolVariant::Original, ProtocolVariant::Modified];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolVariant::Original => "original",
            ProtocolVariant::Modified => "modified",
        }
    }

    /// Bob's second shuffling factor given the first and an independent draw.
    pub fn second_shuffle(self, s1: Bit, independent: Bit) -> Bit {
        match self {
            ProtocolVariant::Original => s1.flip(),
            ProtocolVariant::Modified => independent,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Qubit(#[from] QubitError),
    #[error("expected a {expected} message, received {got}")]
    UnexpectedMessage { expected: MessageKind, got: MessageKind },
    #[error("round {0} has no measurement outcome to decode")]
    MissingOutcome(u64),
    #[error("a session needs between 1 and {max} rounds, got {got}")]
    InvalidRoundCount { got: u64, max: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliceRoundSecrets {
    pub theta1: Angle,
    pub theta2: Angle,
    /// Key bit.
    pub k: Bit,
    /// Which pulse survives the blocking.
    pub b: PulseSlot,
}

impl AliceRoundSecrets {
    pub fn theta(&self, slot: PulseSlot) -> Angle {
        match slot {
            PulseSlot::First => self.theta1,
            PulseSlot::Second => self.theta2,
        }
    }

    /// Alice's rotation on each slot in the third leg.
    pub fn encoding_rotations(&self) -> (f64, f64) {
        (
            -self.theta1.radians() + self.k.quarter_turn(),
            -self.theta2.radians() + self.k.flip().quarter_turn(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BobRoundSecrets {
    pub phi: Angle,
    pub s1: Bit,
    pub s2: Bit,
    /// Raw H/V outcome `l`, set once the survivor is measured.
    pub raw_outcome: Option<Bit>,
}

impl BobRoundSecrets {
    pub fn new(phi: Angle, s1: Bit, s2: Bit) -> Self {
        Self { phi, s1, s2, raw_outcome: None }
    }

    pub fn shuffle(&self, slot: PulseSlot) -> Bit {
        match slot {
            PulseSlot::First => self.s1,
            PulseSlot::Second => self.s2,
        }
    }

    pub fn shuffle_rotations(&self) -> (f64, f64) {
        (
            self.phi.radians() + self.s1.quarter_turn(),
            self.phi.radians() + self.s2.quarter_turn(),
        )
    }
}

/// Uniform angle on `[0, π)`.
pub fn random_angle<R: RngCore + ?Sized>(rng: &mut R) -> Angle {
    // x < 1 so x·π < π, canonicalize only guards the rounding edge
    canonicalize(rng.random::<f64>() * PI).unwrap_or(Angle::ZERO)
}

pub fn random_slot<R: RngCore + ?Sized>(rng: &mut R) -> PulseSlot {
    PulseSlot::from_bit(Bit::random(rng))
}

fn expect_pair(msg: Message, expected: MessageKind) -> Result<QubitPair, ProtocolError> {
    let got = msg.kind();
    match msg.payload {
        Payload::ForwardPair(p) if expected == MessageKind::ForwardPair => Ok(p),
        Payload::ReturnPair(p) if expected == MessageKind::ReturnPair => Ok(p),
        _ => Err(ProtocolError::UnexpectedMessage { expected, got }),
    }
}

fn expect_survivor(msg: Message) -> Result<PolarizationQubit, ProtocolError> {
    match msg.payload {
        Payload::Survivor(q) => Ok(q),
        _ => Err(ProtocolError::UnexpectedMessage { expected: MessageKind::Survivor, got: msg.kind() }),
    }
}

/// Draws Alice's round secrets and builds the first-leg message.
pub fn alice_prepare<R: RngCore + ?Sized>(round_id: u64, rng: &mut R) -> (Message, AliceRoundSecrets) {
    let theta1 = random_angle(rng);
    let theta2 = random_angle(rng);
    let k = Bit::random(rng);
    let b = random_slot(rng);
    let secrets = AliceRoundSecrets { theta1, theta2, k, b };
    (alice_forward(round_id, &secrets), secrets)
}

pub fn alice_forward(round_id: u64, secrets: &AliceRoundSecrets) -> Message {
    let pair = QubitPair::new(
        PolarizationQubit::new(secrets.theta1),
        PolarizationQubit::new(secrets.theta2),
    );
    Message::new(round_id, Payload::ForwardPair(pair))
}

pub fn bob_draw_secrets<R: RngCore + ?Sized>(variant: ProtocolVariant, rng: &mut R) -> BobRoundSecrets {
    let phi = random_angle(rng);
    let s1 = Bit::random(rng);
    let s2 = match variant {
        ProtocolVariant::Original => s1.flip(),
        ProtocolVariant::Modified => Bit::random(rng),
    };
    BobRoundSecrets::new(phi, s1, s2)
}

pub fn bob_apply_shuffle(pair: &QubitPair, secrets: &BobRoundSecrets) -> Result<QubitPair, QubitError> {
    let (r1, r2) = secrets.shuffle_rotations();
    pair.rotate(r1, r2)
}

/// Bob's second-leg step: draw `φ, s₁, s₂` and shuffle the received pair.
pub fn bob_shuffle<R: RngCore + ?Sized>(
    msg: Message,
    variant: ProtocolVariant,
    rng: &mut R,
) -> Result<(Message, BobRoundSecrets), ProtocolError> {
    let round_id = msg.round_id;
    let pair = expect_pair(msg, MessageKind::ForwardPair)?;
    let secrets = bob_draw_secrets(variant, rng);
    let shuffled = bob_apply_shuffle(&pair, &secrets)?;
    Ok((Message::new(round_id, Payload::ReturnPair(shuffled)), secrets))
}

/// Alice's third-leg step: undo her angles, encode `k`, block all but slot `b`.
pub fn alice_encode_block(msg: Message, secrets: &AliceRoundSecrets) -> Result<Message, ProtocolError> {
    let round_id = msg.round_id;
    let pair = expect_pair(msg, MessageKind::ReturnPair)?;
    let (r1, r2) = secrets.encoding_rotations();
    let survivor = pair.rotate(r1, r2)?.into_slot(secrets.b);
    Ok(Message::new(round_id, Payload::Survivor(survivor)))
}

/// Closed form of the honest survivor: `φ + (−1)^{s_b}π/4 + (−1)^{k⊕β⊕1}π/4`.
pub fn survivor_closed_form(phi: Angle, s_b: Bit, k: Bit, b: PulseSlot) -> Result<Angle, QubitError> {
    canonicalize(phi.radians() + s_b.quarter_turn() + (k ^ b.bit_value() ^ Bit::One).quarter_turn())
}

/// Bob undoes `φ` and measures. The outcome is stored as `raw_outcome`.
pub fn bob_measure<R: RngCore + ?Sized>(
    msg: Message,
    secrets: &mut BobRoundSecrets,
    rng: &mut R,
) -> Result<Bit, ProtocolError> {
    let survivor = expect_survivor(msg)?;
    let l = survivor.rotate(-secrets.phi.radians())?.measure_hv(rng);
    secrets.raw_outcome = Some(l);
    Ok(l)
}

/// `k = s_b ⊕ l ⊕ β`.
pub fn bob_decode(l: Bit, s1: Bit, s2: Bit, announced_b: PulseSlot) -> Bit {
    let s_b = match announced_b {
        PulseSlot::First => s1,
        PulseSlot::Second => s2,
    };
    s_b ^ l ^ announced_b.bit_value()
}

/// Key digest used in the final verification step.
pub trait KeyDigest {
    fn digest(&self, key: &[Bit]) -> Vec<u8>;
}

/// SHA-256 over the key length (u64 little endian) followed by the bits
/// packed MSB first.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sha256Digest;

impl KeyDigest for Sha256Digest {
    fn digest(&self, key: &[Bit]) -> Vec<u8> {
        let mut hasher = Sha256::new();
        hasher.update((key.len() as u64).to_le_bytes());
        for chunk in key.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, bit)| acc | (bit.value() << (7 - i)));
            hasher.update([byte]);
        }
        hasher.finalize().to_vec()
    }
}

pub fn digest(key: &[Bit]) -> Vec<u8> {
    Sha256Digest.digest(key)
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTranscript {
    pub round_id: u64,
    pub alice: AliceRoundSecrets,
    pub bob: BobRoundSecrets,
    /// Messages as their originator sent them.
    pub sent: Vec<Message>,
    /// Messages as the receiver got them, after the tap.
    pub delivered: Vec<Message>,
    /// Bob's decoded key bit.
    pub bob_key: Bit,
    pub eve_key_guess: Option<Bit>,
}

impl RoundTranscript {
    pub fn alice_key(&self) -> Bit {
        self.alice.k
    }

    pub fn raw_outcome(&self) -> Option<Bit> {
        self.bob.raw_outcome
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub variant: ProtocolVariant,
    pub alice_key: Vec<Bit>,
    pub bob_key: Vec<Bit>,
    pub alice_digest: Vec<u8>,
    pub bob_digest: Vec<u8>,
    pub verified: bool,
    pub transcripts: Vec<RoundTranscript>,
    /// The two delivered hash-exchange messages, Alice's first.
    pub hash_exchange: Vec<Message>,
}

impl SessionResult {
    pub fn rounds(&self) -> usize {
        self.transcripts.len()
    }

    /// Delivered messages in channel order: every round's three legs, then
    /// the announcements, then the digests.
    pub fn messages(&self) -> impl Iterator<Item = &Message> + '_ {
        let legs = self.transcripts.iter().flat_map(|t| t.delivered.iter().take(3));
        let announcements = self.transcripts.iter().filter_map(|t| t.delivered.get(3));
        legs.chain(announcements).chain(self.hash_exchange.iter())
    }
}

/// Runs `rounds` rounds through `tap` with SHA-256 verification.
pub fn run_session<T: ChannelTap + ?Sized>(
    variant: ProtocolVariant,
    rounds: u64,
    tap: &mut T,
    seed: u64,
) -> Result<SessionResult, ProtocolError> {
    run_session_with_digest(variant, rounds, tap, seed, &Sha256Digest)
}

pub fn run_session_with_digest<T: ChannelTap + ?Sized>(
    variant: ProtocolVariant,
    rounds: u64,
    tap: &mut T,
    seed: u64,
    hasher: &dyn KeyDigest,
) -> Result<SessionResult, ProtocolError> {
    if rounds == 0 || rounds > MAX_ROUND_ID {
        return Err(ProtocolError::InvalidRoundCount { got: rounds, max: MAX_ROUND_ID });
    }
    let streams = SeedStreams::new(seed);
    let mut channel = Channel::new(rounds);
    let mut pending = Vec::with_capacity(rounds as usize);

    for round_id in 0..rounds {
        let mut alice_rng = streams.stream(round_id, Role::Alice);
        let mut bob_rng = streams.stream(round_id, Role::Bob);
        let mut eve_rng = streams.stream(round_id, Role::Eve);

        let (forward, alice) = alice_prepare(round_id, &mut alice_rng);
        let forward_in = channel.send(forward.clone(), tap, &mut eve_rng)?;

        let (ret, mut bob) = bob_shuffle(forward_in.clone(), variant, &mut bob_rng)?;
        let ret_in = channel.send(ret.clone(), tap, &mut eve_rng)?;

        let survivor = alice_encode_block(ret_in.clone(), &alice)?;
        let survivor_in = channel.send(survivor.clone(), tap, &mut eve_rng)?;
        bob_measure(survivor_in.clone(), &mut bob, &mut bob_rng)?;

        pending.push((
            alice,
            bob,
            vec![forward, ret, survivor],
            vec![forward_in, ret_in, survivor_in],
        ));
    }

    let mut transcripts = Vec::with_capacity(pending.len());
    let mut alice_key = Vec::with_capacity(pending.len());
    let mut bob_key = Vec::with_capacity(pending.len());
    let mut unused_rng = streams.stream(0, Role::Auxiliary);
    for (round_id, (alice, bob, mut sent, mut delivered)) in (0..rounds).zip(pending) {
        let announcement = Message::new(round_id, Payload::BlockAnnouncement(alice.b));
        let heard = channel.send(announcement.clone(), tap, &mut unused_rng)?;
        let announced_b = match heard.payload {
            Payload::BlockAnnouncement(b) => b,
            _ => unreachable!("channel preserves message kind"),
        };
        let l = bob.raw_outcome.ok_or(ProtocolError::MissingOutcome(round_id))?;
        let k_bob = bob_decode(l, bob.s1, bob.s2, announced_b);
        sent.push(announcement);
        delivered.push(heard);
        alice_key.push(alice.k);
        bob_key.push(k_bob);
        transcripts.push(RoundTranscript {
            round_id,
            alice,
            bob,
            sent,
            delivered,
            bob_key: k_bob,
            eve_key_guess: tap.key_guess(round_id),
        });
    }

    let alice_digest = hasher.digest(&alice_key);
    let bob_digest = hasher.digest(&bob_key);
    let mut hash_exchange = Vec::with_capacity(2);
    for (from, d) in [(Party::Alice, &alice_digest), (Party::Bob, &bob_digest)] {
        let msg = Message::new(rounds, Payload::HashExchange { from, digest: d.clone() });
        hash_exchange.push(channel.send(msg, tap, &mut unused_rng)?);
    }
    let received_alice = match &hash_exchange[0].payload {
        Payload::HashExchange { digest, .. } => digest.clone(),
        _ => unreachable!("channel preserves message kind"),
    };
    let verified = received_alice == bob_digest;

    Ok(SessionResult {
        variant,
        alice_key,
        bob_key,
        alice_digest,
        bob_digest,
        verified,
        transcripts,
        hash_exchange,
    })
}
