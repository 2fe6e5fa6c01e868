//! The impersonation attack.
//!
//! Eve cuts the channel and plays Bob toward Alice and Alice toward Bob:
//!
//! * leg one: she stores Alice's pair as `E1` and sends Bob a decoy pair
//!   with her own random angles `θ′₁, θ′₂`;
//! * leg two: she takes Bob's shuffled pair, removes `θ′` and stores it as
//!   `E2 = (φ + (−1)^{s₁}π/4, φ + (−1)^{s₂}π/4)`, then shuffles `E1` with her
//!   guesses `s′₁, s′₂` and returns it to Alice;
//! * leg three: she measures Alice's survivor, getting the pre-key
//!   `l′ = s′_b ⊕ k ⊕ β`, and encodes it onto one `E2` pulse for Bob.
//!
//! Eve never learns `b` before the announcement, so her pulse choice cannot
//! depend on it.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;

use crate::channel::{ChannelError, ChannelTap, Message, Payload, PulseSlot, QubitPair};
use crate::protocol::{random_angle, random_slot};
use crate::qubit::{Angle, Bit, PolarizationQubit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShuffleGuess {
    Fixed(Bit, Bit),
    RandomPerRound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseChoice {
    AlwaysFirst,
    AlwaysSecond,
    RandomPerRound,
}

impl PulseChoice {
    pub const ALL: [PulseChoice; 3] = [PulseChoice::AlwaysFirst, PulseChoice::AlwaysSecond, PulseChoice::RandomPerRound];

    pub fn as_str(self) -> &'static str {
        match self {
            PulseChoice::AlwaysFirst => "first",
            PulseChoice::AlwaysSecond => "second",
            PulseChoice::RandomPerRound => "random",
        }
    }

    /// The slots this policy can pick, each equally likely.
    pub fn options(self) -> &'static [PulseSlot] {
        match self {
            PulseChoice::AlwaysFirst => &[PulseSlot::First],
            PulseChoice::AlwaysSecond => &[PulseSlot::Second],
            PulseChoice::RandomPerRound => &PulseSlot::BOTH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EveStrategy {
    pub shuffle_guess: ShuffleGuess,
    pub pulse_choice: PulseChoice,
    /// Forces `s′₂ = s′₁ ⊕ 1`, copying the original protocol's correlation.
    pub mimic_correlation: bool,
}

impl EveStrategy {
    /// `s′₁ = s′₂ = 0`, re-encode onto the first stored pulse.
    pub fn zhang() -> Self {
        Self {
            shuffle_guess: ShuffleGuess::Fixed(Bit::Zero, Bit::Zero),
            pulse_choice: PulseChoice::AlwaysFirst,
            mimic_correlation: false,
        }
    }

    /// `s′ = (0, 1)` correlated like the original protocol.
    pub fn mimic() -> Self {
        Self {
            shuffle_guess: ShuffleGuess::Fixed(Bit::Zero, Bit::One),
            pulse_choice: PulseChoice::AlwaysFirst,
            mimic_correlation: true,
        }
    }

    pub fn with_pulse(self, pulse_choice: PulseChoice) -> Self {
        Self { pulse_choice, ..self }
    }

    /// Applies the correlation override to a raw `(s′₁, s′₂)`.
    pub fn effective_shuffle(&self, s1: Bit, s2: Bit) -> (Bit, Bit) {
        if self.mimic_correlation {
            (s1, s1.flip())
        } else {
            (s1, s2)
        }
    }

    /// Every `(s′₁, s′₂)` this strategy can use, each equally likely.
    pub fn shuffle_options(&self) -> Vec<(Bit, Bit)> {
        let raw: Vec<(Bit, Bit)> = match self.shuffle_guess {
            ShuffleGuess::Fixed(a, b) => alloc::vec![(a, b)],
            ShuffleGuess::RandomPerRound => [Bit::Zero, Bit::One]
                .into_iter()
                .flat_map(|a| [Bit::Zero, Bit::One].into_iter().map(move |b| (a, b)))
                .collect(),
        };
        raw.into_iter().map(|(a, b)| self.effective_shuffle(a, b)).collect()
    }

    fn draw_shuffle(&self, rng: &mut dyn RngCore) -> (Bit, Bit) {
        let (a, b) = match self.shuffle_guess {
            ShuffleGuess::Fixed(a, b) => (a, b),
            ShuffleGuess::RandomPerRound => (Bit::random(rng), Bit::random(rng)),
        };
        self.effective_shuffle(a, b)
    }

    fn draw_pulse(&self, rng: &mut dyn RngCore) -> PulseSlot {
        match self.pulse_choice {
            PulseChoice::AlwaysFirst => PulseSlot::First,
            PulseChoice::AlwaysSecond => PulseSlot::Second,
            PulseChoice::RandomPerRound => random_slot(rng),
        }
    }

    /// Short label of the shuffle policy: `00`..`11`, `mimic`, `random`.
    pub fn shuffle_label(&self) -> alloc::string::String {
        match (self.shuffle_guess, self.mimic_correlation) {
            (ShuffleGuess::Fixed(Bit::Zero, _), true) => "mimic".into(),
            (ShuffleGuess::Fixed(Bit::One, _), true) => "mimic1".into(),
            (ShuffleGuess::Fixed(a, b), false) => format!("{a}{b}"),
            (ShuffleGuess::RandomPerRound, false) => "random".into(),
            (ShuffleGuess::RandomPerRound, true) => "random-mimic".into(),
        }
    }
}

impl fmt::Display for EveStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.shuffle_label(), self.pulse_choice.as_str())
    }
}

/// Eve's memory for one round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EveRoundState {
    /// Alice's original pair.
    pub e1: Option<QubitPair>,
    /// Bob's shuffled pair with the decoy angles removed.
    pub e2: Option<QubitPair>,
    pub theta_prime: Option<(Angle, Angle)>,
    pub shuffle: Option<(Bit, Bit)>,
    pub pulse: Option<PulseSlot>,
    pub prekey: Option<Bit>,
    pub learned_key_guess: Option<Bit>,
}

fn missing(what: &str) -> ChannelError {
    ChannelError::TapState(format!("{what} not set for this round"))
}

fn take_pair(msg: Message) -> Result<(u64, QubitPair), ChannelError> {
    let kind = msg.kind();
    match msg.payload {
        Payload::ForwardPair(p) | Payload::ReturnPair(p) => Ok((msg.round_id, p)),
        _ => Err(ChannelError::UnexpectedPayload(kind)),
    }
}

impl EveRoundState {
    /// Leg one: store Alice's pair, send Bob a decoy pair.
    pub fn on_forward(&mut self, msg: Message, rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        let (round_id, pair) = take_pair(msg)?;
        self.e1 = Some(pair);
        let t1 = random_angle(rng);
        let t2 = random_angle(rng);
        self.theta_prime = Some((t1, t2));
        let decoy = QubitPair::new(PolarizationQubit::new(t1), PolarizationQubit::new(t2));
        Ok(Message::new(round_id, Payload::ForwardPair(decoy)))
    }

    /// Leg two: compensate and store Bob's pair, return Alice's shuffled pair.
    pub fn on_return(
        &mut self,
        msg: Message,
        strategy: &EveStrategy,
        rng: &mut dyn RngCore,
    ) -> Result<Message, ChannelError> {
        let (round_id, pair) = take_pair(msg)?;
        let (t1, t2) = self.theta_prime.ok_or_else(|| missing("decoy angles"))?;
        self.e2 = Some(pair.rotate(-t1.radians(), -t2.radians())?);
        let e1 = self.e1.as_ref().ok_or_else(|| missing("E1"))?;
        let (g1, g2) = strategy.draw_shuffle(rng);
        self.shuffle = Some((g1, g2));
        let shuffled = e1.rotate(g1.quarter_turn(), g2.quarter_turn())?;
        Ok(Message::new(round_id, Payload::ReturnPair(shuffled)))
    }

    /// Leg three: read the pre-key and re-encode it onto one stored pulse.
    ///
    /// The encoding bit is `e = l′ ⊕ s′ᵢ` for the chosen pulse `i`: correct
    /// for Bob exactly when Alice's `b` turns out to be `i` (or, against the
    /// original protocol with a mimicked correlation, always).
    pub fn on_survivor(
        &mut self,
        msg: Message,
        strategy: &EveStrategy,
        rng: &mut dyn RngCore,
    ) -> Result<Message, ChannelError> {
        let kind = msg.kind();
        let round_id = msg.round_id;
        let survivor = match msg.payload {
            Payload::Survivor(q) => q,
            _ => return Err(ChannelError::UnexpectedPayload(kind)),
        };
        let (g1, g2) = self.shuffle.ok_or_else(|| missing("shuffle guess"))?;
        let e2 = self.e2.as_ref().ok_or_else(|| missing("E2"))?;

        let prekey = survivor.measure_hv(rng);
        let pulse = strategy.draw_pulse(rng);
        let guess_i = match pulse {
            PulseSlot::First => g1,
            PulseSlot::Second => g2,
        };
        let e = prekey ^ guess_i;
        let forwarded = e2.get(pulse).rotate(e.flip().quarter_turn())?;

        self.prekey = Some(prekey);
        self.pulse = Some(pulse);
        if strategy.mimic_correlation {
            // s′_b ⊕ β = s′₁ ⊕ 1 for either b
            self.learned_key_guess = Some(prekey ^ g1 ^ Bit::One);
        }
        Ok(Message::new(round_id, Payload::Survivor(forwarded)))
    }

    /// After the announcement: `k = l′ ⊕ s′_b ⊕ β`.
    pub fn learn_from_announcement(&mut self, announced_b: PulseSlot) -> Result<Bit, ChannelError> {
        let prekey = self.prekey.ok_or_else(|| missing("pre-key"))?;
        let (g1, g2) = self.shuffle.ok_or_else(|| missing("shuffle guess"))?;
        let guess_b = match announced_b {
            PulseSlot::First => g1,
            PulseSlot::Second => g2,
        };
        let k = prekey ^ guess_b ^ announced_b.bit_value();
        self.learned_key_guess = Some(k);
        Ok(k)
    }
}

/// [`ChannelTap`] running the impersonation attack over a whole session.
#[derive(Debug, Clone)]
pub struct ImpersonationTap {
    strategy: EveStrategy,
    rounds: Vec<EveRoundState>,
}

impl ImpersonationTap {
    pub fn new(strategy: EveStrategy) -> Self {
        Self { strategy, rounds: Vec::new() }
    }

    pub fn strategy(&self) -> &EveStrategy {
        &self.strategy
    }

    pub fn round(&self, round_id: u64) -> Option<&EveRoundState> {
        self.rounds.get(usize::try_from(round_id).ok()?)
    }

    fn round_mut(&mut self, round_id: u64) -> Result<&mut EveRoundState, ChannelError> {
        usize::try_from(round_id)
            .ok()
            .and_then(|i| self.rounds.get_mut(i))
            .ok_or_else(|| ChannelError::TapState(format!("no stored state for round {round_id}")))
    }
}

impl ChannelTap for ImpersonationTap {
    fn on_forward(&mut self, msg: Message, rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        if msg.round_id != self.rounds.len() as u64 {
            return Err(ChannelError::TapState(format!(
                "round {} intercepted out of sequence",
                msg.round_id
            )));
        }
        let mut state = EveRoundState::default();
        let out = state.on_forward(msg, rng)?;
        self.rounds.push(state);
        Ok(out)
    }

    fn on_return(&mut self, msg: Message, rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        let strategy = self.strategy;
        self.round_mut(msg.round_id)?.on_return(msg, &strategy, rng)
    }

    fn on_survivor(&mut self, msg: Message, rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        let strategy = self.strategy;
        self.round_mut(msg.round_id)?.on_survivor(msg, &strategy, rng)
    }

    fn on_announcement(&mut self, msg: &Message) -> Result<(), ChannelError> {
        if let Payload::BlockAnnouncement(b) = msg.payload {
            self.round_mut(msg.round_id)?.learn_from_announcement(b)?;
        }
        Ok(())
    }

    fn key_guess(&self, round_id: u64) -> Option<Bit> {
        self.round(round_id)?.learned_key_guess
    }
}
