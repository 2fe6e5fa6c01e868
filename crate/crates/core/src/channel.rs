//! Message vocabulary, ordered delivery and adversary tap points.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;
use thiserror::Error;

use crate::qubit::{Bit, PolarizationQubit, QubitError};

/// Which of the two pulses in a pair.
///
/// As a bit (the form in which the blocking factor enters every XOR law)
/// `First` is 1 and `Second` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseSlot {
    First,
    Second,
}

impl PulseSlot {
    pub const BOTH: [PulseSlot; 2] = [PulseSlot::First, PulseSlot::Second];

    pub fn bit_value(self) -> Bit {
        match self {
            PulseSlot::First => Bit::One,
            PulseSlot::Second => Bit::Zero,
        }
    }

    pub fn other(self) -> Self {
        match self {
            PulseSlot::First => PulseSlot::Second,
            PulseSlot::Second => PulseSlot::First,
        }
    }

    pub fn from_bit(beta: Bit) -> Self {
        match beta {
            Bit::One => PulseSlot::First,
            Bit::Zero => PulseSlot::Second,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PulseSlot::First => "first",
            PulseSlot::Second => "second",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn as_str(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitPair {
    pub first: PolarizationQubit,
    pub second: PolarizationQubit,
}

impl QubitPair {
    pub fn new(first: PolarizationQubit, second: PolarizationQubit) -> Self {
        Self { first, second }
    }

    pub fn get(&self, slot: PulseSlot) -> &PolarizationQubit {
        match slot {
            PulseSlot::First => &self.first,
            PulseSlot::Second => &self.second,
        }
    }

    pub fn into_slot(self, slot: PulseSlot) -> PolarizationQubit {
        match slot {
            PulseSlot::First => self.first,
            PulseSlot::Second => self.second,
        }
    }

    /// Rotates each slot by its own angle.
    pub fn rotate(&self, first: f64, second: f64) -> Result<Self, QubitError> {
        Ok(Self::new(self.first.rotate(first)?, self.second.rotate(second)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    ForwardPair,
    ReturnPair,
    Survivor,
    BlockAnnouncement,
    HashExchange,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::ForwardPair => "forward_pair",
            MessageKind::ReturnPair => "return_pair",
            MessageKind::Survivor => "survivor",
            MessageKind::BlockAnnouncement => "block_announcement",
            MessageKind::HashExchange => "hash_exchange",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Alice → Bob, leg one.
    ForwardPair(QubitPair),
    /// Bob → Alice, leg two.
    ReturnPair(QubitPair),
    /// Alice → Bob, leg three. Carries no slot information.
    Survivor(PolarizationQubit),
    /// Public announcement of the blocking factor for one round.
    BlockAnnouncement(PulseSlot),
    HashExchange { from: Party, digest: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub round_id: u64,
    pub payload: Payload,
}

impl Message {
    pub fn new(round_id: u64, payload: Payload) -> Self {
        Self { round_id, payload }
    }

    pub fn kind(&self) -> MessageKind {
        match self.payload {
            Payload::ForwardPair(_) => MessageKind::ForwardPair,
            Payload::ReturnPair(_) => MessageKind::ReturnPair,
            Payload::Survivor(_) => MessageKind::Survivor,
            Payload::BlockAnnouncement(_) => MessageKind::BlockAnnouncement,
            Payload::HashExchange { .. } => MessageKind::HashExchange,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("protocol order violation: expected {}, got {got_kind} for round {got_round}", describe(.expected))]
    OrderViolation {
        expected: Option<(MessageKind, u64)>,
        got_kind: MessageKind,
        got_round: u64,
    },
    #[error("tap replaced a {sent} message for round {round} with {returned}")]
    TapShapeViolation {
        sent: MessageKind,
        returned: MessageKind,
        round: u64,
    },
    #[error("message payload does not match its handler: {0}")]
    UnexpectedPayload(MessageKind),
    #[error("tap state error: {0}")]
    TapState(String),
    #[error(transparent)]
    Qubit(#[from] QubitError),
}

fn describe(expected: &Option<(MessageKind, u64)>) -> String {
    use alloc::format;
    match expected {
        Some((kind, round)) => format!("{kind} for round {round}"),
        None => "no further messages".into(),
    }
}

/// Interception points on the channel.
///
/// Every handler defaults to pass-through, so `IdentityTap` is just the
/// empty implementation. Taps may keep copies of what they see.
pub trait ChannelTap {
    fn on_forward(&mut self, msg: Message, _rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        Ok(msg)
    }

    fn on_return(&mut self, msg: Message, _rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        Ok(msg)
    }

    fn on_survivor(&mut self, msg: Message, _rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        Ok(msg)
    }

    /// Public announcements can be read but not altered.
    fn on_announcement(&mut self, _msg: &Message) -> Result<(), ChannelError> {
        Ok(())
    }

    /// The tap's guess of Alice's key bit for a round, if it makes one.
    fn key_guess(&self, _round_id: u64) -> Option<Bit> {
        None
    }
}

/// Leaves every message untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTap;

impl ChannelTap for IdentityTap {}

impl<T: ChannelTap + ?Sized> ChannelTap for &mut T {
    fn on_forward(&mut self, msg: Message, rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        (**self).on_forward(msg, rng)
    }
    fn on_return(&mut self, msg: Message, rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        (**self).on_return(msg, rng)
    }
    fn on_survivor(&mut self, msg: Message, rng: &mut dyn RngCore) -> Result<Message, ChannelError> {
        (**self).on_survivor(msg, rng)
    }
    fn on_announcement(&mut self, msg: &Message) -> Result<(), ChannelError> {
        (**self).on_announcement(msg)
    }
    fn key_guess(&self, round_id: u64) -> Option<Bit> {
        (**self).key_guess(round_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Expect {
    Round { round: u64, kind: MessageKind },
    Announcement { round: u64 },
    Hash { from: Party },
    Closed,
}

/// One session's ordered, lossless channel.
///
/// Accepts exactly `rounds` × (forward, return, survivor), then one block
/// announcement per round in round order, then Alice's and Bob's digests
/// (with `round_id == rounds`).
#[derive(Debug, Clone)]
pub struct Channel {
    rounds: u64,
    expect: Expect,
}

impl Channel {
    pub fn new(rounds: u64) -> Self {
        let expect = if rounds == 0 {
            Expect::Hash { from: Party::Alice }
        } else {
            Expect::Round { round: 0, kind: MessageKind::ForwardPair }
        };
        Self { rounds, expect }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn is_closed(&self) -> bool {
        self.expect == Expect::Closed
    }

    fn expected(&self) -> Option<(MessageKind, u64)> {
        match self.expect {
            Expect::Round { round, kind } => Some((kind, round)),
            Expect::Announcement { round } => Some((MessageKind::BlockAnnouncement, round)),
            Expect::Hash { .. } => Some((MessageKind::HashExchange, self.rounds)),
            Expect::Closed => None,
        }
    }

    fn check(&self, msg: &Message) -> Result<(), ChannelError> {
        let violation = || ChannelError::OrderViolation {
            expected: self.expected(),
            got_kind: msg.kind(),
            got_round: msg.round_id,
        };
        match self.expected() {
            Some((kind, round)) if kind == msg.kind() && round == msg.round_id => {}
            _ => return Err(violation()),
        }
        if let (Expect::Hash { from }, Payload::HashExchange { from: sender, .. }) = (self.expect, &msg.payload) {
            if from != *sender {
                return Err(violation());
            }
        }
        Ok(())
    }

    fn advance(&mut self) {
        self.expect = match self.expect {
            Expect::Round { round, kind: MessageKind::ForwardPair } => {
                Expect::Round { round, kind: MessageKind::ReturnPair }
            }
            Expect::Round { round, kind: MessageKind::ReturnPair } => {
                Expect::Round { round, kind: MessageKind::Survivor }
            }
            Expect::Round { round, .. } => {
                if round + 1 < self.rounds {
                    Expect::Round { round: round + 1, kind: MessageKind::ForwardPair }
                } else {
                    Expect::Announcement { round: 0 }
                }
            }
            Expect::Announcement { round } => {
                if round + 1 < self.rounds {
                    Expect::Announcement { round: round + 1 }
                } else {
                    Expect::Hash { from: Party::Alice }
                }
            }
            Expect::Hash { from: Party::Alice } => Expect::Hash { from: Party::Bob },
            Expect::Hash { from: Party::Bob } | Expect::Closed => Expect::Closed,
        }
    }

    /// Delivers `msg` through `tap`, returning what the receiver gets.
    pub fn send<T: ChannelTap + ?Sized>(
        &mut self,
        msg: Message,
        tap: &mut T,
        rng: &mut dyn RngCore,
    ) -> Result<Message, ChannelError> {
        self.check(&msg)?;
        let sent_kind = msg.kind();
        let round = msg.round_id;
        let delivered = match sent_kind {
            MessageKind::ForwardPair => tap.on_forward(msg, rng)?,
            MessageKind::ReturnPair => tap.on_return(msg, rng)?,
            MessageKind::Survivor => tap.on_survivor(msg, rng)?,
            MessageKind::BlockAnnouncement => {
                tap.on_announcement(&msg)?;
                msg
            }
            MessageKind::HashExchange => msg,
        };
        if delivered.kind() != sent_kind || delivered.round_id != round {
            return Err(ChannelError::TapShapeViolation {
                sent: sent_kind,
                returned: delivered.kind(),
                round,
            });
        }
        self.advance();
        Ok(delivered)
    }
}
