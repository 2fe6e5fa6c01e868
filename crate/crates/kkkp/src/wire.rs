//! JSONL wire format for channel messages.
//!
//! One JSON object per line with fields `round_id`, `kind` and `payload`:
//!
//! ```text
//! {"round_id":0,"kind":"forward_pair","payload":{"first":0.25,"second":1.5}}
//! {"round_id":0,"kind":"survivor","payload":{"angle":0.7853981633974483}}
//! {"round_id":0,"kind":"block_announcement","payload":{"slot":"first"}}
//! {"round_id":1,"kind":"hash_exchange","payload":{"from":"alice","digest":"9f86..."}}
//! ```
//!
//! Angles are radians, written as shortest round-trip IEEE-754 doubles.
//! Digests are lowercase hex. A survivor carries its angle only.

use std::io::{self, BufRead, Write};

use kkkp_core::channel::{Channel, ChannelError, IdentityTap, Message, MessageKind, Party, Payload, PulseSlot, QubitPair};
use kkkp_core::protocol::SessionResult;
use kkkp_core::qubit::PolarizationQubit;
use kkkp_core::rng::{Role, SeedStreams};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {problem}")]
    Field { field: &'static str, problem: String },
}

fn field_error(field: &'static str, problem: impl Into<String>) -> DecodeError {
    DecodeError::Field { field, problem: problem.into() }
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript line {line}: {source}")]
    Decode { line: usize, source: DecodeError },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("transcript replay rejected: {0}")]
    Order(#[from] ChannelError),
    #[error("transcript has no closing hash exchange")]
    Unterminated,
}

#[derive(Serialize)]
#[serde(untagged)]
enum WirePayload<'a> {
    Pair { first: f64, second: f64 },
    Survivor { angle: f64 },
    Block { slot: &'a str },
    Hash { from: &'a str, digest: String },
}

#[derive(Serialize)]
struct WireMessage<'a> {
    round_id: u64,
    kind: &'a str,
    payload: WirePayload<'a>,
}

pub fn encode_message(msg: &Message) -> String {
    let payload = match &msg.payload {
        Payload::ForwardPair(p) | Payload::ReturnPair(p) => WirePayload::Pair {
            first: p.first.angle().radians(),
            second: p.second.angle().radians(),
        },
        Payload::Survivor(q) => WirePayload::Survivor { angle: q.angle().radians() },
        Payload::BlockAnnouncement(slot) => WirePayload::Block { slot: slot.as_str() },
        Payload::HashExchange { from, digest } => WirePayload::Hash { from: from.as_str(), digest: hex::encode(digest) },
    };
    let wire = WireMessage { round_id: msg.round_id, kind: msg.kind().as_str(), payload };
    serde_json::to_string(&wire).expect("wire messages always serialize")
}

fn get<'a>(obj: &'a Map<String, Value>, field: &'static str) -> Result<&'a Value, DecodeError> {
    obj.get(field).ok_or_else(|| field_error(field, "missing"))
}

fn get_str<'a>(obj: &'a Map<String, Value>, field: &'static str) -> Result<&'a str, DecodeError> {
    get(obj, field)?.as_str().ok_or_else(|| field_error(field, "expected a string"))
}

fn get_qubit(obj: &Map<String, Value>, field: &'static str) -> Result<PolarizationQubit, DecodeError> {
    let raw = get(obj, field)?.as_f64().ok_or_else(|| field_error(field, "expected a number"))?;
    let q = PolarizationQubit::from_radians(raw).map_err(|e| field_error(field, e.to_string()))?;
    // the encoder only writes canonical angles
    if q.angle().radians() != raw {
        return Err(field_error(field, format!("angle {raw} is not in [0, π)")));
    }
    Ok(q)
}

fn kind_from_str(s: &str) -> Option<MessageKind> {
    Some(match s {
        "forward_pair" => MessageKind::ForwardPair,
        "return_pair" => MessageKind::ReturnPair,
        "survivor" => MessageKind::Survivor,
        "block_announcement" => MessageKind::BlockAnnouncement,
        "hash_exchange" => MessageKind::HashExchange,
        _ => return None,
    })
}

pub fn decode_message(bytes: &[u8]) -> Result<Message, DecodeError> {
    let value: Value = serde_json::from_slice(bytes)?;
    let obj = value.as_object().ok_or_else(|| field_error("message", "expected a JSON object"))?;
    let round_id = get(obj, "round_id")?
        .as_u64()
        .ok_or_else(|| field_error("round_id", "expected a non-negative integer"))?;
    let kind_str = get_str(obj, "kind")?;
    let kind = kind_from_str(kind_str).ok_or_else(|| field_error("kind", format!("unknown kind {kind_str:?}")))?;
    let payload = get(obj, "payload")?
        .as_object()
        .ok_or_else(|| field_error("payload", "expected a JSON object"))?;

    let payload = match kind {
        MessageKind::ForwardPair | MessageKind::ReturnPair => {
            let pair = QubitPair::new(get_qubit(payload, "first")?, get_qubit(payload, "second")?);
            if kind == MessageKind::ForwardPair {
                Payload::ForwardPair(pair)
            } else {
                Payload::ReturnPair(pair)
            }
        }
        MessageKind::Survivor => Payload::Survivor(get_qubit(payload, "angle")?),
        MessageKind::BlockAnnouncement => match get_str(payload, "slot")? {
            "first" => Payload::BlockAnnouncement(PulseSlot::First),
            "second" => Payload::BlockAnnouncement(PulseSlot::Second),
            other => return Err(field_error("slot", format!("unknown slot {other:?}"))),
        },
        MessageKind::HashExchange => {
            let from = match get_str(payload, "from")? {
                "alice" => Party::Alice,
                "bob" => Party::Bob,
                other => return Err(field_error("from", format!("unknown party {other:?}"))),
            };
            let digest = hex::decode(get_str(payload, "digest")?).map_err(|e| field_error("digest", e.to_string()))?;
            Payload::HashExchange { from, digest }
        }
    };
    Ok(Message::new(round_id, payload))
}

/// Writes every delivered message of `session`, one per line.
pub fn write_transcript<W: Write>(session: &SessionResult, out: &mut W) -> io::Result<()> {
    for msg in session.messages() {
        writeln!(out, "{}", encode_message(msg))?;
    }
    Ok(())
}

pub fn read_transcript<R: BufRead>(input: R) -> Result<Vec<Message>, TranscriptError> {
    let mut messages = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg = decode_message(line.as_bytes()).map_err(|source| TranscriptError::Decode { line: i + 1, source })?;
        messages.push(msg);
    }
    Ok(messages)
}

/// Replays decoded messages through a fresh channel to check their order.
///
/// The round count is taken from the closing hash exchange.
pub fn validate_order(messages: &[Message]) -> Result<(), TranscriptError> {
    let rounds = messages
        .iter()
        .rev()
        .find(|m| m.kind() == MessageKind::HashExchange)
        .map(|m| m.round_id)
        .ok_or(TranscriptError::Unterminated)?;
    let mut channel = Channel::new(rounds);
    let mut rng = SeedStreams::new(0).stream(0, Role::Auxiliary);
    for m in messages {
        channel.send(m.clone(), &mut IdentityTap, &mut rng)?;
    }
    if !channel.is_closed() {
        return Err(TranscriptError::Unterminated);
    }
    Ok(())
}
