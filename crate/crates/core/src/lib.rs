//! Simulation core for the two-pulse KKKP quantum key distribution protocol.
//!
//! The crate models linear-polarization qubits as canonical angles, runs the
//! honest Alice/Bob state machines for both protocol variants, implements the
//! impersonation attack as a [`channel::ChannelTap`], and provides an exact
//! enumeration oracle for the attack-induced error rate next to the Monte
//! Carlo estimator.
//!
//! Everything here is `no_std` + `alloc`. IO, wire formats and the command
//! line live in the companion `kkkp` crate.
//!
//! ```
//! use kkkp_core::adversary::{EveStrategy, ImpersonationTap};
//! use kkkp_core::analysis::{estimate_qber, exact_qber, Attack};
//! use kkkp_core::protocol::{run_session, ProtocolVariant};
//!
//! let strategy = EveStrategy::zhang();
//! let mut eve = ImpersonationTap::new(strategy);
//! let session = run_session(ProtocolVariant::Modified, 2_000, &mut eve, 7).unwrap();
//! let report = estimate_qber(&session);
//! assert!(report.detected);
//! assert_eq!(
//!     exact_qber(ProtocolVariant::Modified, &Attack::Impersonation(strategy)).to_string(),
//!     "1/4"
//! );
//! ```
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adversary;
pub mod analysis;
pub mod channel;
pub mod protocol;
pub mod qubit;
pub mod rng;
pub mod sidechannel;

pub use adversary::{EveStrategy, ImpersonationTap, PulseChoice, ShuffleGuess};
pub use analysis::{Attack, QberReport};
pub use channel::{ChannelTap, IdentityTap, Message, Payload, PulseSlot};
pub use protocol::{ProtocolVariant, SessionResult};
pub use qubit::{Angle, Bit, PolarizationQubit};
