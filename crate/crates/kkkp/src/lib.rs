//! Command line, JSONL transcripts and reports for the KKKP simulator.
//!
//! The protocol, attack and analysis live in `kkkp-core`; this crate adds
//! everything that touches the outside world.

pub mod cli;
pub mod config;
pub mod report;
pub mod wire;

pub use cli::{execute, oracle_table, run_cli, RunOutput};
pub use config::RunConfig;
pub use wire::{decode_message, encode_message, read_transcript, write_transcript};
