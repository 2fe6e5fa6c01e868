use std::path::PathBuf;

use clap::ValueEnum;
use kkkp_core::adversary::{EveStrategy, PulseChoice, ShuffleGuess};
use kkkp_core::analysis::Attack;
use kkkp_core::protocol::ProtocolVariant;
use kkkp_core::qubit::Bit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Original,
    Modified,
}

impl From<VariantArg> for ProtocolVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Original => ProtocolVariant::Original,
            VariantArg::Modified => ProtocolVariant::Modified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    None,
    Impersonation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EveShuffleArg {
    #[value(name = "00")]
    S00,
    #[value(name = "01")]
    S01,
    #[value(name = "10")]
    S10,
    #[value(name = "11")]
    S11,
    Mimic,
    Random,
}

impl EveShuffleArg {
    pub const ALL: [EveShuffleArg; 6] = [
        EveShuffleArg::S00,
        EveShuffleArg::S01,
        EveShuffleArg::S10,
        EveShuffleArg::S11,
        EveShuffleArg::Mimic,
        EveShuffleArg::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EveShuffleArg::S00 => "00",
            EveShuffleArg::S01 => "01",
            EveShuffleArg::S10 => "10",
            EveShuffleArg::S11 => "11",
            EveShuffleArg::Mimic => "mimic",
            EveShuffleArg::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvePulseArg {
    First,
    Second,
    Random,
}

impl EvePulseArg {
    pub const ALL: [EvePulseArg; 3] = [EvePulseArg::First, EvePulseArg::Second, EvePulseArg::Random];
}

impl From<EvePulseArg> for PulseChoice {
    fn from(p: EvePulseArg) -> Self {
        match p {
            EvePulseArg::First => PulseChoice::AlwaysFirst,
            EvePulseArg::Second => PulseChoice::AlwaysSecond,
            EvePulseArg::Random => PulseChoice::RandomPerRound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

pub fn strategy_for(shuffle: EveShuffleArg, pulse: EvePulseArg) -> EveStrategy {
    let fixed = |a, b| ShuffleGuess::Fixed(Bit::from(a), Bit::from(b));
    let (shuffle_guess, mimic_correlation) = match shuffle {
        EveShuffleArg::S00 => (fixed(false, false), false),
        EveShuffleArg::S01 => (fixed(false, true), false),
        EveShuffleArg::S10 => (fixed(true, false), false),
        EveShuffleArg::S11 => (fixed(true, true), false),
        EveShuffleArg::Mimic => (fixed(false, true), true),
        EveShuffleArg::Random => (ShuffleGuess::RandomPerRound, false),
    };
    EveStrategy { shuffle_guess, pulse_choice: pulse.into(), mimic_correlation }
}

/// One simulation run. The `eve_*` fields are ignored without an attack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub variant: ProtocolVariant,
    pub attack: AttackArg,
    pub eve_shuffle: EveShuffleArg,
    pub eve_pulse: EvePulseArg,
    pub rounds: u64,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub transcript_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variant: ProtocolVariant::Modified,
            attack: AttackArg::None,
            eve_shuffle: EveShuffleArg::S00,
            eve_pulse: EvePulseArg::First,
            rounds: 100_000,
            seed: 0,
            output_format: OutputFormat::Json,
            transcript_path: None,
        }
    }
}

impl RunConfig {
    pub fn attack(&self) -> Attack {
        match self.attack {
            AttackArg::None => Attack::None,
            AttackArg::Impersonation => Attack::Impersonation(strategy_for(self.eve_shuffle, self.eve_pulse)),
        }
    }
}
