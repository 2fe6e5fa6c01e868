//! Linear-polarization qubits.
//!
//! A linear polarization is fully described by one angle, and angles that
//! differ by a multiple of π describe the same state. Rotations about the
//! propagation axis are angle addition, and the H/V measurement follows
//! Malus's law.

use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use core::fmt;
use core::ops::BitXor;

use rand::{Rng, RngCore};
use thiserror::Error;

/// Absolute tolerance (radians) used to decide that an angle is an H/V eigenstate.
pub const EIGENSTATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QubitError {
    #[error("invalid angle {0}: angles must be finite")]
    InvalidAngle(f64),
}

/// A polarization angle, canonically reduced into `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(raw: f64) -> Result<Self, QubitError> {
        canonicalize(raw)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Distance between two states on the mod-π circle, in `[0, π/2]`.
    pub fn distance(self, other: Angle) -> f64 {
        let d = libm::fabs(self.0 - other.0);
        if d > FRAC_PI_2 {
            PI - d
        } else {
            d
        }
    }

    pub fn approx_eq(self, other: Angle, tolerance: f64) -> bool {
        self.distance(other) <= tolerance
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

/// Reduces `raw` into `[0, π)`.
pub fn canonicalize(raw: f64) -> Result<Angle, QubitError> {
    if !raw.is_finite() {
        return Err(QubitError::InvalidAngle(raw));
    }
    let mut r = libm::fmod(raw, PI);
    if r < 0.0 {
        r += PI;
    }
    // -tiny + π rounds to π
    if r >= PI {
        r = 0.0;
    }
    Ok(Angle(r))
}

/// A classical bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[repr(u8)]
pub enum Bit {
    #[default]
    Zero = 0,
    One = 1,
}

impl Bit {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            0 => Some(Bit::Zero),
            1 => Some(Bit::One),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        self ^ Bit::One
    }

    /// `(-1)^self`.
    pub fn sign(self) -> f64 {
        match self {
            Bit::Zero => 1.0,
            Bit::One => -1.0,
        }
    }

    /// `(-1)^self · π/4`, the shuffle/encoding offset used throughout the protocol.
    pub fn quarter_turn(self) -> f64 {
        self.sign() * FRAC_PI_4
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Bit::from(rng.random::<bool>())
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

impl From<Bit> for bool {
    fn from(b: Bit) -> bool {
        b == Bit::One
    }
}

impl BitXor for Bit {
    type Output = Bit;

    fn bitxor(self, rhs: Bit) -> Bit {
        Bit::from(self != rhs)
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A single linear-polarization qubit.
///
/// Not `Copy`: measurement consumes the value.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationQubit {
    angle: Angle,
}

impl PolarizationQubit {
    pub fn new(angle: Angle) -> Self {
        Self { angle }
    }

    pub fn from_radians(raw: f64) -> Result<Self, QubitError> {
        Ok(Self::new(canonicalize(raw)?))
    }

    pub fn angle(&self) -> Angle {
        self.angle
    }

    /// Applies a rotation by `delta` radians.
    pub fn rotate(&self, delta: f64) -> Result<Self, QubitError> {
        if !delta.is_finite() {
            return Err(QubitError::InvalidAngle(delta));
        }
        Ok(Self::new(canonicalize(self.angle.0 + delta)?))
    }

    /// The deterministic H/V outcome, if the state is within
    /// [`EIGENSTATE_TOLERANCE`] of horizontal or vertical.
    pub fn eigen_outcome(&self) -> Option<Bit> {
        if self.angle.approx_eq(Angle::ZERO, EIGENSTATE_TOLERANCE) {
            Some(Bit::Zero)
        } else if self.angle.approx_eq(Angle(FRAC_PI_2), EIGENSTATE_TOLERANCE) {
            Some(Bit::One)
        } else {
            None
        }
    }

    /// Probability of the vertical outcome, `sin²θ`.
    pub fn prob_one(&self) -> f64 {
        let s = libm::sin(self.angle.0);
        s * s
    }

    /// Projective H/V measurement: 0 for horizontal, 1 for vertical.
    pub fn measure_hv<R: RngCore + ?Sized>(self, rng: &mut R) -> Bit {
        if let Some(bit) = self.eigen_outcome() {
            return bit;
        }
        Bit::from(rng.random::<f64>() < self.prob_one())
    }
}
