//! Equal-amplitude check on a 50:50 beam splitter.
//!
//! Two identical coherent pulses interfere so that every photon leaves one
//! port; the other port is dark. Any difference `a − b` in complex
//! amplitude puts a coherent state of amplitude `(a − b)/√2` on the dark
//! port, which an ideal detector sees with probability `1 − e^{−|a−b|²/2}`.

use core::f64::consts::FRAC_1_SQRT_2;
use core::ops::{Add, Mul, Sub};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoherentAmplitude {
    pub re: f64,
    pub im: f64,
}

impl CoherentAmplitude {
    pub const VACUUM: CoherentAmplitude = CoherentAmplitude { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// `|α|²`.
    pub fn mean_photon_number(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

impl Add for CoherentAmplitude {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for CoherentAmplitude {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul<f64> for CoherentAmplitude {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.re * k, self.im * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckOutcome {
    Pass,
    EveDetected,
}

/// Lossless 50:50 splitter: `((a + b)/√2, (a − b)/√2)`. The second port is dark.
pub fn beamsplit(a: CoherentAmplitude, b: CoherentAmplitude) -> (CoherentAmplitude, CoherentAmplitude) {
    ((a + b) * FRAC_1_SQRT_2, (a - b) * FRAC_1_SQRT_2)
}

/// Mean photon number reaching the dark port, `|a − b|²/2`.
pub fn dark_port_mean(a: CoherentAmplitude, b: CoherentAmplitude) -> f64 {
    beamsplit(a, b).1.mean_photon_number()
}

pub fn dark_port_click_probability(a: CoherentAmplitude, b: CoherentAmplitude) -> f64 {
    -libm::expm1(-dark_port_mean(a, b))
}

/// Samples the dark-port photon count for one pulse pair.
pub fn sample_dark_port_photons<R: RngCore + ?Sized>(a: CoherentAmplitude, b: CoherentAmplitude, rng: &mut R) -> u64 {
    let mean = dark_port_mean(a, b);
    match Poisson::new(mean) {
        Ok(dist) => dist.sample(rng) as u64,
        // zero mean: vacuum. Non-finite means are treated as saturating.
        Err(_) if mean == 0.0 => 0,
        Err(_) => u64::MAX,
    }
}

pub fn amplitude_check<R: RngCore + ?Sized>(a: CoherentAmplitude, b: CoherentAmplitude, rng: &mut R) -> CheckOutcome {
    if sample_dark_port_photons(a, b, rng) > 0 {
        CheckOutcome::EveDetected
    } else {
        CheckOutcome::Pass
    }
}

/// Samples `trials` checks and returns how many clicked.
pub fn count_detections<R: RngCore + ?Sized>(
    a: CoherentAmplitude,
    b: CoherentAmplitude,
    trials: u64,
    rng: &mut R,
) -> u64 {
    (0..trials)
        .filter(|_| amplitude_check(a, b, rng) == CheckOutcome::EveDetected)
        .count() as u64
}

/// Draws a uniformly random amplitude with components in `[-scale, scale)`.
pub fn random_amplitude<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> CoherentAmplitude {
    CoherentAmplitude::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}
