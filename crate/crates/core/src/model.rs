//! Closed-form physics of the interferometer: two-mode squeezed-vacuum
//! photon statistics, the parity signal at the output port, single-shot
//! outcome probabilities and the sensitivity baselines.
//!
//! With `k = n̄(n̄ + 2)` the parity signal is
//!
//! ```text
//! ⟨Π⟩(θ) = 1 / √(1 + k sin²θ)
//! ```
//!
//! and a single detection is even with probability `(1 + ⟨Π⟩) / 2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude the single-shot variance switches to its θ → 0 limit.
const SMALL_PHASE: f64 = 1e-8;

/// `|cos θ|` below this is treated as the divergence of the Cramér-Rao bound.
const SINGULAR_COS: f64 = 1e-12;

/// A phase in radians.
///
/// The model accepts any finite value; estimation grids live on `(0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Phase(f64);

impl Phase {
    pub const ZERO: Phase = Phase(0.0);
    pub const HALF_PI: Phase = Phase(std::f64::consts::FRAC_PI_2);

    pub fn new(radians: f64) -> Result<Self> {
        if radians.is_finite() {
            Ok(Self(radians))
        } else {
            Err(Error::NonFinitePhase(radians))
        }
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }
}

impl From<f64> for Phase {
    /// Unchecked conversion for literals; prefer [`Phase::new`] for user input.
    #[inline]
    fn from(radians: f64) -> Self {
        Self(radians)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Two-mode squeezed-vacuum source, parametrised by the mean photon number
/// `n̄` summed over both modes.
///
/// The state is `Σ_n √p_n |n, n⟩` with geometric weights
/// `p_n = (1 - t) tⁿ`, `t = 1 / (1 + 2/n̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TmsvSource {
    mean_photons: f64,
}

impl TmsvSource {
    pub fn new(mean_photons: f64) -> Result<Self> {
        if mean_photons.is_finite() && mean_photons > 0.0 {
            Ok(Self { mean_photons })
        } else {
            Err(Error::InvalidMeanPhotons(mean_photons))
        }
    }

    #[inline]
    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    /// `n̄(n̄ + 2)`, the coefficient of `sin²θ` in the parity signal.
    #[inline]
    pub fn coupling(&self) -> f64 {
        self.mean_photons * (self.mean_photons + 2.0)
    }

    /// Geometric ratio `t` of the twin-Fock weights, strictly inside (0, 1).
    #[inline]
    pub fn weight_ratio(&self) -> f64 {
        self.mean_photons / (self.mean_photons + 2.0)
    }

    /// Probability `p_n` of the twin-Fock component `|n, n⟩`.
    pub fn twin_fock_weight(&self, n: u32) -> f64 {
        let t = self.weight_ratio();
        (1.0 - t) * t.powi(n as i32)
    }

    /// Smallest `N` with `Σ_{n ≥ N} p_n = t^N ≤ epsilon`.
    pub fn twin_fock_cutoff(&self, epsilon: f64) -> u32 {
        let n = (epsilon.ln() / self.weight_ratio().ln()).ceil();
        n.max(0.0) as u32
    }

    /// Expected parity `⟨Π⟩` at the output for an interferometer phase θ.
    pub fn parity_expectation(&self, theta: impl Into<Phase>) -> f64 {
        let s = theta.into().radians().sin();
        1.0 / (1.0 + self.coupling() * s * s).sqrt()
    }

    /// `d⟨Π⟩/dθ = -k sin θ cos θ ⟨Π⟩³`.
    pub fn parity_derivative(&self, theta: impl Into<Phase>) -> f64 {
        let theta = theta.into().radians();
        let parity = self.parity_expectation(theta);
        -self.coupling() * theta.sin() * theta.cos() * parity.powi(3)
    }

    /// Variance of a single parity outcome, `1 - ⟨Π⟩²`, evaluated as
    /// `k sin²θ / (1 + k sin²θ)` to keep precision near θ = 0.
    pub fn parity_variance(&self, theta: impl Into<Phase>) -> f64 {
        let s = theta.into().radians().sin();
        let ks2 = self.coupling() * s * s;
        ks2 / (1.0 + ks2)
    }

    /// Probability that one detection yields an even photon number.
    pub fn even_probability(&self, theta: impl Into<Phase>) -> f64 {
        0.5 * (1.0 + self.parity_expectation(theta))
    }

    /// Probability of an odd outcome, `(1 - ⟨Π⟩) / 2`, computed without
    /// cancellation so its logarithm stays accurate close to θ = 0.
    pub fn odd_probability(&self, theta: impl Into<Phase>) -> f64 {
        let s = theta.into().radians().sin();
        let x = self.coupling() * s * s;
        let root = (1.0 + x).sqrt();
        0.5 * x / (root * (1.0 + root))
    }

    /// Phase uncertainty from `record_length` parity measurements at the
    /// Cramér-Rao bound:
    ///
    /// ```text
    /// Δφ = (1 + k sin²θ) / (√(M k) cos θ)
    /// ```
    pub fn crb_sensitivity(&self, theta: impl Into<Phase>, record_length: u64) -> Result<f64> {
        Ok(self.crb_c(theta)? / (record_length as f64).sqrt())
    }

    /// Coefficient `c_CRB` of `1/√M` in the Cramér-Rao bound.
    pub fn crb_c(&self, theta: impl Into<Phase>) -> Result<f64> {
        let theta = theta.into().radians();
        let cos = theta.cos();
        if cos.abs() < SINGULAR_COS {
            return Err(Error::SingularBound { theta });
        }
        let s = theta.sin();
        let k = self.coupling();
        Ok((1.0 + k * s * s) / (k.sqrt() * cos.abs()))
    }

    /// Shot-noise coefficient `1/√n̄`.
    pub fn shot_noise_c(&self) -> f64 {
        self.mean_photons.sqrt().recip()
    }

    /// Heisenberg coefficient `1/n̄`.
    pub fn heisenberg_c(&self) -> f64 {
        self.mean_photons.recip()
    }

    /// Single-shot phase variance `(1 - ⟨Π⟩²) / (d⟨Π⟩/dθ)²`.
    ///
    /// Within `1e-8` of the origin the ratio is 0/0 and the limit
    /// `1/(n̄(n̄ + 2))` is returned instead.
    pub fn single_shot_variance(&self, theta: impl Into<Phase>) -> f64 {
        let theta = theta.into();
        if theta.radians().abs() < SMALL_PHASE {
            return self.coupling().recip();
        }
        let slope = self.parity_derivative(theta);
        self.parity_variance(theta) / (slope * slope)
    }

    pub fn bounds(&self, theta: impl Into<Phase>) -> Result<SensitivityBounds> {
        Ok(SensitivityBounds {
            crb_c: self.crb_c(theta)?,
            shot_noise_c: self.shot_noise_c(),
            heisenberg_c: self.heisenberg_c(),
        })
    }
}

impl TryFrom<f64> for TmsvSource {
    type Error = Error;

    fn try_from(mean_photons: f64) -> Result<Self> {
        Self::new(mean_photons)
    }
}

impl From<TmsvSource> for f64 {
    fn from(source: TmsvSource) -> f64 {
        source.mean_photons
    }
}

/// Proportionality constants multiplying `1/√M` for the three baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityBounds {
    pub crb_c: f64,
    pub shot_noise_c: f64,
    pub heisenberg_c: f64,
}
