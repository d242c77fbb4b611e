//! Photon-number-resolving detector model.
//!
//! The photon count registered at one output port of the interferometer is
//! distributed as
//!
//! ```text
//! P(n) = Σ_{m ≥ ⌈n/2⌉} p_m(n̄) [d^m_{n-m,0}(θ + π/2)]²
//! ```
//!
//! where `d^j_{μ,ν}(β)` are Wigner rotation-matrix elements. Summing the even
//! counts gives an independent route to the even-outcome probability that
//! [`TmsvSource::even_probability`] evaluates in closed form.
//!
//! Elements are generated by the three-term recursion in `j` at fixed
//! `(μ, ν)`, seeded with the closed form at `j = max(|μ|, |ν|)`. The sign
//! convention is the one where `d^j_{0,0}(β) = P_j(cos β)`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::model::{Phase, TmsvSource};

/// Angular-momentum label `(j, μ, ν)` of a rotation-matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationIndex {
    j: u32,
    mu: i32,
    nu: i32,
}

impl RotationIndex {
    pub fn new(j: u32, mu: i32, nu: i32) -> Result<Self> {
        if mu.unsigned_abs() > j || nu.unsigned_abs() > j {
            return Err(Error::InvalidRotationIndex { j, mu, nu });
        }
        Ok(Self { j, mu, nu })
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn mu(&self) -> i32 {
        self.mu
    }

    pub fn nu(&self) -> i32 {
        self.nu
    }
}

/// Wigner small-d element `d^j_{μ,ν}(β)`.
pub fn wigner_d(index: RotationIndex, beta: f64) -> f64 {
    let ladder = wigner_d_ladder(index.mu, index.nu, beta, index.j);
    ladder[(index.j - ladder_start(index.mu, index.nu)) as usize]
}

fn ladder_start(mu: i32, nu: i32) -> u32 {
    mu.unsigned_abs().max(nu.unsigned_abs())
}

/// `d^j_{μ,ν}(β)` for `j = max(|μ|, |ν|) ..= j_max`. Empty when `j_max` is
/// below the starting rung.
pub fn wigner_d_ladder(mu: i32, nu: i32, beta: f64, j_max: u32) -> Vec<f64> {
    // d^j_{μ,ν} = (-1)^{μ-ν} d^j_{ν,μ}; keep |μ| >= |ν| so the seed below applies.
    if nu.unsigned_abs() > mu.unsigned_abs() {
        let sign = if (mu - nu).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let mut ladder = wigner_d_ladder(nu, mu, beta, j_max);
        ladder.iter_mut().for_each(|d| *d *= sign);
        return ladder;
    }

    let j0 = mu.unsigned_abs();
    if j_max < j0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity((j_max - j0 + 1) as usize);
    out.push(edge_element(j0, mu, nu, beta));
    if j_max == j0 {
        return out;
    }

    let cos_beta = beta.cos();
    let (muf, nuf) = (mu as f64, nu as f64);
    let mut prev = 0.0;
    let mut curr = out[0];
    let mut j = j0;
    if j0 == 0 {
        // μ = ν = 0: the general step divides by j, so take the first rung by hand.
        prev = curr;
        curr = cos_beta;
        out.push(curr);
        j = 1;
    }
    while j < j_max {
        let jf = j as f64;
        let jp = jf + 1.0;
        let lead = (2.0 * jf + 1.0) * (jf * jp * cos_beta - muf * nuf);
        let back = jp * ((jf * jf - muf * muf) * (jf * jf - nuf * nuf)).sqrt();
        let norm = jf * ((jp * jp - muf * muf) * (jp * jp - nuf * nuf)).sqrt();
        let next = (lead * curr - back * prev) / norm;
        prev = curr;
        curr = next;
        out.push(curr);
        j += 1;
    }
    out
}

/// Closed form for `|μ| = j ≥ |ν|`:
///
/// ```text
/// d^j_{ j,ν} = (-1)^{j-ν} √C(2j, j+ν) cos^{j+ν}(β/2) sin^{j-ν}(β/2)
/// d^j_{-j,ν} =            √C(2j, j-ν) cos^{j-ν}(β/2) sin^{j+ν}(β/2)
/// ```
fn edge_element(j: u32, mu: i32, nu: i32, beta: f64) -> f64 {
    let ji = j as i64;
    let nu = nu as i64;
    let (cos_pow, sin_pow, sign) = if mu >= 0 {
        let sign = if (ji - nu).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        (ji + nu, ji - nu, sign)
    } else {
        (ji - nu, ji + nu, 1.0)
    };
    let half = 0.5 * beta;
    let sqrt_binom = (0.5 * ln_binomial(2 * ji, ji + nu)).exp();
    sign * sqrt_binom * power(half.cos(), cos_pow) * power(half.sin(), sin_pow)
}

fn power(x: f64, n: i64) -> f64 {
    if n == 0 {
        1.0
    } else {
        x.powi(n as i32)
    }
}

fn ln_binomial(n: i64, k: i64) -> f64 {
    let k = k.min(n - k);
    (1..=k)
        .map(|i| (((n - k + i) as f64) / i as f64).ln())
        .sum()
}

/// Sign convention for the rotation elements entering `P(n)`.
///
/// Only squared elements contribute, so both conventions must yield the same
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationConvention {
    /// `d^j_{0,0}(β) = P_j(cos β)`.
    #[default]
    Standard,
    /// Elements of the inverse rotation, `d^j_{μ,ν}(-β) = (-1)^{μ-ν} d^j_{μ,ν}(β)`.
    Inverse,
}

/// Photon-count distribution at one output port together with the
/// probability mass dropped by truncating the twin-Fock sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonCountDistribution {
    probabilities: Vec<f64>,
    truncation_mass: f64,
}

impl PhotonCountDistribution {
    /// `P(n)` indexed by photon number `n`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, n: usize) -> f64 {
        self.probabilities.get(n).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probabilities.iter().copied().enumerate()
    }

    /// Upper bound on the probability of twin-Fock components left out.
    pub fn truncation_mass(&self) -> f64 {
        self.truncation_mass
    }

    pub fn max_photons(&self) -> usize {
        self.probabilities.len().saturating_sub(1)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn even_probability(&self) -> f64 {
        self.probabilities.iter().step_by(2).sum()
    }

    pub fn odd_probability(&self) -> f64 {
        self.probabilities.iter().skip(1).step_by(2).sum()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1e-3 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(epsilon))
    }
}

/// Photon-count distribution for interferometer phase θ, truncated so that
/// at most `epsilon` of probability mass is discarded.
pub fn photon_count_distribution(
    source: &TmsvSource,
    theta: impl Into<Phase>,
    epsilon: f64,
) -> Result<PhotonCountDistribution> {
    photon_count_distribution_with(source, theta, epsilon, RotationConvention::Standard)
}

pub fn photon_count_distribution_with(
    source: &TmsvSource,
    theta: impl Into<Phase>,
    epsilon: f64,
    convention: RotationConvention,
) -> Result<PhotonCountDistribution> {
    check_epsilon(epsilon)?;
    let beta = match convention {
        RotationConvention::Standard => theta.into().radians() + FRAC_PI_2,
        RotationConvention::Inverse => -(theta.into().radians() + FRAC_PI_2),
    };
    // Twin-Fock components m = 0..=top; the tail beyond carries t^(top+1) <= epsilon.
    let top = source.twin_fock_cutoff(epsilon);
    let weights: Vec<f64> = (0..=top).map(|m| source.twin_fock_weight(m)).collect();
    let truncation_mass = source.weight_ratio().powi(top as i32 + 1);

    let mut probabilities = vec![0.0; 2 * top as usize + 1];
    // n = m + μ with μ = n - m; walk each μ column up the ladder in m.
    for mu in -(top as i32)..=(top as i32) {
        let ladder = wigner_d_ladder(mu, 0, beta, top);
        let m0 = mu.unsigned_abs();
        for (offset, d) in ladder.into_iter().enumerate() {
            let m = m0 + offset as u32;
            let n = (m as i32 + mu) as usize;
            probabilities[n] += weights[m as usize] * d * d;
        }
    }
    Ok(PhotonCountDistribution {
        probabilities,
        truncation_mass,
    })
}

/// Even-outcome probability obtained by summing `P(2i)`.
pub fn even_probability_via_fock(
    source: &TmsvSource,
    theta: impl Into<Phase>,
    epsilon: f64,
) -> Result<f64> {
    Ok(photon_count_distribution(source, theta, epsilon)?.even_probability())
}
