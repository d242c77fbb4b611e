//! Seeded generation of finite parity-measurement records.
//!
//! A record is `M` independent detections at a fixed true phase; each is
//! even with probability [`TmsvSource::even_probability`]. Only the even
//! count is kept since the likelihood depends on nothing else.
//!
//! Two sampling paths exist. [`draw_record`] and [`parity_trace`] walk the
//! Bernoulli stream outcome by outcome and agree exactly for a given seed.
//! [`draw_even_count`] draws the count as one binomial variate and is what
//! ensembles use. The two paths agree in distribution, not per seed.

use rand_distr::{Binomial, Distribution};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::model::{Phase, TmsvSource};
pub use crate::rng::derive_seed;
use crate::rng::Xoshiro256StarStar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordConfig {
    theta_true: Phase,
    source: TmsvSource,
    record_length: u64,
    seed: u64,
}

impl RecordConfig {
    pub fn new(
        theta_true: impl Into<Phase>,
        source: TmsvSource,
        record_length: u64,
        seed: u64,
    ) -> Result<Self> {
        let theta_true = check_true_phase(theta_true.into())?;
        if record_length == 0 {
            return Err(Error::EmptyRecord);
        }
        Ok(Self {
            theta_true,
            source,
            record_length,
            seed,
        })
    }

    pub fn theta_true(&self) -> Phase {
        self.theta_true
    }

    pub fn source(&self) -> TmsvSource {
        self.source
    }

    pub fn record_length(&self) -> u64 {
        self.record_length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn even_probability(&self) -> f64 {
        self.source.even_probability(self.theta_true)
    }
}

/// True phases are confined to `[0, π/2]`. The endpoint is accepted with a
/// few ulps of slack so that `FRAC_PI_2` from user input passes.
pub(crate) fn check_true_phase(theta: Phase) -> Result<Phase> {
    let t = theta.radians();
    if !t.is_finite() {
        return Err(Error::NonFinitePhase(t));
    }
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&t) {
        return Err(Error::PhaseOutOfRange(t));
    }
    Ok(theta)
}

/// `m` even outcomes out of `M` detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeasurementRecord {
    even_count: u64,
    record_length: u64,
}

impl MeasurementRecord {
    pub fn new(even_count: u64, record_length: u64) -> Result<Self> {
        if record_length == 0 {
            return Err(Error::EmptyRecord);
        }
        if even_count > record_length {
            return Err(Error::EvenCountExceedsLength {
                even_count,
                record_length,
            });
        }
        Ok(Self {
            even_count,
            record_length,
        })
    }

    pub fn even_count(&self) -> u64 {
        self.even_count
    }

    pub fn odd_count(&self) -> u64 {
        self.record_length - self.even_count
    }

    pub fn record_length(&self) -> u64 {
        self.record_length
    }

    /// Inferred parity signal `(2m - M) / M`.
    pub fn parity(&self) -> f64 {
        (2.0 * self.even_count as f64 - self.record_length as f64) / self.record_length as f64
    }
}

/// Running parity estimate after each detection, `(2 m_k - k) / k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    running_parity: Vec<f64>,
}

impl ConvergenceTrace {
    pub fn running_parity(&self) -> &[f64] {
        &self.running_parity
    }

    pub fn len(&self) -> usize {
        self.running_parity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.running_parity.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.running_parity.last().copied()
    }

    /// `(k, parity)` pairs with `k` starting at 1.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.running_parity
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as u64 + 1, p))
    }
}

fn bernoulli_stream(p_even: f64, seed: u64) -> impl Iterator<Item = bool> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    std::iter::repeat_with(move || rng.next_f64() < p_even)
}

/// Record drawn outcome by outcome from the Bernoulli stream.
pub fn draw_record(config: &RecordConfig) -> MeasurementRecord {
    let even = bernoulli_stream(config.even_probability(), config.seed)
        .take(config.record_length as usize)
        .filter(|&e| e)
        .count() as u64;
    MeasurementRecord {
        even_count: even,
        record_length: config.record_length,
    }
}

/// Running parity over the same Bernoulli stream as [`draw_record`].
pub fn parity_trace(config: &RecordConfig) -> ConvergenceTrace {
    let mut even = 0u64;
    let running_parity = bernoulli_stream(config.even_probability(), config.seed)
        .take(config.record_length as usize)
        .enumerate()
        .map(|(i, e)| {
            even += e as u64;
            let k = (i + 1) as f64;
            (2.0 * even as f64 - k) / k
        })
        .collect();
    ConvergenceTrace { running_parity }
}

/// Even count drawn as a single `Binomial(M, p_even)` variate.
///
/// Takes the probability directly so callers (and tests) can inject any
/// outcome law, including the degenerate `p_even = 0`.
pub fn draw_even_count(p_even: f64, record_length: u64, seed: u64) -> Result<MeasurementRecord> {
    if !(0.0..=1.0).contains(&p_even) {
        return Err(Error::InvalidProbability(p_even));
    }
    if record_length == 0 {
        return Err(Error::EmptyRecord);
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let even_count = Binomial::new(record_length, p_even)
        .map_err(|_| Error::InvalidProbability(p_even))?
        .sample(&mut rng);
    Ok(MeasurementRecord {
        even_count,
        record_length,
    })
}

/// Binomial fast path for a configured record.
pub fn draw_record_fast(config: &RecordConfig) -> MeasurementRecord {
    draw_even_count(config.even_probability(), config.record_length, config.seed)
        .expect("even probability of a valid source lies in [0.5, 1]")
}
