//! Ensemble statistics, `c/√M` scaling fits and unbiased-interval
//! classification.
//!
//! An ensemble is `N` independent records at one true phase, each reduced
//! to a phase estimate. Its spread `Δφ̄` is the sensitivity figure; fitting
//! `Δφ̄ = c/√M` over several record lengths yields the coefficient compared
//! against the Cramér-Rao, shot-noise and Heisenberg baselines.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{LikelihoodTable, PhaseGrid};
use crate::model::{Phase, TmsvSource};
use crate::rng::derive_seed;
use crate::simulate::{check_true_phase, draw_even_count, MeasurementRecord};

/// Record lengths used for scaling fits, at half-decade spacing.
pub const DEFAULT_SCALING_LENGTHS: [u64; 5] = [100, 316, 1000, 3162, 10_000];

pub const DEFAULT_ENSEMBLE_SIZE: u64 = 10_000;

/// How a posterior is reduced to a point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Posterior maximum.
    #[default]
    Map,
    PosteriorMean,
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "map" => Ok(Estimator::Map),
            "posterior-mean" => Ok(Estimator::PosteriorMean),
            other => Err(format!(
                "unknown estimator {other:?} (expected map or posterior-mean)"
            )),
        }
    }
}

impl Estimator {
    fn estimate(self, table: &LikelihoodTable, record: &MeasurementRecord) -> f64 {
        match self {
            Estimator::Map => table.map_estimate(record).value().radians(),
            Estimator::PosteriorMean => table.posterior(record).mean(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub theta_true: Phase,
    pub source: TmsvSource,
    pub record_length: u64,
    pub ensemble_size: u64,
    pub master_seed: u64,
    pub grid: PhaseGrid,
    pub estimator: Estimator,
}

impl EnsembleConfig {
    pub fn new(
        theta_true: impl Into<Phase>,
        source: TmsvSource,
        record_length: u64,
        ensemble_size: u64,
        master_seed: u64,
    ) -> Result<Self> {
        let config = Self {
            theta_true: theta_true.into(),
            source,
            record_length,
            ensemble_size,
            master_seed,
            grid: PhaseGrid::default(),
            estimator: Estimator::Map,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_grid(mut self, grid: PhaseGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_true_phase(self.theta_true)?;
        if self.record_length == 0 {
            return Err(Error::EmptyRecord);
        }
        if self.ensemble_size < 2 {
            return Err(Error::EnsembleTooSmall(self.ensemble_size));
        }
        Ok(())
    }
}

/// Phase estimates from one ensemble with their summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateEnsemble {
    theta_true: Phase,
    estimates: Vec<f64>,
    mean: f64,
    std_dev: f64,
}

impl EstimateEnsemble {
    /// Summarises a list of estimates. The standard deviation uses `N - 1`.
    pub fn from_estimates(theta_true: impl Into<Phase>, estimates: Vec<f64>) -> Result<Self> {
        if estimates.len() < 2 {
            return Err(Error::EnsembleTooSmall(estimates.len() as u64));
        }
        let n = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / n;
        let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self {
            theta_true: theta_true.into(),
            estimates,
            mean,
            std_dev: var.sqrt(),
        })
    }

    pub fn theta_true(&self) -> Phase {
        self.theta_true
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    pub fn bias(&self) -> f64 {
        bias(self, self.theta_true)
    }
}

/// `|φ̄ - θ|`.
pub fn bias(ensemble: &EstimateEnsemble, theta_true: impl Into<Phase>) -> f64 {
    (ensemble.mean - theta_true.into().radians()).abs()
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EstimateEnsemble> {
    let table = LikelihoodTable::new(config.source, config.grid);
    run_ensemble_with_table(config, &table)
}

/// Runs an ensemble against a prebuilt table, which must match the
/// configured source and grid.
///
/// Record `i` uses seed `derive_seed(master_seed, i)`. The estimate of a
/// record depends only on its even count, so each distinct count is reduced
/// once and shared.
pub fn run_ensemble_with_table(
    config: &EnsembleConfig,
    table: &LikelihoodTable,
) -> Result<EstimateEnsemble> {
    config.validate()?;
    debug_assert_eq!(table.source(), config.source);
    debug_assert_eq!(table.grid(), config.grid);
    let p_even = config.source.even_probability(config.theta_true);
    let counts: Vec<u64> = (0..config.ensemble_size)
        .into_par_iter()
        .map(|i| {
            draw_even_count(
                p_even,
                config.record_length,
                derive_seed(config.master_seed, i),
            )
            .map(|r| r.even_count())
        })
        .collect::<Result<_>>()?;

    let mut distinct = counts.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let by_count: HashMap<u64, f64> = distinct
        .into_par_iter()
        .map(|m| {
            let record = MeasurementRecord::new(m, config.record_length)?;
            Ok((m, config.estimator.estimate(table, &record)))
        })
        .collect::<Result<_>>()?;

    let estimates = counts.iter().map(|m| by_count[m]).collect();
    EstimateEnsemble::from_estimates(config.theta_true, estimates)
}

/// Least-squares fit of `Δφ = c/√M` through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    points: Vec<(u64, f64)>,
    c: f64,
    r_squared: f64,
}

impl ScalingFit {
    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `1 - SS_res / SS_tot` with `SS_tot` taken about the mean of `Δφ`.
    ///
    /// Can be negative when the model fits worse than a constant, and is
    /// `-∞` when every `Δφ` is identical but the model is not exact.
    pub fn r_squared(&self) -> f64 {
        self.r_squared
    }

    pub fn predict(&self, record_length: u64) -> f64 {
        self.c / (record_length as f64).sqrt()
    }
}

/// Fits `c` as `Σ yᵢxᵢ / Σ xᵢ²` with `xᵢ = 1/√Mᵢ`.
pub fn fit_scaling(points: &[(u64, f64)]) -> Result<ScalingFit> {
    for &(m, y) in points {
        if m == 0 || !(y.is_finite() && y > 0.0) {
            return Err(Error::InvalidFitPoint {
                record_length: m,
                delta_phi: y,
            });
        }
    }
    let mut lengths: Vec<u64> = points.iter().map(|p| p.0).collect();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(Error::DegenerateFit(lengths.len()));
    }

    let xs: Vec<f64> = points
        .iter()
        .map(|&(m, _)| (m as f64).sqrt().recip())
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let c = sxy / sxx;

    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - c * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(ScalingFit {
        points: points.to_vec(),
        c,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Unbiased,
    Biased,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Unbiased => "unbiased",
            Verdict::Biased => "biased",
        })
    }
}

/// Decision rule for [`classify_interval`]: unbiased iff the fit explains at
/// least `min_r_squared` of the variance and `c_tmsv / c_crb` falls inside
/// `[ratio_min, ratio_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyThresholds {
    pub min_r_squared: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            min_r_squared: 0.95,
            ratio_min: 0.7,
            ratio_max: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalVerdict {
    pub theta: Phase,
    pub verdict: Verdict,
    pub c_tmsv: f64,
    /// Absent where the bound diverges.
    pub c_crb: Option<f64>,
    pub r_squared: f64,
}

impl IntervalVerdict {
    pub fn ratio(&self) -> Option<f64> {
        self.c_crb.map(|crb| self.c_tmsv / crb)
    }
}

pub fn classify_interval(
    theta: impl Into<Phase>,
    fit: &ScalingFit,
    c_crb: Option<f64>,
    thresholds: &ClassifyThresholds,
) -> IntervalVerdict {
    let fits = fit.r_squared >= thresholds.min_r_squared;
    let near_bound = c_crb
        .map(|crb| fit.c / crb)
        .is_some_and(|r| (thresholds.ratio_min..=thresholds.ratio_max).contains(&r));
    IntervalVerdict {
        theta: theta.into(),
        verdict: if fits && near_bound {
            Verdict::Unbiased
        } else {
            Verdict::Biased
        },
        c_tmsv: fit.c,
        c_crb,
        r_squared: fit.r_squared,
    }
}

/// Everything an ensemble scan needs besides the phase, source and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub ensemble_size: u64,
    pub master_seed: u64,
    pub grid: PhaseGrid,
    pub estimator: Estimator,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            master_seed: 0,
            grid: PhaseGrid::default(),
            estimator: Estimator::Map,
        }
    }
}

impl ScanSettings {
    fn ensemble(
        &self,
        theta: Phase,
        source: TmsvSource,
        record_length: u64,
        master_seed: u64,
    ) -> Result<EnsembleConfig> {
        Ok(EnsembleConfig::new(
            theta,
            source,
            record_length,
            self.ensemble_size,
            master_seed,
        )?
        .with_grid(self.grid)
        .with_estimator(self.estimator))
    }
}

/// Summary of one ensemble in a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleRow {
    pub theta: Phase,
    pub nbar: f64,
    pub record_length: u64,
    pub ensemble_size: u64,
    pub mean_phi: f64,
    pub std_phi: f64,
    pub bias: f64,
}

impl EnsembleRow {
    fn from_ensemble(config: &EnsembleConfig, ensemble: &EstimateEnsemble) -> Self {
        Self {
            theta: config.theta_true,
            nbar: config.source.mean_photons(),
            record_length: config.record_length,
            ensemble_size: config.ensemble_size,
            mean_phi: ensemble.mean(),
            std_phi: ensemble.std_dev(),
            bias: ensemble.bias(),
        }
    }
}

/// Ensembles over every `(θ, M)` pair, θ-major.
///
/// Cell `k` in that order runs with master seed `derive_seed(master_seed, k)`.
pub fn scan_bias(
    thetas: &[Phase],
    source: TmsvSource,
    record_lengths: &[u64],
    settings: &ScanSettings,
) -> Result<Vec<EnsembleRow>> {
    let table = LikelihoodTable::new(source, settings.grid);
    let cells: Vec<(Phase, u64)> = thetas
        .iter()
        .flat_map(|&t| record_lengths.iter().map(move |&m| (t, m)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(k, &(theta, m))| {
            let config = settings.ensemble(
                theta,
                source,
                m,
                derive_seed(settings.master_seed, k as u64),
            )?;
            let ensemble = run_ensemble_with_table(&config, &table)?;
            Ok(EnsembleRow::from_ensemble(&config, &ensemble))
        })
        .collect()
}

/// Ensembles at several record lengths for one `(θ, n̄)`, the `c/√M` fit,
/// and its classification.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub rows: Vec<EnsembleRow>,
    pub fit: ScalingFit,
    pub verdict: IntervalVerdict,
    pub c_sn: f64,
    pub c_hl: f64,
}

/// Runs [`scan_bias`] over `record_lengths` at a single phase, then fits and
/// classifies the resulting standard deviations.
pub fn scaling_study(
    theta: impl Into<Phase>,
    source: TmsvSource,
    record_lengths: &[u64],
    settings: &ScanSettings,
    thresholds: &ClassifyThresholds,
) -> Result<ScalingStudy> {
    let theta = theta.into();
    let rows = scan_bias(&[theta], source, record_lengths, settings)?;
    let points: Vec<(u64, f64)> = rows.iter().map(|r| (r.record_length, r.std_phi)).collect();
    let fit = fit_scaling(&points)?;
    let verdict = classify_interval(theta, &fit, source.crb_c(theta).ok(), thresholds);
    Ok(ScalingStudy {
        rows,
        fit,
        verdict,
        c_sn: source.shot_noise_c(),
        c_hl: source.heisenberg_c(),
    })
}

/// Fitted and baseline coefficients for one mean photon number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityRow {
    pub theta: Phase,
    pub nbar: f64,
    pub ensemble_size: u64,
    pub c_tmsv: f64,
    pub c_crb: Option<f64>,
    pub c_sn: f64,
    pub c_hl: f64,
    pub r_squared: f64,
    pub verdict: Verdict,
}

/// One [`scaling_study`] per mean photon number. Study `a` runs with master
/// seed `derive_seed(master_seed, a)`.
pub fn scan_intensity(
    theta: impl Into<Phase>,
    nbars: &[f64],
    record_lengths: &[u64],
    settings: &ScanSettings,
    thresholds: &ClassifyThresholds,
) -> Result<Vec<IntensityRow>> {
    let theta = theta.into();
    nbars
        .par_iter()
        .enumerate()
        .map(|(a, &nbar)| {
            let source = TmsvSource::new(nbar)?;
            let cell = ScanSettings {
                master_seed: derive_seed(settings.master_seed, a as u64),
                ..*settings
            };
            let study = scaling_study(theta, source, record_lengths, &cell, thresholds)?;
            Ok(IntensityRow {
                theta,
                nbar,
                ensemble_size: settings.ensemble_size,
                c_tmsv: study.fit.c(),
                c_crb: study.verdict.c_crb,
                c_sn: study.c_sn,
                c_hl: study.c_hl,
                r_squared: study.fit.r_squared(),
                verdict: study.verdict.verdict,
            })
        })
        .collect()
}
