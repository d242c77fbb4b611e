//! Bayesian phase inference on a uniform grid over `(0, π/2]`.
//!
//! With a flat prior, the posterior after a record with `m` even outcomes
//! out of `M` is
//!
//! ```text
//! P(φ | m) ∝ P_e(φ)^m P_o(φ)^(M-m)
//! ```
//!
//! It is evaluated in log space against a [`LikelihoodTable`] holding
//! `ln P_e` and `ln P_o` at every grid point, so one table per source serves
//! any number of records.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::model::{Phase, TmsvSource};
use crate::simulate::MeasurementRecord;

pub const DEFAULT_GRID_RESOLUTION: usize = 16_384;

/// Uniform grid `φ_i = i·π/(2G)`, `i = 1..=G`. Excludes 0, ends at π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseGrid {
    resolution: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_GRID_RESOLUTION,
        }
    }
}

impl PhaseGrid {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::EmptyGrid);
        }
        Ok(Self { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        FRAC_PI_2 / self.resolution as f64
    }

    /// Grid point `index` (zero-based). The last point is exactly π/2.
    #[inline]
    pub fn point(&self, index: usize) -> f64 {
        if index + 1 == self.resolution {
            FRAC_PI_2
        } else {
            (index + 1) as f64 * self.step()
        }
    }

    pub fn first(&self) -> f64 {
        self.point(0)
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.resolution).map(move |i| self.point(i))
    }
}

/// `ln P_e` and `ln P_o` tabulated on a grid for one source. Immutable once
/// built and shareable across threads.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    source: TmsvSource,
    grid: PhaseGrid,
    log_even: Vec<f64>,
    log_odd: Vec<f64>,
}

impl LikelihoodTable {
    pub fn new(source: TmsvSource, grid: PhaseGrid) -> Self {
        let (log_even, log_odd) = grid
            .points()
            .map(|phi| {
                (
                    source.even_probability(phi).ln(),
                    source.odd_probability(phi).ln(),
                )
            })
            .unzip();
        Self {
            source,
            grid,
            log_even,
            log_odd,
        }
    }

    pub fn source(&self) -> TmsvSource {
        self.source
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    pub fn log_even(&self) -> &[f64] {
        &self.log_even
    }

    pub fn log_odd(&self) -> &[f64] {
        &self.log_odd
    }

    #[inline]
    fn log_likelihood_at(&self, i: usize, even: f64, odd: f64) -> f64 {
        even * self.log_even[i] + odd * self.log_odd[i]
    }

    /// Unnormalised log posterior at every grid point.
    pub fn log_likelihood(&self, record: &MeasurementRecord) -> Vec<f64> {
        let (even, odd) = (record.even_count() as f64, record.odd_count() as f64);
        (0..self.grid.len())
            .map(|i| self.log_likelihood_at(i, even, odd))
            .collect()
    }

    /// MAP estimate without materialising the posterior.
    pub fn map_estimate(&self, record: &MeasurementRecord) -> PhaseEstimate {
        let (even, odd) = (record.even_count() as f64, record.odd_count() as f64);
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for i in 0..self.grid.len() {
            let v = self.log_likelihood_at(i, even, odd);
            // strict: ties resolve to the smallest phase
            if v > best_value {
                best_value = v;
                best = i;
            }
        }
        PhaseEstimate::at(self.grid, best)
    }

    pub fn posterior(&self, record: &MeasurementRecord) -> Posterior {
        Posterior::from_log_likelihood(self.grid, self.log_likelihood(record))
    }
}

/// Posterior density over a [`PhaseGrid`], normalised so that
/// `Σ density_i · Δφ = 1`.
#[derive(Debug, Clone)]
pub struct Posterior {
    grid: PhaseGrid,
    /// log density, shifted so the maximum is 0
    log_weight: Vec<f64>,
    /// `Σ exp(log_weight) · Δφ`
    norm: f64,
}

impl Posterior {
    fn from_log_likelihood(grid: PhaseGrid, mut log_weight: Vec<f64>) -> Self {
        let max = log_weight.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        log_weight.iter_mut().for_each(|v| *v -= max);
        let norm = log_weight.iter().map(|v| v.exp()).sum::<f64>() * grid.step();
        Self {
            grid,
            log_weight,
            norm,
        }
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    /// Log density up to an additive constant; the maximum is 0.
    pub fn log_weight(&self) -> &[f64] {
        &self.log_weight
    }

    pub fn density_at(&self, index: usize) -> f64 {
        self.log_weight[index].exp() / self.norm
    }

    pub fn density(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.density_at(i)).collect()
    }

    /// `(φ, density)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.grid.len()).map(|i| (self.grid.point(i), self.density_at(i)))
    }

    /// Probability mass in each grid cell.
    fn cell_masses(&self) -> Vec<f64> {
        let step = self.grid.step();
        (0..self.grid.len())
            .map(|i| self.density_at(i) * step)
            .collect()
    }

    pub fn map_estimate(&self) -> PhaseEstimate {
        let mut best = 0;
        for (i, &v) in self.log_weight.iter().enumerate() {
            if v > self.log_weight[best] {
                best = i;
            }
        }
        PhaseEstimate::at(self.grid, best)
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(phi, d)| phi * d).sum::<f64>() * self.grid.step()
    }

    /// Shortest run of consecutive grid points holding at least `mass` of
    /// the posterior. Returns the phases of its first and last points. Among
    /// runs of equal length the heaviest wins, then the leftmost.
    pub fn credible_interval(&self, mass: f64) -> Result<(Phase, Phase)> {
        if !(mass > 0.0 && mass <= 1.0) {
            return Err(Error::InvalidMass(mass));
        }
        if mass == 1.0 {
            // Cells that underflowed to zero still carry positive mass.
            return Ok((
                Phase::from(self.grid.first()),
                Phase::from(self.grid.point(self.grid.len() - 1)),
            ));
        }
        let cells = self.cell_masses();
        let total: f64 = cells.iter().sum();
        let target = mass * total;
        let mut best = (0, cells.len() - 1);
        let mut best_mass = total;
        let mut window = 0.0;
        let mut lo = 0;
        for (hi, &c) in cells.iter().enumerate() {
            window += c;
            while lo < hi && window - cells[lo] >= target {
                window -= cells[lo];
                lo += 1;
            }
            let width = hi - lo;
            let best_width = best.1 - best.0;
            if window >= target
                && (width < best_width || (width == best_width && window > best_mass))
            {
                best = (lo, hi);
                best_mass = window;
            }
        }
        Ok((
            Phase::from(self.grid.point(best.0)),
            Phase::from(self.grid.point(best.1)),
        ))
    }
}

/// A grid point chosen as the phase estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    value: Phase,
    grid_index: usize,
}

impl PhaseEstimate {
    fn at(grid: PhaseGrid, grid_index: usize) -> Self {
        Self {
            value: Phase::from(grid.point(grid_index)),
            grid_index,
        }
    }

    pub fn value(&self) -> Phase {
        self.value
    }

    pub fn grid_index(&self) -> usize {
        self.grid_index
    }
}
