#![allow(dead_code)]

use tmsv_phase::inference::{LikelihoodTable, PhaseGrid};
use tmsv_phase::rng::Xoshiro256StarStar;
use tmsv_phase::{MeasurementRecord, TmsvSource};

/// Local maxima of a sequence, with runs of equal values counted once and
/// the endpoints eligible.
pub fn local_maxima(values: &[f64]) -> usize {
    let mut runs: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    (0..runs.len())
        .filter(|&i| {
            let left = i == 0 || runs[i - 1] < runs[i];
            let right = i + 1 == runs.len() || runs[i + 1] < runs[i];
            left && right
        })
        .count()
}

/// Largest `|dP_e/dφ|` over the grid.
pub fn max_even_slope(source: &TmsvSource, grid: PhaseGrid) -> f64 {
    grid.points()
        .map(|phi| 0.5 * source.parity_derivative(phi).abs())
        .fold(0.0, f64::max)
}

/// Random `(m, M)` pairs whose posterior mode lies strictly inside the grid.
pub fn interior_records(
    source: &TmsvSource,
    grid: PhaseGrid,
    count: usize,
    seed: u64,
) -> Vec<MeasurementRecord> {
    let hi = source.even_probability(grid.first());
    let lo = source.even_probability(std::f64::consts::FRAC_PI_2);
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = 10f64.powf(1.0 + 4.0 * rng.next_f64()).round() as u64;
        let m = (rng.next_f64() * (len + 1) as f64) as u64;
        let frac = m as f64 / len as f64;
        if frac > lo && frac < hi {
            out.push(MeasurementRecord::new(m.min(len), len).unwrap());
        }
    }
    out
}

/// Violations of `|P_e(φ̂) - m/M| <= 2 · step · max|dP_e/dφ|` over `records`.
pub fn mode_violations(table: &LikelihoodTable, records: &[MeasurementRecord]) -> usize {
    let source = table.source();
    let grid = table.grid();
    let tol = 2.0 * grid.step() * max_even_slope(&source, grid);
    records
        .iter()
        .filter(|r| {
            let phi = table.map_estimate(r).value();
            let frac = r.even_count() as f64 / r.record_length() as f64;
            (source.even_probability(phi) - frac).abs() > tol
        })
        .count()
}

/// Even counts spread over `0..=M`, endpoints included.
pub fn sampled_counts(record_length: u64) -> Vec<u64> {
    let mut counts: Vec<u64> = (0..=20).map(|k| record_length * k / 20).collect();
    counts.dedup();
    counts
}
