mod common;

use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use tmsv_phase::analysis::{run_ensemble, EnsembleConfig};
use tmsv_phase::fock_oracle::{photon_count_distribution, wigner_d_ladder};
use tmsv_phase::inference::{LikelihoodTable, PhaseGrid};
use tmsv_phase::{MeasurementRecord, TmsvSource};

fn three() -> TmsvSource {
    TmsvSource::new(3.0).unwrap()
}

fn table() -> LikelihoodTable {
    LikelihoodTable::new(three(), PhaseGrid::default())
}

#[test]
fn grid_shape() {
    let grid = PhaseGrid::default();
    assert_eq!(grid.len(), 16384);
    assert!(grid.first() > 0.0);
    assert_eq!(grid.point(grid.len() - 1), FRAC_PI_2);
    let pts: Vec<f64> = grid.points().collect();
    assert!(pts.windows(2).all(|w| w[1] > w[0]));
    assert!(pts
        .windows(2)
        .all(|w| ((w[1] - w[0]) - grid.step()).abs() < 1e-15));
}

#[test]
fn likelihood_table_entries() {
    let t = table();
    let last = t.log_even().len() - 1;
    assert!((t.log_even()[last] - 0.625f64.ln()).abs() < 1e-14);
    for (i, phi) in t.grid().points().enumerate() {
        let (e, o) = (t.log_even()[i], t.log_odd()[i]);
        assert!(e.is_finite() && o.is_finite());
        assert!((e.exp() + o.exp() - 1.0).abs() < 1e-12);
        let direct = three().even_probability(phi).ln();
        assert!((e - direct).abs() <= 1e-14 * direct.abs().max(1e-300));
    }
    assert!(t.log_even().windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn posterior_normalization() {
    let t = table();
    for len in [1, 10, 1_000, 100_000] {
        for m in common::sampled_counts(len) {
            let post = t.posterior(&MeasurementRecord::new(m, len).unwrap());
            let d = post.density();
            assert!(d.iter().all(|&x| x >= 0.0));
            let integral = d.iter().sum::<f64>() * t.grid().step();
            assert!((integral - 1.0).abs() <= 1e-9, "m={m} M={len}: {integral}");
        }
    }
}

#[test]
fn posterior_unimodal() {
    let t = table();
    for len in [1, 10, 200, 1_000, 100_000] {
        for m in common::sampled_counts(len) {
            let post = t.posterior(&MeasurementRecord::new(m, len).unwrap());
            assert_eq!(common::local_maxima(post.log_weight()), 1, "m={m} M={len}");
        }
    }
}

#[test]
fn all_even_record_peaks_at_first_point() {
    let t = table();
    let post = t.posterior(&MeasurementRecord::new(1000, 1000).unwrap());
    assert_eq!(post.map_estimate().grid_index(), 0);
    assert!(post.log_weight().windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn analytic_mode_agreement() {
    let t = table();
    let records = common::interior_records(&three(), t.grid(), 100, 7);
    assert_eq!(common::mode_violations(&t, &records), 0);
}

#[test]
fn broadening_with_fewer_even_counts() {
    let t = table();
    let width = |m| {
        let post = t.posterior(&MeasurementRecord::new(m, 200).unwrap());
        let (lo, hi) = post.credible_interval(0.68).unwrap();
        hi.radians() - lo.radians()
    };
    assert!(width(150) > width(175));
    assert!(width(175) > width(200));
}

#[test]
fn full_mass_spans_grid() {
    let t = table();
    let post = t.posterior(&MeasurementRecord::new(120, 200).unwrap());
    let (lo, hi) = post.credible_interval(1.0).unwrap();
    assert_eq!(lo.radians(), t.grid().first());
    assert_eq!(hi.radians(), FRAC_PI_2);
}

#[test]
fn interval_shrinks_with_record_length() {
    let t = table();
    let p = three().even_probability(0.3);
    let width = |len: u64| {
        let m = (p * len as f64).round() as u64;
        let post = t.posterior(&MeasurementRecord::new(m, len).unwrap());
        let (lo, hi) = post.credible_interval(0.68).unwrap();
        hi.radians() - lo.radians()
    };
    assert!(width(10_000) < width(100));
}

#[test]
fn wigner_rows_are_unit_vectors() {
    for beta in [0.2, 0.9, 1.6, 2.8] {
        for j in [0u32, 1, 5, 17, 40] {
            let ji = j as i32;
            for mu in -ji..=ji {
                let norm: f64 = (-ji..=ji)
                    .map(|nu| wigner_d_ladder(mu, nu, beta, j).last().unwrap().powi(2))
                    .sum();
                assert!(
                    (norm - 1.0).abs() < 1e-8,
                    "j={j} mu={mu} beta={beta}: {norm}"
                );
            }
        }
    }
}

#[test]
fn photon_counts_sum_to_retained_mass() {
    for nbar in [0.5, 3.0, 10.0] {
        let s = TmsvSource::new(nbar).unwrap();
        for theta in [0.0, 0.4, 1.2] {
            let d = photon_count_distribution(&s, theta, 1e-8).unwrap();
            assert!((d.total() + d.truncation_mass() - 1.0).abs() < 1e-10);
            assert!(d.probabilities().iter().all(|&p| p >= -1e-15));
        }
    }
}

#[test]
fn ensemble_seed_determinism() {
    let cfg = EnsembleConfig::new(0.4, three(), 300, 500, 11).unwrap();
    let a = run_ensemble(&cfg).unwrap();
    let b = run_ensemble(&cfg).unwrap();
    assert_eq!(a, b);
    let other = EnsembleConfig {
        master_seed: 12,
        ..cfg
    };
    assert_ne!(a.estimates(), run_ensemble(&other).unwrap().estimates());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_is_posterior_argmax(len in 1u64..5000, frac in 0.0f64..=1.0) {
        let t = LikelihoodTable::new(three(), PhaseGrid::new(2048).unwrap());
        let m = (frac * len as f64).round() as u64;
        let post = t.posterior(&MeasurementRecord::new(m, len).unwrap());
        let est = post.map_estimate();
        let d = post.density();
        let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(d[est.grid_index()], max);
        prop_assert!(d[..est.grid_index()].iter().all(|&x| x < max));
    }

    #[test]
    fn credible_interval_holds_mass(len in 1u64..5000, frac in 0.0f64..=1.0, mass in 0.05f64..0.99) {
        let t = LikelihoodTable::new(three(), PhaseGrid::new(2048).unwrap());
        let m = (frac * len as f64).round() as u64;
        let post = t.posterior(&MeasurementRecord::new(m, len).unwrap());
        let (lo, hi) = post.credible_interval(mass).unwrap();
        let step = t.grid().step();
        let inside: f64 = post
            .iter()
            .filter(|&(phi, _)| phi >= lo.radians() - step / 2.0 && phi <= hi.radians() + step / 2.0)
            .map(|(_, d)| d * step)
            .sum();
        prop_assert!(inside >= mass - 1e-9);
        let map = post.map_estimate().value().radians();
        prop_assert!(lo.radians() <= map && map <= hi.radians());
    }
}
