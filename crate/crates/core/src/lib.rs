//! Phase estimation with a two-mode squeezed-vacuum interferometer read out
//! by photon-number parity.
//!
//! - [`model`]: closed-form parity signal, outcome probabilities and bounds.
//! - [`fock_oracle`]: independent photon-count evaluation via Wigner rotation
//!   matrices.
//! - [`simulate`]: seeded parity records.
//! - [`inference`]: grid posterior, MAP and credible intervals.
//! - [`analysis`]: ensembles, bias and scaling studies.
//! - [`cli`]: the batch runner behind the `tmsv-phase` binary.
//!
//! ```
//! use tmsv_phase::{TmsvSource, Phase};
//!
//! let source = TmsvSource::new(3.0).unwrap();
//! let parity = source.parity_expectation(Phase::from(0.1));
//! assert!((parity - 0.9327073225302869).abs() < 1e-15);
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fock_oracle;
pub mod inference;
pub mod model;
pub mod rng;
pub mod simulate;

pub use analysis::{
    classify_interval, fit_scaling, run_ensemble, scaling_study, scan_bias, scan_intensity,
    ClassifyThresholds, EnsembleConfig, EstimateEnsemble, Estimator, ScalingFit, ScanSettings,
    Verdict,
};
pub use error::{Error, Result};
pub use fock_oracle::{
    photon_count_distribution, wigner_d, PhotonCountDistribution, RotationIndex,
};
pub use inference::{LikelihoodTable, PhaseEstimate, PhaseGrid, Posterior};
pub use model::{Phase, SensitivityBounds, TmsvSource};
pub use simulate::{draw_record, parity_trace, ConvergenceTrace, MeasurementRecord, RecordConfig};
