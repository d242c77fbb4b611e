use thiserror::Error;

/// Errors raised by the library. All of them describe invalid inputs or
/// undefined evaluations; none are transient.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mean photon number must be positive and finite, got {0}")]
    InvalidMeanPhotons(f64),

    #[error("phase must be finite, got {0}")]
    NonFinitePhase(f64),

    #[error("true phase {0} lies outside [0, pi/2]")]
    PhaseOutOfRange(f64),

    /// The Cramér-Rao bound diverges where cos(theta) vanishes.
    #[error("Cramér-Rao bound is singular at theta = {theta}")]
    SingularBound { theta: f64 },

    #[error("invalid rotation index j={j}, mu={mu}, nu={nu}: need |mu| <= j and |nu| <= j")]
    InvalidRotationIndex { j: u32, mu: i32, nu: i32 },

    #[error("truncation epsilon {0} outside (0, 1e-3]")]
    EpsilonOutOfRange(f64),

    #[error("record length must be at least 1")]
    EmptyRecord,

    #[error("even count {even_count} exceeds record length {record_length}")]
    EvenCountExceedsLength { even_count: u64, record_length: u64 },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("phase grid resolution must be at least 1")]
    EmptyGrid,

    #[error("credible mass {0} outside (0, 1]")]
    InvalidMass(f64),

    #[error("ensemble size must be at least 2, got {0}")]
    EnsembleTooSmall(u64),

    #[error("scaling fit needs at least 3 distinct record lengths, got {0}")]
    DegenerateFit(usize),

    #[error("scaling fit point (M={record_length}, delta_phi={delta_phi}) is not usable")]
    InvalidFitPoint { record_length: u64, delta_phi: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
