use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("off-shell electron: energy {energy} MeV below mass {mass} MeV")]
    OffShell { energy: f64, mass: f64 },

    #[error("degenerate kinematics: {0}")]
    DegenerateKinematics(String),

    #[error("propagator on resonance: |q² - m²| = {0:e} MeV²")]
    OnResonance(f64),

    #[error("kinematically forbidden point: {0}")]
    Forbidden(String),

    #[error("invalid partial-transpose subset `{0}`")]
    InvalidSubset(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("monte carlo integration accepted no samples")]
    NoAcceptedSamples,

    #[error("solver did not converge after {iterations} iterations (gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },
}
