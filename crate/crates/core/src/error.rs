use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected}, found {found}")]
    Dimension {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is numerically singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("Sylvester equation is unsolvable: spectra of the coefficients overlap (pivot {pivot:.3e})")]
    SpectralOverlap { pivot: f64 },

    #[error("invalid spectral data: {0}")]
    InvalidData(#[from] SpectralDataError),

    #[error("lambda = {lambda} is within {distance:.3e} of a pole")]
    Pole {
        lambda: num_complex::Complex64,
        distance: f64,
    },

    #[error("structural defect {defect:.3e} exceeds gate {gate:.1e}: {what}")]
    Structure {
        what: &'static str,
        defect: f64,
        gate: f64,
    },

    #[error("reconstruction failed at z = {z}, t = {t}: {source}")]
    Reconstruction {
        z: f64,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("Marchenko domain requires y >= z (z = {z}, y = {y})")]
    Domain { z: f64, y: f64 },

    #[error("discretized integral equation is ill-conditioned: residual {residual:.3e}, condition estimate {condition:.3e}")]
    IllConditioned { residual: f64, condition: f64 },

    #[error("integration step too coarse: estimated error {estimate:.3e} above tolerance {tolerance:.1e}")]
    Accuracy { estimate: f64, tolerance: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

/// Violations of the spectral data invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralDataError {
    #[error("eigenvalue real part must be positive (entry {index}: Re a = {re})")]
    NonPositiveRealPart { index: usize, re: f64 },

    #[error("duplicate eigenvalue: entries {first} and {second} coincide")]
    DuplicateEigenvalue { first: usize, second: usize },

    #[error("entry {index} has an empty norming list")]
    EmptyNorming { index: usize },

    #[error("entry {index}: leading norming coefficient is zero, the triplet would not be minimal")]
    ZeroLeadingNorming { index: usize },

    #[error("entry {index} has a non-finite value")]
    NonFinite { index: usize },

    #[error("entry {index} has multiplicity {multiplicity}; only simple eigenvalues evolve through norming constants")]
    NotSimple { index: usize, multiplicity: usize },
}
