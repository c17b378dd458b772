use thiserror::Error;

/// Errors raised by the numerical and constructive routines.
///
/// The variants fall into three groups: mathematical nonexistence verdicts
/// (`NoSection`, `NoWavelet`, `DetOne`, `MixedModuli`), numerical or
/// conditioning failures, and input errors.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum XsectError {
    #[error("matrix is singular: |det| = {det:e} <= tolerance")]
    Singular { det: f64 },

    #[error("ill-conditioned spectral structure: {detail} (gap {gap:e})")]
    IllConditioned { detail: String, gap: f64 },

    #[error("eigenvalue modulus {modulus} is too close to 1 to classify at this tolerance")]
    BorderlineModulus { modulus: f64 },

    #[error("no cross-section exists: the action is conjugate to an orthogonal one")]
    NoSection,

    #[error("point lies in the exceptional null set ({reason})")]
    ExceptionalPoint { reason: String },

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("|det A| = {det} is within tolerance of 1; no finite-measure cross-section exists")]
    DetOne { det: f64 },

    #[error("eigenvalue moduli lie on both sides of 1; no bounded cross-section exists")]
    MixedModuli,

    #[error("operation does not support section case {0}")]
    UnsupportedCase(String),

    #[error("quadrature refinement disagrees with closed form by {deviation:e}")]
    QuadratureDivergence { deviation: f64 },

    #[error("quadrature budget exceeded: partial estimate {partial} with error bound {error_bound:e}")]
    BudgetExceeded { partial: f64, error_bound: f64 },

    #[error("no lattice translate hits the region near {point:?} within radius {radius}")]
    SelectorMiss { point: Vec<f64>, radius: f64 },

    #[error("no order-infinity wavelet set: the matrix is similar to a unitary matrix")]
    NoWavelet,

    #[error("lattice search exhausted at radius {radius} with {found} certificates")]
    SearchExhausted { radius: f64, found: usize },

    #[error("dimension {n} is too high for this operation (max {max})")]
    DimensionTooHigh { n: usize, max: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl XsectError {
    /// True for verdicts that state a mathematical impossibility rather
    /// than a numerical or input failure.
    pub fn is_nonexistence(&self) -> bool {
        matches!(
            self,
            XsectError::NoSection
                | XsectError::NoWavelet
                | XsectError::DetOne { .. }
                | XsectError::MixedModuli
        )
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            XsectError::Singular { .. } => "singular",
            XsectError::IllConditioned { .. } => "ill_conditioned",
            XsectError::BorderlineModulus { .. } => "borderline_modulus",
            XsectError::NoSection => "no_section",
            XsectError::ExceptionalPoint { .. } => "exceptional_point",
            XsectError::Overflow(_) => "overflow",
            XsectError::DetOne { .. } => "det_one",
            XsectError::MixedModuli => "mixed_moduli",
            XsectError::UnsupportedCase(_) => "unsupported_case",
            XsectError::QuadratureDivergence { .. } => "quadrature_divergence",
            XsectError::BudgetExceeded { .. } => "budget_exceeded",
            XsectError::SelectorMiss { .. } => "selector_miss",
            XsectError::NoWavelet => "no_wavelet",
            XsectError::SearchExhausted { .. } => "search_exhausted",
            XsectError::DimensionTooHigh { .. } => "dimension_too_high",
            XsectError::InvalidInput(_) => "invalid_input",
        }
    }
}

pub type Result<T> = std::result::Result<T, XsectError>;
