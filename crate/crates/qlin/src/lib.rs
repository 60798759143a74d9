//! Structural analysis of linear quantum systems.
//!
//! The library works with three equivalent representations of an open
//! quantum harmonic-oscillator network:
//!
//! * the annihilation-operator form `(𝒜, ℬ, 𝒞)`,
//! * the real quadrature form `(Ā, B̄, C̄)`, optionally in Kalman block
//!   coordinates, and
//! * the physical parameters `(H, Γ)` of the Hamiltonian and field coupling.
//!
//! On top of these it provides physical-realizability checks, spectral and
//! controllability/observability analysis, extraction of invariant and
//! noiseless subsystems, and certification of back-action-evading (BAE)
//! measurements.

pub mod analysis;
pub mod bae;
pub mod corpus;
pub mod decomposition;
pub mod format;
pub mod model;
pub mod parallel;
pub mod parameterization;
pub mod random;
pub mod realizability;
pub mod report;
pub mod structured;

pub use structured::{CMat, RMat, StructureCheck, Tolerance};

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix has odd dimensions {rows}x{cols}, expected even")]
    OddDimension { rows: usize, cols: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("{context}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix must be real but has imaginary entries")]
    ComplexEntries,
    #[error("entry {block}[{row},{col}] = {value} violates the mandated zero pattern")]
    ZeroPatternViolation {
        block: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("imaginary residue {residual} exceeds the realification guard")]
    ImaginaryResidue { residual: f64 },
    #[error("physical realizability violated (residual {residual})")]
    PrViolation { residual: f64 },
    #[error("{what} violated (residual {residual})")]
    StructureViolation { what: String, residual: f64 },
    #[error("block coupling condition {condition} violated (residual {residual})")]
    BlockCouplingResidual { condition: String, residual: f64 },
    #[error("nonzero coupling rows do not pair into conjugate pairs: {rows:?}")]
    OddRowSet { rows: Vec<usize> },
    #[error("resolvent (sI−A) is near singular (condition estimate {cond:.3e})")]
    NearSingularResolvent { cond: f64 },
    #[error("internal verdict disagreement: {context} (residuals {lhs:.3e} vs {rhs:.3e})")]
    VerdictDisagreement { context: String, lhs: f64, rhs: f64 },
    #[error("search cap exceeded: {0} modes, cap {1}")]
    SearchCapExceeded(usize, usize),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("unknown example id `{0}`")]
    UnknownExample(String),
    #[error("model file error: {0}")]
    Format(String),
    #[error("missing or invalid field `{0}`")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
