use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid permutation: {0}")]
    BadPermutation(String),
    #[error("u0* u1 has an eigenvalue within {dist:.3e} of -1")]
    LogBranchFailure { dist: f64 },
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("schur decomposition failed to converge")]
    SchurFailure,

    #[error("not unital: F-block {block} at endpoint {side} has dimension {got}, expected {expected}")]
    NotUnital { block: usize, side: u8, expected: usize, got: usize },
    #[error("boundary maps are not jointly injective: E-block {block} is hit by neither")]
    NotInjectiveBeta { block: usize },
    #[error("boundary mismatch at endpoint {side} (residual {residual:.3e})")]
    BoundaryMismatch { side: u8, residual: f64 },
    #[error("discontinuity suspected at step {step} (jump {jump:.3e})")]
    DiscontinuitySuspected { step: usize, jump: f64 },
    #[error("element and map use different complexes: {0}")]
    SpecMismatch(String),

    #[error("bad partition data: {0}")]
    BadPartition(String),
    #[error("bad support: {0}")]
    BadSupport(String),
    #[error("test family would have {count} members, above the cap {cap}")]
    ExplosionGuard { count: usize, cap: usize },

    #[error("pairing hypothesis failed on test function {index} (gap {gap:.3e})")]
    HypothesisFailed { index: usize, gap: f64 },
    #[error("no admissible spectral extraction on F-block {block}")]
    ExtractionFailed { block: usize },
    #[error("spectra cannot be paired on F-block {block}")]
    PairingFailed { block: usize },
    #[error("no permutation aligns the diagonal forms: {0}")]
    PermutationSearchFailed(String),
    #[error("no matching permutation at breakpoint {breakpoint}: {left} vs {right}")]
    NoMatchingPermutation { breakpoint: usize, left: String, right: String },
    #[error("no aligning permutation at endpoint {side} of component {component}")]
    NoAligningPermutation { component: usize, side: u8 },
    #[error("family too coarse on component {component} near step {step}")]
    ContinuityTooCoarse { component: usize, step: usize },
    #[error("invalid standard map: {0}")]
    InvalidMap(String),

    #[error("interpolation conflict: {0}")]
    InterpolationConflict(String),
    #[error("boundary conditions broken by diagonal truncation (residual {residual:.3e})")]
    BoundaryBroken { residual: f64 },

    #[error("element is not positive (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    #[error("rank function on F-block {block} is not lower semicontinuous at t = {t}")]
    NotLsc { block: usize, t: f64 },
    #[error("rank function on F-block {block} violates boundary compatibility at endpoint {side}")]
    RankBoundary { block: usize, side: u8 },

    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
