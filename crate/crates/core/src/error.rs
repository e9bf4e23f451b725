//! Error types shared across the library.
//!
//! Payload values are stored as `f64` regardless of the scalar type in use so
//! that error enums stay object-safe and non-generic.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum KernelError {
    /// Evaluation outside the triangle `0 <= s <= t <= horizon`.
    #[error("kernel arguments outside domain: t={t}, s={s} ({detail})")]
    Domain { t: f64, s: f64, detail: &'static str },

    /// The kernel diverges (or vanishes) on the diagonal where a finite
    /// positive value is required.
    #[error("kernel diagonal is singular or non-positive at s={at}")]
    SingularDiagonal { at: f64 },

    /// Numerical quadrature did not reach the requested tolerance.
    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// A mixture truncation removed every atom.
    #[error("truncation |alpha| <= {level} removed all atoms")]
    EmptyTruncation { level: f64 },

    /// Malformed construction parameters.
    #[error("invalid kernel parameters: {0}")]
    Invalid(String),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PositivityError {
    #[error("kernel diagonal is singular or non-positive at s={at}")]
    SingularDiagonal { at: f64 },

    /// The explicit alternating-sum expansion has `2^(l-2)` terms.
    #[error("order {l} exceeds the expansion guard (l <= {max})")]
    OrderTooLarge { l: usize, max: usize },

    #[error("triangular solve pivot underflow at grid index {index}")]
    IllConditioned { index: usize },

    /// A stated hypothesis (partial-sum nonnegativity, monotonicity) fails.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("ordered tuple must be strictly increasing with length >= 2")]
    BadTuple,

    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DomainError {
    #[error("no invariance validator registered for domain kind {0}")]
    UnsupportedDomain(&'static str),

    #[error("dimension mismatch: domain expects {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid coefficient parameters: {0}")]
    Invalid(String),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SchemeError {
    #[error("kernel diagonal is singular at grid time t={at}; smooth or truncate the kernel first")]
    SingularDiagonal { at: f64 },

    #[error("state left the domain at t={at} with distance {distance}")]
    DomainViolation { at: f64, distance: f64 },

    #[error("at least {needed} paths required, got {got}")]
    InsufficientPaths { needed: usize, got: usize },

    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RiccatiError {
    #[error("fixed-point iteration did not converge within {iters} sweeps (residual {residual})")]
    NoConvergence { iters: usize, residual: f64 },

    /// The source term must be componentwise nonpositive.
    #[error("f has a positive component ({value} at grid index {index})")]
    PositiveF { index: usize, value: f64 },

    #[error("time change has no closed-form inverse: {0}")]
    UnsupportedTimeChange(&'static str),

    #[error("path state carries no scheme increments")]
    MissingIncrements,

    #[error("invalid solver configuration: {0}")]
    Invalid(String),

    #[error(transparent)]
    Kernel(#[from] KernelError),
}
