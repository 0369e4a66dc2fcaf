//! Numerical toolkit for one-shot and asymptotic error bounds of
//! classical-quantum (and fully quantum) channel coding assisted by
//! non-signaling correlations.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`herm`]: dense Hermitian linear algebra (eigendecompositions, matrix
//!   functions, positive/negative parts, the non-commutative minimum).
//! - [`sdp`]: a dense block-diagonal semidefinite program solver
//!   (primal-dual interior point, Nesterov-Todd scaling).
//! - [`channels`]: classical-quantum channels, Choi matrices, tensor
//!   constructions and the method of types.
//! - [`divergences`]: Petz / sandwiched Renyi divergences, relative
//!   entropy, hypothesis-testing divergence and Renyi mutual information.
//! - [`capacities`]: Renyi capacities via the quantum Sibson identity,
//!   Holevo capacity and critical rates.
//! - [`oneshot`]: the non-signaling and meta-converse coding programs,
//!   their non-commutative-minimum dual saddle forms, and the activation
//!   identity between them.
//! - [`exponents`]: error-exponent formulas, finite-blocklength
//!   achievability and sphere-packing style converse bounds.
//!
//! All quantities are in natural logarithm units (nats).

pub mod capacities;
pub mod channels;
pub mod divergences;
pub mod exponents;
pub mod herm;
pub mod oneshot;
pub mod random;
pub mod sdp;

pub use capacities::CapacityResult;
pub use channels::{CQChannel, InputDistribution, QuantumChannelChoi, TypeComposition};
pub use exponents::{ClassicalPair, ExponentCurve, ExponentPoint, TiltedFamily};
pub use herm::{DensityOperator, HermitianOperator, SpectralDecomposition, C64};
pub use oneshot::SaddlePoint;
pub use sdp::{SdpProblem, SdpSolution, SdpStatus};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("operator is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("problem is infeasible")]
    Infeasible,

    #[error("problem is unbounded")]
    Unbounded,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed channel file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Resource limits shared by the operations that build tensor-power
/// objects or semidefinite programs.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Cap on the total variable dimension of a constructed program and on
    /// the joint dimension `|X|^n * d^n` of tensor-power channels.
    pub max_dim: usize,
    /// Cap on the support size of exact classical enumerations.
    pub max_support: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_dim: 4096, max_support: 1_000_000 }
    }
}
