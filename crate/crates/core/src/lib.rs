//! Truncated matrix-valued moment problems at desk scale.
//!
//! The crate builds and certifies block Hankel matrices of Hermitian-matrix
//! moment sequences, extracts atomic representing measures from flat
//! positive data, answers mass-set queries by conic feasibility, constructs
//! ordered-maximal-mass measures, diagonalizes commutative matrix moment
//! functionals, transports functionals under positive maps in Kraus form,
//! and implements the matricial apolar calculus for Hermitian-matrix-valued
//! homogeneous polynomials.
//!
//! All numerical code is generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below fix `f64`, which is what the
//! CLI and the JSON interfaces use.

pub mod scalar;

pub mod apolar;
pub mod cmat;
pub mod commutative;
pub mod eig;
pub mod extract;
pub mod fixtures;
pub mod functional;
pub mod hankel;
pub mod json;
pub mod masses;
pub mod herm;
pub mod space;
pub mod spectra;

pub mod error;
pub mod testutil;
pub mod transport;

pub use error::{
    ApolarError, ExtractError, HankelError, JsonError, LinAlgError, MassError, SpaceError,
    SpectraError, TransportError,
};

/// Concrete `f64` aliases for the main value types.
pub type CMat64 = cmat::CMat<f64>;
pub type HermMat64 = herm::HermMat<f64>;
pub type EigenDecomp64 = eig::EigenDecomp<f64>;
pub type HjkBasis64 = herm::HjkBasis<f64>;
