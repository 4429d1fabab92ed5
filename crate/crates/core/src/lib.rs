//! Generalized Farey trees, transfer operators and spin-chain thermodynamics
//! for the family of interval maps `F_r`, `0 ≤ r < 2`.
//!
//! The combinatorial core (tree rows, spin-chain tables, matrix
//! presentations) is generic over [`scalar::Ring`], so the same code runs on
//! exact rationals, integer polynomials in `ρ = 2 − r` and floats. Analytic
//! quantities (traces, spectral radii, free energies) are computed in `f64`.

pub mod coding;
pub mod error;
pub mod numerics;
pub mod poly;
pub mod scalar;
pub mod spinchain;
pub mod sum;
pub mod thermo;
pub mod transfer;
pub mod tree;
pub mod verify;
pub mod zeta;

pub use error::{Error, Result};
pub use numerics::{Mode, Params};
pub use poly::RhoPoly;

/// Exact rationals.
pub type Rational = num_rational::BigRational;

/// Parameters over exact rationals.
pub type ExactParams = Params<Rational>;
/// Parameters with `ρ` kept as an indeterminate.
pub type SymbolicParams = Params<RhoPoly>;
/// Double-precision parameters.
pub type ParamsF64 = Params<f64>;
/// Single-precision parameters.
pub type ParamsF32 = Params<f32>;

pub type NodeF64 = tree::FareyNode<f64>;
pub type ExactNode = tree::FareyNode<Rational>;
pub type SymbolicNode = tree::FareyNode<RhoPoly>;
pub type Mat2F64 = tree::Mat2<f64>;
