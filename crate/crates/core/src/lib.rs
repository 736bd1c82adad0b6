//! Monodromy of complex polynomials and of hyperelliptic Hamiltonians `y² + f(x)`.
//!
//! The crate computes monodromy groups by numerical continuation, classifies
//! them, and decides the tangential-center and monodromy problems for
//! 0-dimensional and hyperelliptic Abelian integrals. Every positive decision is
//! backed by an exact certificate over the rationals (a decomposition
//! `f = g∘h`, a reduction of a 1-form, a rank computation) that callers can
//! re-verify independently of the floating-point screens that found it.
//!
//! Modules, bottom up:
//!
//! - [`polycore`]: exact polynomials, Chebyshev polynomials, critical data, linear normalization
//! - [`tracker`]: fiber solving, loop bases and root continuation
//! - [`permlab`]: permutation-group algorithms and the four-way classification
//! - [`decompose`]: functional decomposition and exceptional-polynomial recognition
//! - [`zerodim`]: 0-dimensional Abelian integrals, center and span tests
//! - [`hyperlat`]: homology of `y² + f(x) = t`, swap action, 1-form reduction
//! - [`chebwitness`]: cyclotomic verification for Chebyshev Hamiltonians and period integrals

pub mod chebwitness;
pub mod decompose;
pub mod error;
pub mod hyperlat;
pub mod linalg;
pub mod permlab;
pub mod polycore;
pub mod tracker;
pub mod zerodim;

pub use error::{Error, Result};
pub use polycore::{RatPoly, Rational};
