//! Extrapolation uncertainty for Stieltjes-class complex permittivity models.
//!
//! The crate has two halves that meet in the middle:
//!
//! * a worst-case analysis: given that two admissible permittivity functions
//!   agree on a measured frequency band up to a relative mismatch `eps`, how
//!   far apart can they be at a point beyond the band? This is answered by a
//!   regularized Fredholm solve against the reproducing kernel of the Hardy
//!   space of the analyticity half-plane ([`fredholm`]), with power-law
//!   exponents estimated three independent ways ([`exponent`], [`conformal`]);
//! * a fitting route: positivity-constrained least squares over rational
//!   Stieltjes models with an exact optimality certificate ([`fit`]).
//!
//! All numerics are deterministic binary64; the supported mismatch range is
//! `eps` in `[1e-5, 0.5]` (see [`fredholm::EPS_FLOOR`]).

pub mod cache;
pub mod conformal;
pub mod error;
pub mod exponent;
pub mod fit;
pub mod fredholm;
pub mod grid;
pub mod operator;
pub mod quad;
pub mod stieltjes;
mod util;

pub use error::{Error, Result};
pub use fredholm::BoundResult;
pub use operator::{DiscretizedOperator, EigenSystem};
pub use quad::Quadrature;
pub use stieltjes::{ProblemParams, StieltjesRational};
