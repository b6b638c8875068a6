//! Simulation and verification laboratory for level sets of stationary smooth
//! Gaussian fields.
//!
//! The crate synthesizes exactly-Gaussian trigonometric fields from finite
//! symmetric atomic spectral measures, so that the field, its gradient and its
//! Hessian are all available in closed form at any point. On top of that it
//! provides:
//!
//! * level-set extraction and length measurement on a grid ([`geometry`]),
//! * the mean-curvature field of level sets and the divergence-theorem
//!   identity relating level-set lengths, a bulk curvature integral and a
//!   boundary flux ([`geometry`]),
//! * closed-form Gaussian facts: the product-Gaussian density and sign
//!   probability, expected gradient norms and the Kac-Rice expected level-set
//!   measure ([`gaussian`]),
//! * exact optimal transport of atomic spectral measures under a weighted
//!   quadratic cost, used to build coupled field pairs with small
//!   C^2-fluctuations ([`transport`], [`field`]),
//! * seeded, reproducible experiment runners with CSV/JSON output
//!   ([`experiment`]).
//!
//! Everything is deterministic given a seed: coefficients come from a
//! counter-based generator keyed by `(seed, atom index, slot)`, so results do
//! not depend on evaluation or thread order.

pub mod error;
pub mod experiment;
pub mod field;
pub mod gaussian;
pub mod geometry;
pub mod grid;
pub(crate) mod linalg;
pub mod quad;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod transport;

pub use error::{Error, NumericalFlag, Result};
