//! Doubly singular matrix-variate beta type I/II distributions, the singular
//! matricvariate t distribution and the inverted (Pearson type II)
//! matricvariate t distribution.
//!
//! The crate has four layers:
//!
//! * [`linalg`] — dense decompositions restricted to their nonsingular parts,
//!   Moore–Penrose inverses, the multivariate gamma function and Stiefel
//!   manifold volumes, all in log space.
//! * [`sampler`] — seeded, reproducible sampling of every distribution by its
//!   defining matrix construction (ground truth independent of any density
//!   formula).
//! * [`density`] — closed-form log-densities and joint eigenvalue /
//!   singular-value laws, with an explicit [`density::Convention`] flag that
//!   separates formulas as printed from documented corrections.
//! * [`verify`] — deterministic Gauss–Legendre quadrature and Monte Carlo
//!   goodness-of-fit machinery that audits the normalizing constants and
//!   adjudicates between the two conventions.

pub mod cli;
pub mod density;
pub mod error;
pub mod linalg;
pub mod sampler;
pub mod verify;

pub use error::{Error, Result};
