//! Numerical laboratory for two-weight norm inequalities of sparse operators
//! on the dyadic intervals of `[0, 1)`.
//!
//! The crate evaluates the sparse operators
//! `A(f) = (Σ_{Q∈S} (|Q|^{-α} ∫_Q f)^r 1_Q)^{1/r}` exactly on step functions,
//! computes the two-weight, one-weight and `A∞` characteristics on finite
//! dyadic test sets, evaluates the testing constants that control the
//! operator norm, checks the associated comparability statements as
//! bounded-ratio properties, and reproduces the sharpness exponents of the
//! fractional square function by closed-form ε-sweeps.
//!
//! Modules:
//! - [`dyadic`]: intervals, sparse families, atom partitions, principal cubes.
//! - [`weights`]: weights with exact interval masses and all characteristics.
//! - [`operator`]: operator evaluation, weighted norms, operator-norm estimation.
//! - [`testing`]: testing constants and the comparability checks.
//! - [`suites`]: seeded random-instance suites built on top of [`testing`].
//! - [`sharpness`]: the two extremizer experiments and log-log slope fitting.

pub mod dyadic;
pub mod error;
pub mod operator;
pub mod sharpness;
pub mod suites;
pub mod testing;
pub mod weights;

pub use error::{Error, Result};
