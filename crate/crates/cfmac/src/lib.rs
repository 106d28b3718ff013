//! Numerical toolkit for k-user multiple-access channels whose encoders
//! cooperate through a rate-limited facilitator node.
//!
//! The crate computes inner/outer capacity-region bounds, sum-rate gain
//! curves, closed-form regions for the 2-user Gaussian channel, and runs
//! seeded Monte Carlo experiments for the multivariate covering step and
//! the full random-coding scheme.
//!
//! All information quantities are in bits (log base 2). Probabilities are
//! 64-bit floats; the pmf core is generic over the scalar type (see
//! [`scalar::Scalar`]) with `f64` aliases at the crate root.

pub mod channel;
pub mod codec;
pub mod covering;
pub mod gain;
pub mod gaussian2;
pub mod info;
pub mod lp;
pub mod region;
pub mod rng;
pub mod scalar;
pub mod subsets;

/// Information quantity in bits (log base 2).
pub type Bits = f64;

/// Concrete joint pmf used by the simulation and region modules.
pub type Pmf = info::JointPmf<f64>;

/// Stochasticity tolerance at construction / deserialization time.
pub const TOL_CONSTRUCT: f64 = 1e-12;

/// Tolerance for quantities produced by floating-point arithmetic
/// (factorization checks, entropy identities, region comparisons).
pub const TOL_ARITH: f64 = 1e-9;
