//! Online learning with long-term constraints.
//!
//! Building blocks for saddle-point online mirror descent under adversarial
//! convex constraints, and for the risk-constrained adversarial contextual
//! bandit algorithms EXP4.R and EXP4.P.R:
//!
//! - [`simplex`]: probability vectors and seeded categorical sampling.
//! - [`mirror`]: mirror maps (squared Euclidean, negative entropy), Bregman
//!   divergence and projection, feasible sets, magnitude bounds.
//! - [`ocp`]: online convex programming with per-round constraints via a
//!   primal mirror-descent / dual gradient-ascent saddle-point update.
//! - [`exp4r`]: EXP4.R — expert-advice bandits with a long-term risk
//!   constraint, importance-weighted estimation, multiplicative weights.
//! - [`exp4pr`]: EXP4.P.R — the high-probability variant with a confidence
//!   bonus and a capped dual variable.
//! - [`environments`]: round generators (impossibility adversary, i.i.d.,
//!   drifting, scripted) with feasibility guarantees.
//! - [`comparator`]: hindsight oracles backed by an exact dense simplex LP
//!   solver ([`lp`]).
//!
//! A single run is strictly sequential and deterministic given its seed;
//! independent runs share no state and may execute concurrently.

pub mod comparator;
pub mod environments;
pub mod error;
pub mod exp4pr;
pub mod exp4r;
pub mod lp;
pub mod mirror;
pub mod ocp;
pub mod simplex;

pub use error::CoreError;
pub use simplex::SimplexVector;
