//! Simulation and verification toolkit for conservative hopping particle
//! dynamics in the continuum, the associated mean-field kinetic equation,
//! and the generating-functional view tying the two together.
//!
//! The crate provides:
//!
//! * exact event-driven simulation of the hopping dynamics on a periodic
//!   box ([`kmc`]), with kernels and potentials from closed-form families
//!   ([`kernels`]) over torus geometry ([`geometry`]);
//! * a spectral solver for the limiting kinetic equation ([`vlasov`]);
//! * generating functionals, their evolution operators in closed form on
//!   exponential functionals, and empirical estimators ([`gf`]), plus the
//!   subset-sum calculus used as a correctness oracle ([`harmonic`]);
//! * scale-norm bound calculators and a randomized falsification harness
//!   ([`bounds`]);
//! * experiment orchestration, persistence and reporting ([`harness`]).

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod gf;
pub mod harmonic;
pub mod harness;
pub mod kernels;
pub mod kmc;
pub mod stats;
pub mod vlasov;

pub use error::{Error, Result};

/// NaN-rejecting range predicates shared by the validation paths.
pub(crate) mod check {
    pub fn positive(x: f64) -> bool {
        x.is_finite() && x > 0.0
    }

    pub fn nonnegative(x: f64) -> bool {
        x.is_finite() && x >= 0.0
    }
}
