//! Combinatorial harmonic analysis on finite configurations.
//!
//! The K-transform sums a functional over all sub-configurations,
//!
//! ```text
//! (K G)(gamma) = sum_{eta subset gamma} G(eta),
//! ```
//!
//! and is inverted by inclusion-exclusion,
//!
//! ```text
//! (K^{-1} F)(eta) = sum_{xi subset eta} (-1)^{|eta \ xi|} F(xi).
//! ```
//!
//! Coherent states `e(f, eta) = prod_{x in eta} f(x)` tie the two together:
//! `K e(f) (gamma) = prod_{x in gamma} (1 + f(x))`. This module enumerates
//! subsets exactly and serves as a correctness oracle for the generating-
//! functional machinery, not as a production path; configurations are
//! capped at [`MAX_SUBSET_POINTS`] points.

use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::vlasov::DensityField;

/// Hard cap on subset enumeration (2^25 subsets).
pub const MAX_SUBSET_POINTS: usize = 25;

fn check_size(n: usize, what: &str) -> Result<()> {
    if n > MAX_SUBSET_POINTS {
        return Err(Error::Size(format!(
            "{what} over {n} points exceeds the {MAX_SUBSET_POINTS}-point subset enumeration cap"
        )));
    }
    Ok(())
}

fn subset_of_mask(base: &Configuration, mask: u32) -> Configuration {
    let mut indices = Vec::with_capacity(mask.count_ones() as usize);
    let mut bits = mask;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        indices.push(i);
        bits &= bits - 1;
    }
    base.subset(&indices)
}

/// Kahan-compensated accumulator; the subset sums run over up to 2^25
/// terms and the inverse cancels almost everything, so plain accumulation
/// would waste most of the available precision.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Exact subset sum (K G)(gamma), subsets enumerated in binary-counter
/// order.
pub fn k_transform<G: Fn(&Configuration) -> f64>(g: G, gamma: &Configuration) -> Result<f64> {
    check_size(gamma.len(), "K-transform")?;
    let n = gamma.len() as u32;
    let mut acc = Compensated::default();
    for mask in 0..(1u64 << n) {
        acc.add(g(&subset_of_mask(gamma, mask as u32)));
    }
    Ok(acc.sum)
}

/// Exact alternating subset sum (K^{-1} F)(eta).
pub fn k_inverse<F: Fn(&Configuration) -> f64>(f: F, eta: &Configuration) -> Result<f64> {
    check_size(eta.len(), "inverse K-transform")?;
    let n = eta.len() as u32;
    let mut acc = Compensated::default();
    for mask in 0..(1u64 << n) {
        let mask = mask as u32;
        let removed = n - mask.count_ones();
        let sign = if removed.is_multiple_of(2) { 1.0 } else { -1.0 };
        acc.add(sign * f(&subset_of_mask(eta, mask)));
    }
    Ok(acc.sum)
}

/// Coherent state e(f, eta) = prod_{x in eta} f(x); 1 on the empty
/// configuration.
pub fn coherent_state<F: Fn(&[f64]) -> f64>(f: F, eta: &Configuration) -> f64 {
    eta.iter_points().map(f).product()
}

/// Truncated exponential series sum_{n <= n_max} (int f)^n / n! of the
/// grid integral of `f`; converges to exp(int f) as n_max grows.
pub fn lp_exponential_integral(f: &DensityField, n_max: usize) -> f64 {
    let s = f.quadrature();
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=n_max {
        term *= s / n as f64;
        sum += term;
    }
    sum
}
