//! Two-particle reversibility check: the stationary law of the
//! inter-particle distance under the hopping dynamics is the pair Gibbs
//! density `~ exp(-eps phi(r))` times the ideal pair-distance density,
//! which on the torus is proportional to the shell volume for r <= L/2.
//! The observed histogram of decorrelated distance samples is tested
//! against the quadrature of that target by chi-square.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Torus};
use crate::kernels::PairKernel;
use crate::kmc::KawasakiSystem;
use crate::stats::{self, GofResult};

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub bin_edges: Vec<f64>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub samples: usize,
    pub chi_square: f64,
    pub dof: usize,
    pub threshold: f64,
    pub passed: bool,
}

/// Normalized target masses per bin by midpoint quadrature of
/// `exp(-eps phi(r)) r^{d-1}`, integrated bin by bin so edges never
/// straddle a quadrature subinterval.
fn target_masses(
    torus: Torus,
    phi: &PairKernel,
    epsilon: f64,
    edges: &[f64],
) -> Result<Vec<f64>> {
    let subdivisions = 1 << 13;
    let mut masses = vec![0.0; edges.len() - 1];
    let mut disp = vec![0.0; torus.dim];
    for (bin, mass) in masses.iter_mut().enumerate() {
        let dr = (edges[bin + 1] - edges[bin]) / subdivisions as f64;
        for i in 0..subdivisions {
            let r = edges[bin] + (i as f64 + 0.5) * dr;
            disp[0] = r;
            let weight = (-epsilon * phi.evaluate(&disp)?).exp()
                * match torus.dim {
                    1 => 1.0,
                    2 => r,
                    3 => r * r,
                    _ => unreachable!(),
                };
            *mass += weight * dr;
        }
    }
    let total: f64 = masses.iter().sum();
    for m in &mut masses {
        *m /= total;
    }
    Ok(masses)
}

/// Run the two-particle equilibrium check.
///
/// Two particles are placed uniformly, burnt in for `t_burn`, and the
/// minimum-image distance is sampled every `sample_interval` over a window
/// of length `t_sample`. Samples spaced by several hop times are close to
/// independent, which the chi-square test assumes.
#[allow(clippy::too_many_arguments)]
pub fn run_equilibrium_check(
    torus: Torus,
    a: PairKernel,
    phi: PairKernel,
    epsilon: f64,
    t_burn: f64,
    t_sample: f64,
    sample_interval: f64,
    bins: usize,
    seed: u64,
) -> Result<EquilibriumReport> {
    let n_samples = (t_sample / sample_interval).floor() as usize;
    if n_samples < 100 {
        return Err(Error::Stats(format!(
            "only {n_samples} distance samples; enlarge t_sample or shrink sample_interval"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(2 * torus.dim);
    for _ in 0..2 * torus.dim {
        coords.push(torus.side * rng.random::<f64>());
    }
    let config = Configuration::new(torus, coords)?;
    let mut sys = KawasakiSystem::with_rng(config, a, phi, epsilon, rng)?;
    sys.simulate(t_burn, &[])?;

    let sample_times: Vec<f64> = (1..=n_samples)
        .map(|k| t_burn + k as f64 * sample_interval)
        .collect();
    let snaps = sys.simulate(t_burn + t_sample, &sample_times)?;

    let r_max = torus.side / 2.0;
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * r_max / bins as f64).collect();
    let mut observed = vec![0u64; bins];
    for snap in &snaps {
        let r = torus.min_image_distance(snap.config.point(0), snap.config.point(1));
        let mut b = ((r / r_max) * bins as f64) as usize;
        if b >= bins {
            b = bins - 1;
        }
        observed[b] += 1;
    }
    let masses = target_masses(torus, &phi, epsilon, &edges)?;
    let expected: Vec<f64> = masses.iter().map(|&m| m * snaps.len() as f64).collect();
    let GofResult { statistic, dof, threshold, passed } =
        stats::chi_square_gof(&observed, &expected)?;
    Ok(EquilibriumReport {
        bin_edges: edges,
        observed,
        expected,
        samples: snaps.len(),
        chi_square: statistic,
        dof,
        threshold,
        passed,
    })
}
