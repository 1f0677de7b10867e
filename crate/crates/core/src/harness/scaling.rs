//! The scaling-limit experiment: simulate the eps-scaled particle system
//! from Poisson(rho0 / eps) initial states, solve the kinetic equation
//! once, and compare renormalized empirical observables against the
//! exponential-functional predictions across the eps sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::existence_time;
use crate::error::{Error, Result};
use crate::geometry::poisson_sample;
use crate::kmc::{estimate_density, pair_correlation_single, KawasakiSystem};
use crate::stats;
use crate::vlasov::{integrate, DensityField, Grid};

use super::config::{ScalingConfig, MAX_EXPECTED_PARTICLES};

/// Seed stride separating the per-epsilon replica seed blocks.
pub const EPS_SEED_STRIDE: u64 = 1_000_003;

#[derive(Debug, Clone, Serialize)]
pub struct DensityErrorRecord {
    pub epsilon: f64,
    pub time: f64,
    pub l1_error: f64,
    pub l1_stderr: f64,
    pub linf_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GfRecord {
    pub epsilon: f64,
    pub time: f64,
    pub theta_id: String,
    pub b_emp: f64,
    pub stderr: f64,
    pub b_pde: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialDensityCheck {
    pub epsilon: f64,
    /// Largest per-bin |z| of (eps x histogram - rho0) against the Poisson
    /// standard deviation.
    pub max_abs_z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCorrelationRecord {
    pub epsilon: f64,
    pub time: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    /// eps^2 times the empirical two-point estimate.
    pub value: f64,
    pub stderr: f64,
    /// Radially averaged product rho_t x rho_t over the same bin.
    pub oracle: f64,
}

/// Per-(epsilon, time) density profile retained for the CSV output.
#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub epsilon: f64,
    pub time: f64,
    pub centers: Vec<f64>,
    pub emp: Vec<f64>,
    pub pde: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub seed: u64,
    pub epsilons: Vec<f64>,
    pub observation_times: Vec<f64>,
    pub replicas: usize,
    pub t_end: f64,
    /// Conservative horizon computed from the run parameters.
    pub existence_time_estimate: f64,
    pub density_errors: Vec<DensityErrorRecord>,
    pub gf_records: Vec<GfRecord>,
    pub initial_density_checks: Vec<InitialDensityCheck>,
    pub pair_correlation: Vec<PairCorrelationRecord>,
    /// Wall-clock timings per phase; logged to stderr, never persisted, so
    /// output files stay byte-identical across reruns.
    #[serde(skip)]
    pub runtimes: Vec<(String, f64)>,
    #[serde(skip)]
    pub density_profiles: Vec<DensityProfile>,
}

/// Average a fine-grid field over blocks to a coarse histogram grid.
fn aggregate_to_coarse(fine: &DensityField, coarse: Grid) -> DensityField {
    let ratio = fine.grid().points_per_dim() / coarse.points_per_dim();
    let d = fine.grid().torus().dim;
    let values: Vec<f64> = (0..coarse.num_cells())
        .map(|i| {
            // Average the fine cells covered by coarse cell i.
            let mut sum = 0.0;
            let mut count = 0usize;
            accumulate_block(fine, coarse, i, ratio, d, &mut sum, &mut count);
            sum / count as f64
        })
        .collect();
    DensityField::new(coarse, values).expect("aggregation preserves finiteness")
}

fn accumulate_block(
    fine: &DensityField,
    coarse: Grid,
    coarse_flat: usize,
    ratio: usize,
    d: usize,
    sum: &mut f64,
    count: &mut usize,
) {
    let nc = coarse.points_per_dim();
    let nf = fine.grid().points_per_dim();
    let mut coarse_idx = [0usize; 3];
    let mut rem = coarse_flat;
    for axis in (0..d).rev() {
        coarse_idx[axis] = rem % nc;
        rem /= nc;
    }
    for b in 0..ratio.pow(d as u32) {
        let mut offs = [0usize; 3];
        let mut rem = b;
        for axis in (0..d).rev() {
            offs[axis] = rem % ratio;
            rem /= ratio;
        }
        let mut fine_flat = 0usize;
        for axis in 0..d {
            fine_flat = fine_flat * nf + (coarse_idx[axis] * ratio + offs[axis]);
        }
        *sum += fine.values()[fine_flat];
        *count += 1;
    }
}

/// Radially averaged product density over aligned bins: the expected
/// renormalized two-point estimate of a Poisson ensemble with intensity
/// rho / eps (d = 1, edges at multiples of the fine spacing).
fn pair_product_oracle(rho: &DensityField, edges_cells: &[usize]) -> Vec<f64> {
    let grid = rho.grid();
    let n = grid.points_per_dim();
    let h = grid.spacing();
    let l = grid.torus().side;
    let vals = rho.values();
    // S(m) = h^2 sum_i rho_i rho_{i+m mod n}.
    let max_m = *edges_cells.last().unwrap();
    let mut s = vec![0.0f64; max_m + 1];
    for (m, slot) in s.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..n {
            acc += vals[i] * vals[(i + m) % n];
        }
        *slot = acc * h * h;
    }
    edges_cells
        .windows(2)
        .map(|w| {
            let (k0, k1) = (w[0], w[1]);
            let mut pairs = 0.0;
            if k0 == 0 {
                pairs += s[0];
            }
            for (m, &s_m) in s.iter().enumerate().take(k1 + 1).skip(k0.max(1)) {
                // Displacement-lattice triangle overlap: boundary offsets
                // contribute half their mass, interior ones all of it.
                let weight = if (m == k0 && k0 >= 1) || m == k1 { 0.5 } else { 1.0 };
                pairs += weight * 2.0 * s_m;
            }
            let shell = 2.0 * (k1 - k0) as f64 * h;
            pairs / (l * shell)
        })
        .collect()
}

struct ReplicaObservables {
    /// Coarse histogram per observation time.
    histograms: Vec<DensityField>,
    /// prod (1 + eps theta) per observation time per theta.
    gf_products: Vec<Vec<f64>>,
    /// Raw two-point estimates per observation time (empty when skipped).
    pair_values: Vec<Vec<f64>>,
}

pub fn run_scaling_experiment(cfg: &ScalingConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let torus = cfg.torus.build()?;
    let grid = Grid::new(torus, cfg.grid_n)?;
    let (a, phi) = cfg.kernels()?;
    let rho0 = cfg.rho0.build(grid)?;
    let mass = rho0.quadrature();
    let min_eps = *cfg.epsilons.last().unwrap();
    if mass / min_eps > MAX_EXPECTED_PARTICLES {
        return Err(Error::Config(format!(
            "expected particle count {:.3e} at epsilon = {min_eps} exceeds the desk-scale \
             guard {MAX_EXPECTED_PARTICLES:.0e}",
            mass / min_eps
        )));
    }

    // Conservative horizon: alpha0 from the density peak, alpha = alpha0/2.
    let alpha0 = 1.0 / rho0.max().max(f64::MIN_POSITIVE);
    let t_conservative = existence_time(alpha0 / 2.0, alpha0, a.l1_norm(), phi.l1_norm())?;
    if cfg.t_end > t_conservative {
        eprintln!(
            "[scaling] warning: t_end {} exceeds the conservative existence-time estimate {:.6e}",
            cfg.t_end, t_conservative
        );
    }

    let mut runtimes = Vec::new();
    let t0 = std::time::Instant::now();

    // One kinetic solve serves every epsilon.
    let guard_dt = 0.1 / a.l1_norm().max(f64::MIN_POSITIVE);
    let dt = cfg.dt.unwrap_or(0.5 * guard_dt).min(guard_dt);
    let trajectory = integrate(&rho0, cfg.t_end, dt, &cfg.observation_times, &a, &phi)?;
    runtimes.push(("kinetic-solve".to_string(), t0.elapsed().as_secs_f64()));

    let coarse = Grid::new(torus, cfg.density_bins.unwrap_or(cfg.grid_n / 4))?;
    let coarse_h = coarse.spacing();
    let pde_coarse: Vec<DensityField> =
        trajectory.iter().map(|(_, rho)| aggregate_to_coarse(rho, coarse)).collect();

    // Pair-correlation bins aligned to the fine lattice (d = 1 only).
    let pc_bins = cfg.pair_correlation_bins.unwrap_or(8);
    let pc_edges_cells: Vec<usize> = if torus.dim == 1 && pc_bins > 0 {
        let max_cells = cfg.grid_n / 2 - 1;
        let width = (max_cells / pc_bins).max(1);
        (0..=pc_bins).map(|i| i * width).collect()
    } else {
        Vec::new()
    };
    let pc_edges: Vec<f64> = pc_edges_cells.iter().map(|&k| k as f64 * grid.spacing()).collect();

    let mut report = ScalingReport {
        seed: cfg.seed,
        epsilons: cfg.epsilons.clone(),
        observation_times: cfg.observation_times.clone(),
        replicas: cfg.replicas,
        t_end: cfg.t_end,
        existence_time_estimate: t_conservative,
        density_errors: Vec::new(),
        gf_records: Vec::new(),
        initial_density_checks: Vec::new(),
        pair_correlation: Vec::new(),
        runtimes,
        density_profiles: Vec::new(),
    };

    for (e_idx, &eps) in cfg.epsilons.iter().enumerate() {
        let t_eps = std::time::Instant::now();
        let base_seed = cfg.seed.wrapping_add(EPS_SEED_STRIDE * (e_idx as u64 + 1));
        let intensity = rho0.map(|v| v / eps);
        let is_last = e_idx == cfg.epsilons.len() - 1;
        let want_pairs = is_last && !pc_edges_cells.is_empty();

        // Replicas run concurrently; aggregation below is replica-ordered.
        let replica_results: Result<Vec<ReplicaObservables>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(r as u64));
                let init = poisson_sample(torus, &intensity, &mut rng)?;
                let mut sys = KawasakiSystem::with_rng(init, a, phi, eps, rng)?;
                let snaps = sys.simulate(cfg.t_end, &cfg.observation_times)?;
                let mut histograms = Vec::with_capacity(snaps.len());
                let mut gf_products = Vec::with_capacity(snaps.len());
                let mut pair_values = Vec::with_capacity(snaps.len());
                for snap in &snaps {
                    histograms.push(estimate_density(
                        std::slice::from_ref(&snap.config),
                        coarse,
                    )?);
                    let products: Vec<f64> = cfg
                        .thetas
                        .iter()
                        .map(|theta| {
                            let scaled = theta.scaled(eps);
                            snap.config
                                .iter_points()
                                .map(|p| 1.0 + scaled.evaluate_at(torus, p))
                                .product::<f64>()
                        })
                        .collect();
                    gf_products.push(products);
                    if want_pairs {
                        pair_values.push(pair_correlation_single(&snap.config, &pc_edges)?);
                    }
                }
                Ok(ReplicaObservables { histograms, gf_products, pair_values })
            })
            .collect();
        let replicas = replica_results?;

        for (t_idx, &time) in cfg.observation_times.iter().enumerate() {
            let pde = &pde_coarse[t_idx];
            // Replica-ordered per-bin mean and stderr of eps x histogram.
            let n_bins = coarse.num_cells();
            let mut emp = vec![0.0; n_bins];
            let mut se = vec![0.0; n_bins];
            for b in 0..n_bins {
                let series: Vec<f64> = replicas
                    .iter()
                    .map(|rep| eps * rep.histograms[t_idx].values()[b])
                    .collect();
                let (m, s) = stats::mean_stderr(&series);
                emp[b] = m;
                se[b] = s;
            }
            let mut l1 = 0.0;
            let mut linf: f64 = 0.0;
            let mut l1_var = 0.0;
            for b in 0..n_bins {
                let diff = (emp[b] - pde.values()[b]).abs();
                l1 += diff * coarse_h;
                linf = linf.max(diff);
                l1_var += (se[b] * coarse_h) * (se[b] * coarse_h);
            }
            report.density_errors.push(DensityErrorRecord {
                epsilon: eps,
                time,
                l1_error: l1,
                l1_stderr: l1_var.sqrt(),
                linf_error: linf,
            });
            report.density_profiles.push(DensityProfile {
                epsilon: eps,
                time,
                centers: (0..n_bins).map(|b| coarse.position(b)[0]).collect(),
                emp: emp.clone(),
                pde: pde.values().to_vec(),
            });

            if t_idx == 0 {
                // Initial chaos check: Poisson noise scale per bin.
                let rho0_coarse = &pde_coarse[0];
                let mut max_z: f64 = 0.0;
                for (&value, &expect) in emp.iter().zip(rho0_coarse.values()) {
                    let sigma = (eps * expect
                        / (cfg.replicas as f64 * coarse.cell_volume()))
                    .sqrt();
                    if sigma > 0.0 {
                        max_z = max_z.max((value - expect).abs() / sigma);
                    }
                }
                report
                    .initial_density_checks
                    .push(InitialDensityCheck { epsilon: eps, max_abs_z: max_z });
            }

            for (th_idx, theta) in cfg.thetas.iter().enumerate() {
                let series: Vec<f64> =
                    replicas.iter().map(|rep| rep.gf_products[t_idx][th_idx]).collect();
                let (b_emp, stderr) = stats::mean_stderr(&series);
                let theta_grid = theta.sample_on(grid)?;
                let b_pde = trajectory[t_idx]
                    .1
                    .zip_with(&theta_grid, |r, t| r * t)
                    .quadrature()
                    .exp();
                report.gf_records.push(GfRecord {
                    epsilon: eps,
                    time,
                    theta_id: format!("{}-{}", theta.label(), th_idx),
                    b_emp,
                    stderr,
                    b_pde,
                    abs_error: (b_emp - b_pde).abs(),
                });
            }

            if want_pairs {
                let oracle = pair_product_oracle(&trajectory[t_idx].1, &pc_edges_cells);
                for b in 0..pc_edges.len() - 1 {
                    let series: Vec<f64> = replicas
                        .iter()
                        .map(|rep| eps * eps * rep.pair_values[t_idx][b])
                        .collect();
                    let (value, stderr) = stats::mean_stderr(&series);
                    report.pair_correlation.push(PairCorrelationRecord {
                        epsilon: eps,
                        time,
                        r_lo: pc_edges[b],
                        r_hi: pc_edges[b + 1],
                        value,
                        stderr,
                        oracle: oracle[b],
                    });
                }
            }
        }
        report
            .runtimes
            .push((format!("epsilon-{eps}"), t_eps.elapsed().as_secs_f64()));
    }
    Ok(report)
}
