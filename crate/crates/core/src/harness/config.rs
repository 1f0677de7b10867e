//! JSON-backed experiment configuration.
//!
//! Every runner takes one config struct deserialized from a JSON file;
//! validation errors name the offending key so the CLI can surface it.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Torus;
use crate::gf::TestFunction;
use crate::kernels::{KernelFamily, PairKernel};
use crate::vlasov::{DensityField, Grid};

/// Desk-scale guard: expected particle counts above this abort a run.
pub const MAX_EXPECTED_PARTICLES: f64 = 1e5;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TorusSpec {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

impl TorusSpec {
    pub fn build(&self) -> Result<Torus> {
        Torus::new(self.d, self.l)
    }
}

/// Initial density profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Rho0Spec {
    #[serde(rename = "constant")]
    Constant { value: f64 },
    #[serde(rename = "gaussian-bump")]
    GaussianBump {
        baseline: f64,
        height: f64,
        center: Vec<f64>,
        width: f64,
    },
}

impl Rho0Spec {
    pub fn build(&self, grid: Grid) -> Result<DensityField> {
        let torus = grid.torus();
        match self {
            Rho0Spec::Constant { value } => {
                if !crate::check::nonnegative(*value) {
                    return Err(Error::Config("rho0.value must be a finite nonnegative number".into()));
                }
                Ok(DensityField::constant(grid, *value))
            }
            Rho0Spec::GaussianBump { baseline, height, center, width } => {
                if !crate::check::nonnegative(*baseline) || !crate::check::nonnegative(*height) {
                    return Err(Error::Config("rho0 baseline and height must be nonnegative".into()));
                }
                if center.len() != torus.dim {
                    return Err(Error::Config("rho0.center dimension mismatch".into()));
                }
                if !crate::check::positive(*width) || *width > torus.side / 8.0 {
                    return Err(Error::Config(
                        "rho0.width must be positive and at most L/8".into(),
                    ));
                }
                let (b, h, w) = (*baseline, *height, *width);
                let c = center.clone();
                Ok(DensityField::from_fn(grid, move |x| {
                    let r2: f64 = torus
                        .min_image_displacement(&c, x)
                        .iter()
                        .map(|&d| d * d)
                        .sum();
                    b + h * (-r2 / (2.0 * w * w)).exp()
                }))
            }
        }
    }
}

fn build_kernel(family: KernelFamily, torus: Torus, key: &str) -> Result<PairKernel> {
    PairKernel::new(family, torus.dim, torus.side)
        .map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn check_times(times: &[f64], t_end: f64, key: &str) -> Result<()> {
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("{key} must be strictly increasing")));
    }
    if times.iter().any(|&t| t < 0.0 || t > t_end) {
        return Err(Error::Config(format!("{key} must lie within [0, t_end]")));
    }
    Ok(())
}

/// Config of the `simulate` subcommand: replicated trajectories of the
/// hopping dynamics from a Poisson initial state, with density observables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub torus: TorusSpec,
    pub a: KernelFamily,
    pub phi: KernelFamily,
    pub rho0: Rho0Spec,
    pub epsilon: f64,
    pub seed: u64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub replicas: usize,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    pub out_dir: PathBuf,
}

fn default_grid_n() -> usize {
    64
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        self.torus.build()?;
        if !crate::check::positive(self.epsilon) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        if !crate::check::nonnegative(self.t_end) {
            return Err(Error::Config("t_end must be nonnegative".into()));
        }
        check_times(&self.snapshot_times, self.t_end, "snapshot_times")?;
        Ok(())
    }

    pub fn kernels(&self) -> Result<(PairKernel, PairKernel)> {
        let torus = self.torus.build()?;
        Ok((build_kernel(self.a, torus, "a")?, build_kernel(self.phi, torus, "phi")?))
    }
}

/// Config of the `vlasov` subcommand: solve the kinetic equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VlasovConfig {
    pub torus: TorusSpec,
    pub grid_n: usize,
    pub a: KernelFamily,
    pub phi: KernelFamily,
    pub rho0: Rho0Spec,
    pub t_end: f64,
    pub dt: f64,
    pub output_times: Vec<f64>,
    pub out_dir: PathBuf,
}

impl VlasovConfig {
    pub fn validate(&self) -> Result<()> {
        self.torus.build()?;
        if !crate::check::positive(self.dt) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !crate::check::nonnegative(self.t_end) {
            return Err(Error::Config("t_end must be nonnegative".into()));
        }
        check_times(&self.output_times, self.t_end, "output_times")?;
        Ok(())
    }

    pub fn kernels(&self) -> Result<(PairKernel, PairKernel)> {
        let torus = self.torus.build()?;
        Ok((build_kernel(self.a, torus, "a")?, build_kernel(self.phi, torus, "phi")?))
    }
}

/// Config of the `gf-check` subcommand: operator convergence sweep,
/// functional-equation consistency, and the empirical-vs-exponential
/// comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GfCheckConfig {
    pub torus: TorusSpec,
    pub grid_n: usize,
    pub a: KernelFamily,
    pub phi: KernelFamily,
    pub rho0: Rho0Spec,
    pub theta: TestFunction,
    /// Epsilon sweep for the operator gap (strictly decreasing).
    pub epsilons: Vec<f64>,
    /// Time at which the functional equation is checked.
    pub consistency_time: f64,
    pub dt_fd: f64,
    pub pde_dt: f64,
    /// Ensemble size for the Poisson chaos comparison.
    pub chaos_replicas: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl GfCheckConfig {
    pub fn validate(&self) -> Result<()> {
        self.torus.build()?;
        if self.epsilons.len() < 2 || self.epsilons.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config("epsilons must be strictly decreasing with >= 2 entries".into()));
        }
        if self.epsilons.iter().any(|&e| !crate::check::positive(e)) {
            return Err(Error::Config("epsilons must be positive".into()));
        }
        if !crate::check::positive(self.dt_fd) || !crate::check::positive(self.pde_dt) {
            return Err(Error::Config("dt_fd and pde_dt must be positive".into()));
        }
        if self.consistency_time <= self.dt_fd || self.consistency_time.is_nan() {
            return Err(Error::Config("consistency_time must exceed dt_fd".into()));
        }
        if self.chaos_replicas == 0 {
            return Err(Error::Config("chaos_replicas must be >= 1".into()));
        }
        Ok(())
    }

    pub fn kernels(&self) -> Result<(PairKernel, PairKernel)> {
        let torus = self.torus.build()?;
        Ok((build_kernel(self.a, torus, "a")?, build_kernel(self.phi, torus, "phi")?))
    }
}

/// Config of the `scaling` subcommand: the particles-versus-kinetic-
/// equation convergence experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub torus: TorusSpec,
    pub grid_n: usize,
    pub a: KernelFamily,
    pub phi: KernelFamily,
    pub rho0: Rho0Spec,
    /// Scaling parameters, strictly decreasing.
    pub epsilons: Vec<f64>,
    pub t_end: f64,
    pub observation_times: Vec<f64>,
    /// Replicas per epsilon.
    pub replicas: usize,
    pub thetas: Vec<TestFunction>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Kinetic solver step; defaults to the stability guard.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Histogram bins for the density comparison (power of two dividing
    /// grid_n); defaults to grid_n / 4.
    #[serde(default)]
    pub density_bins: Option<usize>,
    /// Radial bins for the pair-correlation factorization check (d = 1
    /// only); 0 disables it. Defaults to 8.
    #[serde(default)]
    pub pair_correlation_bins: Option<usize>,
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        let torus = self.torus.build()?;
        if self.epsilons.is_empty() || self.epsilons.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config("epsilons must be nonempty and strictly decreasing".into()));
        }
        if self.epsilons.iter().any(|&e| !crate::check::positive(e)) {
            return Err(Error::Config("epsilons must be positive".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        if !crate::check::nonnegative(self.t_end) {
            return Err(Error::Config("t_end must be nonnegative".into()));
        }
        check_times(&self.observation_times, self.t_end, "observation_times")?;
        if self.observation_times.is_empty() {
            return Err(Error::Config("observation_times must be nonempty".into()));
        }
        for theta in &self.thetas {
            theta.validate(torus).map_err(|e| Error::Config(format!("thetas: {e}")))?;
            // Renormalized products use eps * theta; keep them positive.
            if theta.scaled(self.epsilons[0]).lower_bound() <= -1.0 {
                return Err(Error::Config(
                    "thetas must satisfy eps * theta > -1 at the largest epsilon".into(),
                ));
            }
        }
        let bins = self.density_bins.unwrap_or(self.grid_n / 4);
        if !bins.is_power_of_two() || bins < 8 || !self.grid_n.is_multiple_of(bins) {
            return Err(Error::Config(
                "density_bins must be a power of two >= 8 dividing grid_n".into(),
            ));
        }
        Ok(())
    }

    pub fn kernels(&self) -> Result<(PairKernel, PairKernel)> {
        let torus = self.torus.build()?;
        Ok((build_kernel(self.a, torus, "a")?, build_kernel(self.phi, torus, "phi")?))
    }
}

/// Config of the `equilibrium` subcommand: the two-particle reversibility
/// check against the pair Gibbs density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumConfig {
    pub torus: TorusSpec,
    pub a: KernelFamily,
    pub phi: KernelFamily,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub t_burn: f64,
    pub t_sample: f64,
    /// Time between distance samples; several hop times keeps samples
    /// effectively independent.
    pub sample_interval: f64,
    pub bins: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn default_epsilon() -> f64 {
    1.0
}

impl EquilibriumConfig {
    pub fn validate(&self) -> Result<()> {
        self.torus.build()?;
        if !crate::check::nonnegative(self.t_burn)
            || !crate::check::positive(self.t_sample)
            || !crate::check::positive(self.sample_interval)
        {
            return Err(Error::Config(
                "t_burn must be >= 0; t_sample and sample_interval must be positive".into(),
            ));
        }
        if self.bins < 2 {
            return Err(Error::Config("bins must be >= 2".into()));
        }
        if !crate::check::positive(self.epsilon) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn kernels(&self) -> Result<(PairKernel, PairKernel)> {
        let torus = self.torus.build()?;
        Ok((build_kernel(self.a, torus, "a")?, build_kernel(self.phi, torus, "phi")?))
    }
}

/// Config of the randomized bound verifier (optional part of `bounds`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsVerifyConfig {
    pub torus: TorusSpec,
    pub grid_n: usize,
    pub a: KernelFamily,
    pub phi: KernelFamily,
    pub rho0: Rho0Spec,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub alpha_dprime: f64,
    pub alpha0: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub n_theta: usize,
    pub seed: u64,
}

impl BoundsVerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.torus.build()?;
        if self.n_theta == 0 {
            return Err(Error::Config("n_theta must be >= 1".into()));
        }
        crate::bounds::ScaleParameters::new(
            self.alpha,
            self.alpha_prime,
            self.alpha_dprime,
            self.alpha0,
            self.epsilon,
        )?;
        Ok(())
    }

    pub fn kernels(&self) -> Result<(PairKernel, PairKernel)> {
        let torus = self.torus.build()?;
        Ok((build_kernel(self.a, torus, "a")?, build_kernel(self.phi, torus, "phi")?))
    }
}
