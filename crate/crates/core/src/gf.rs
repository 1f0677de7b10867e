//! Generating-functional representations and the closed-form action of the
//! hop-dynamics evolution operators on exponential functionals.
//!
//! A probability law of point configurations is encoded by the functional
//! `B(theta) = E prod_{x in gamma} (1 + theta(x))`. Two representations are
//! implemented:
//!
//! * [`ExponentialGf`]: `B(theta) = exp(int rho theta)`, the Poissonian
//!   (chaotic) form with first variation `dB(theta; x) = rho(x) B(theta)`;
//! * [`EmpiricalGf`]: the Monte-Carlo estimator averaging the product over
//!   an ensemble of sampled configurations.
//!
//! On exponential functionals the evolution operators reduce to grid
//! convolutions. Writing `Q = int rho theta` and `w_eps = e^{-eps phi}`, all
//! variants share the shape
//!
//! ```text
//! (L B)(theta) = h^d sum_y exp(Q + s(y)) [theta(y) c1(y) - c2(y)]
//! ```
//!
//! with
//!
//! * hop dynamics (eps = 1) and its scaled renormalized family:
//!   `c1 = rho * (a w_eps)`, `c2 = (rho theta) * (a w_eps)`,
//!   `s = (rho theta) * (w_eps - 1) + rho * (w_eps - 1) / eps`;
//! * the mean-field limit operator:
//!   `c1 = rho * a`, `c2 = (rho theta) * a`, `s = -(rho * phi)`.
//!
//! The shared shape makes the three variants bitwise identical when
//! `phi = 0`, where they all collapse to the same interaction-free form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Torus};
use crate::kernels::PairKernel;
use crate::vlasov::{convolve, sample_kernel, DensityField, Grid};

/// Closed-form test function family: evaluable at continuum points, on the
/// grid, and with an exact L1 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum TestFunction {
    #[serde(rename = "gaussian-bump")]
    GaussianBump {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// `A cos(2 pi m . x / L)` for an integer mode vector m.
    #[serde(rename = "cosine")]
    Cosine { amplitude: f64, mode: Vec<i64> },
    /// `A` on an axis-aligned box of the given half-widths around a center.
    #[serde(rename = "indicator")]
    Indicator {
        amplitude: f64,
        center: Vec<f64>,
        half_width: Vec<f64>,
    },
}

impl TestFunction {
    pub fn validate(&self, torus: Torus) -> Result<()> {
        let ok = match self {
            TestFunction::GaussianBump { amplitude, center, width } => {
                amplitude.is_finite()
                    && center.len() == torus.dim
                    && center.iter().all(|c| c.is_finite())
                    && *width > 0.0
                    // Keep tails below ~3e-4 of the closed-form L1 norm.
                    && *width <= torus.side / 8.0
            }
            TestFunction::Cosine { amplitude, mode } => {
                amplitude.is_finite() && mode.len() == torus.dim
            }
            TestFunction::Indicator { amplitude, center, half_width } => {
                amplitude.is_finite()
                    && center.len() == torus.dim
                    && half_width.len() == torus.dim
                    && half_width.iter().all(|&w| w > 0.0 && 2.0 * w <= torus.side)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!("invalid test function {self:?} on torus {torus:?}")))
        }
    }

    /// Continuum evaluation at a point of [0, L)^d.
    pub fn evaluate_at(&self, torus: Torus, p: &[f64]) -> f64 {
        match self {
            TestFunction::GaussianBump { amplitude, center, width } => {
                let r2: f64 = torus
                    .min_image_displacement(center, p)
                    .iter()
                    .map(|&c| c * c)
                    .sum();
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            TestFunction::Cosine { amplitude, mode } => {
                let phase: f64 = mode
                    .iter()
                    .zip(p)
                    .map(|(&m, &x)| 2.0 * std::f64::consts::PI * m as f64 * x / torus.side)
                    .sum();
                amplitude * phase.cos()
            }
            TestFunction::Indicator { amplitude, center, half_width } => {
                let inside = torus
                    .min_image_displacement(center, p)
                    .iter()
                    .zip(half_width)
                    .all(|(&d, &w)| d.abs() < w);
                if inside {
                    *amplitude
                } else {
                    0.0
                }
            }
        }
    }

    /// Sample at the cell centers of a grid.
    pub fn sample_on(&self, grid: Grid) -> Result<DensityField> {
        self.validate(grid.torus())?;
        if let TestFunction::Cosine { mode, .. } = self {
            if mode.iter().any(|&m| m.unsigned_abs() as usize > grid.points_per_dim() / 2) {
                return Err(Error::Input("cosine mode not representable on the grid".into()));
            }
        }
        let torus = grid.torus();
        Ok(DensityField::from_fn(grid, |p| self.evaluate_at(torus, p)))
    }

    /// Exact L1 norm over the torus (tails of the bump truncated at the
    /// validated width are below ~3e-4 relative).
    pub fn l1_norm(&self, torus: Torus) -> f64 {
        match self {
            TestFunction::GaussianBump { amplitude, width, .. } => {
                amplitude.abs()
                    * (2.0 * std::f64::consts::PI).powf(torus.dim as f64 / 2.0)
                    * width.powi(torus.dim as i32)
            }
            TestFunction::Cosine { amplitude, mode } => {
                if mode.iter().all(|&m| m == 0) {
                    amplitude.abs() * torus.volume()
                } else {
                    // |cos| averages to 2/pi over any nonzero lattice mode.
                    amplitude.abs() * torus.volume() * 2.0 / std::f64::consts::PI
                }
            }
            TestFunction::Indicator { amplitude, half_width, .. } => {
                amplitude.abs() * half_width.iter().map(|w| 2.0 * w).product::<f64>()
            }
        }
    }

    /// Lower bound of the range; products (1 + theta) stay positive iff
    /// this exceeds -1.
    pub fn lower_bound(&self) -> f64 {
        match self {
            TestFunction::GaussianBump { amplitude, .. }
            | TestFunction::Indicator { amplitude, .. } => amplitude.min(0.0),
            TestFunction::Cosine { amplitude, .. } => -amplitude.abs(),
        }
    }

    /// Same shape with the amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> TestFunction {
        let mut out = self.clone();
        match &mut out {
            TestFunction::GaussianBump { amplitude, .. }
            | TestFunction::Cosine { amplitude, .. }
            | TestFunction::Indicator { amplitude, .. } => *amplitude *= factor,
        }
        out
    }

    pub fn label(&self) -> &'static str {
        match self {
            TestFunction::GaussianBump { .. } => "gaussian-bump",
            TestFunction::Cosine { .. } => "cosine",
            TestFunction::Indicator { .. } => "indicator",
        }
    }
}

/// Exponential generating functional `B(theta) = exp(int rho theta)` for a
/// nonnegative density; the chaotic form preserved by the mean-field flow.
#[derive(Debug, Clone)]
pub struct ExponentialGf {
    rho: DensityField,
}

impl ExponentialGf {
    pub fn new(rho: DensityField) -> Result<Self> {
        if rho.min() < 0.0 {
            return Err(Error::Input("exponential functional requires a nonnegative density".into()));
        }
        Ok(ExponentialGf { rho })
    }

    pub fn rho(&self) -> &DensityField {
        &self.rho
    }

    /// exp of the grid quadrature of rho * theta.
    pub fn evaluate(&self, theta: &TestFunction) -> Result<f64> {
        let theta_grid = theta.sample_on(self.rho.grid())?;
        Ok(self.rho.zip_with(&theta_grid, |r, t| r * t).quadrature().exp())
    }

    /// Renormalized value `B(eps theta)`.
    pub fn evaluate_renormalized(&self, theta: &TestFunction, epsilon: f64) -> Result<f64> {
        check_epsilon(epsilon)?;
        self.evaluate(&theta.scaled(epsilon))
    }
}

/// Monte-Carlo generating functional over an ensemble of equal-time
/// configuration snapshots.
#[derive(Debug, Clone)]
pub struct EmpiricalGf {
    ensemble: Vec<Configuration>,
}

impl EmpiricalGf {
    pub fn new(ensemble: Vec<Configuration>) -> Result<Self> {
        if ensemble.is_empty() {
            return Err(Error::Input("empty ensemble".into()));
        }
        let torus = ensemble[0].torus();
        if ensemble.iter().any(|c| c.torus() != torus) {
            return Err(Error::Input("ensemble configurations live on different tori".into()));
        }
        Ok(EmpiricalGf { ensemble })
    }

    pub fn ensemble(&self) -> &[Configuration] {
        &self.ensemble
    }

    fn replica_products(&self, theta: &TestFunction) -> Result<Vec<f64>> {
        let torus = self.ensemble[0].torus();
        theta.validate(torus)?;
        if theta.lower_bound() <= -1.0 {
            return Err(Error::Input(
                "empirical products require theta > -1 pointwise".into(),
            ));
        }
        Ok(self
            .ensemble
            .iter()
            .map(|config| {
                config
                    .iter_points()
                    .map(|p| 1.0 + theta.evaluate_at(torus, p))
                    .product::<f64>()
            })
            .collect())
    }

    /// Replica-ordered mean of `prod (1 + theta(x))` with theta evaluated
    /// at the exact particle positions.
    pub fn evaluate(&self, theta: &TestFunction) -> Result<f64> {
        let products = self.replica_products(theta)?;
        Ok(products.iter().sum::<f64>() / products.len() as f64)
    }

    /// Mean together with the Monte-Carlo standard error.
    pub fn evaluate_with_stderr(&self, theta: &TestFunction) -> Result<(f64, f64)> {
        let products = self.replica_products(theta)?;
        Ok(crate::stats::mean_stderr(&products))
    }

    /// Renormalized estimator: the plain estimator at `eps theta`.
    pub fn evaluate_renormalized(&self, theta: &TestFunction, epsilon: f64) -> Result<f64> {
        check_epsilon(epsilon)?;
        self.evaluate(&theta.scaled(epsilon))
    }

    pub fn evaluate_renormalized_with_stderr(
        &self,
        theta: &TestFunction,
        epsilon: f64,
    ) -> Result<(f64, f64)> {
        check_epsilon(epsilon)?;
        self.evaluate_with_stderr(&theta.scaled(epsilon))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !crate::check::positive(epsilon) {
        return Err(Error::Input("epsilon must be positive and finite".into()));
    }
    Ok(())
}

/// Which evolution operator to apply to an exponential functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorVariant {
    /// The hop-dynamics operator (scaled variant at eps = 1).
    Kawasaki,
    /// The scaled, renormalized family converging to the mean-field
    /// operator as eps tends to zero.
    ScaledRenormalized { epsilon: f64 },
    /// The mean-field (Vlasov) limit operator.
    Vlasov,
}

/// Closed-form value of `(L_# B)(theta)` for `B` exponential with density
/// `rho`, reduced to grid convolutions as described in the module docs.
pub fn apply_operator(
    rho: &DensityField,
    theta: &TestFunction,
    variant: OperatorVariant,
    a: &PairKernel,
    phi: &PairKernel,
) -> Result<f64> {
    if rho.min() < 0.0 {
        return Err(Error::Input("operator action requires a nonnegative density".into()));
    }
    let grid = rho.grid();
    let theta_grid = theta.sample_on(grid)?;
    let rho_theta = rho.zip_with(&theta_grid, |r, t| r * t);
    let q = rho_theta.quadrature();

    let (c1, c2, s) = match variant {
        OperatorVariant::Vlasov => {
            let a_grid = sample_kernel(grid, a)?;
            let phi_grid = sample_kernel(grid, phi)?;
            let c1 = convolve(rho, &a_grid)?;
            let c2 = convolve(&rho_theta, &a_grid)?;
            let s = convolve(rho, &phi_grid)?.map(|v| -v);
            (c1, c2, s)
        }
        OperatorVariant::Kawasaki | OperatorVariant::ScaledRenormalized { .. } => {
            let epsilon = match variant {
                OperatorVariant::ScaledRenormalized { epsilon } => {
                    check_epsilon(epsilon)?;
                    epsilon
                }
                _ => 1.0,
            };
            let phi_grid = sample_kernel(grid, phi)?;
            let a_grid = sample_kernel(grid, a)?;
            // a(z) e^{-eps phi(z)} and expm1(-eps phi(z)) on the lattice.
            let aw = a_grid.zip_with(&phi_grid, |av, pv| av * (-epsilon * pv).exp());
            let wm1 = phi_grid.map(|pv| (-epsilon * pv).exp_m1());
            let c1 = convolve(rho, &aw)?;
            let c2 = convolve(&rho_theta, &aw)?;
            let s_theta = convolve(&rho_theta, &wm1)?;
            let s_rho = convolve(rho, &wm1)?;
            let s = s_theta.zip_with(&s_rho, |st, sr| st + sr / epsilon);
            (c1, c2, s)
        }
    };

    let hd = grid.cell_volume();
    let mut value = 0.0;
    for i in 0..grid.num_cells() {
        let bracket = theta_grid.values()[i] * c1.values()[i] - c2.values()[i];
        value += (q + s.values()[i]).exp() * bracket;
    }
    Ok(value * hd)
}

/// Residual of the exponential ansatz in the mean-field functional
/// equation: central finite difference in time of `exp(int rho_t theta)`
/// minus the limit operator applied at time `t`.
///
/// The trajectory must contain fields at `t - dt_fd`, `t`, `t + dt_fd`.
pub fn gf_time_consistency(
    trajectory: &[(f64, DensityField)],
    theta: &TestFunction,
    t: f64,
    dt_fd: f64,
    a: &PairKernel,
    phi: &PairKernel,
) -> Result<f64> {
    if !crate::check::positive(dt_fd) {
        return Err(Error::Input("dt_fd must be positive".into()));
    }
    let lookup = |target: f64| -> Result<&DensityField> {
        trajectory
            .iter()
            .find(|(time, _)| (time - target).abs() <= 1e-9 * target.abs().max(1.0))
            .map(|(_, rho)| rho)
            .ok_or_else(|| {
                Error::Input(format!(
                    "trajectory holds no field at t = {target:.6}; \
                     t may be too close to the endpoints for the requested dt_fd"
                ))
            })
    };
    let before = lookup(t - dt_fd)?;
    let at = lookup(t)?;
    let after = lookup(t + dt_fd)?;
    let value = |rho: &DensityField| -> Result<f64> { ExponentialGf::new(rho.clone())?.evaluate(theta) };
    let fd = (value(after)? - value(before)?) / (2.0 * dt_fd);
    let op = apply_operator(at, theta, OperatorVariant::Vlasov, a, phi)?;
    Ok((fd - op).abs())
}

/// Correlation function of an exponential functional on a finite point set:
/// the product of the density at the points (1 on the empty set).
pub fn correlation_from_exponential(rho: &DensityField, eta: &Configuration) -> f64 {
    eta.iter_points().map(|p| rho.value_at_point(p)).product()
}
