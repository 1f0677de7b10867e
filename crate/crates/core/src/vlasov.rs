//! Periodic-grid spectral solver for the mean-field kinetic equation
//!
//! ```text
//! d/dt rho_t(x) = (rho_t * a)(x) e^{-(rho_t * phi)(x)}
//!                 - rho_t(x) (a * e^{-(rho_t * phi)})(x)
//! ```
//!
//! with `*` the convolution on the torus. Convolutions are evaluated by
//! discrete Fourier transform; the time stepper is classical fourth-order
//! Runge-Kutta with a step-size guard.
//!
//! Sampling conventions: scalar fields (densities, test functions) hold
//! values at cell centers (i + 1/2) h; kernel-like fields used as the second
//! convolution argument hold values at displacement lattice offsets m h,
//! reduced to the minimum image. With these conventions the circular
//! convolution of a center field with a displacement field again lives at
//! cell centers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Torus;
use crate::kernels::PairKernel;

/// Uniform periodic grid: n points per dimension, spacing h = L / n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    torus: Torus,
    n: usize,
}

impl Grid {
    pub fn new(torus: Torus, n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid points per dimension must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Grid { torus, n })
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.torus.side / self.n as f64
    }

    pub fn num_cells(&self) -> usize {
        self.n.pow(self.torus.dim as u32)
    }

    /// Volume element h^d.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.torus.dim as i32)
    }

    fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.torus.dim).rev() {
            idx[axis] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    /// Cell-center position of a flat index.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        let idx = self.multi_index(flat);
        (0..self.torus.dim).map(|a| (idx[a] as f64 + 0.5) * h).collect()
    }

    /// Minimum-image displacement lattice offset of a flat index.
    pub fn displacement(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        let half = self.torus.side / 2.0;
        let idx = self.multi_index(flat);
        (0..self.torus.dim)
            .map(|a| {
                let z = idx[a] as f64 * h;
                if z >= half {
                    z - self.torus.side
                } else {
                    z
                }
            })
            .collect()
    }

    /// Flat index of the cell containing a point of [0, L)^d.
    pub fn cell_of_point(&self, p: &[f64]) -> usize {
        let h = self.spacing();
        let mut flat = 0;
        for &c in p.iter().take(self.torus.dim) {
            let mut k = (c / h) as usize;
            if k >= self.n {
                k = self.n - 1;
            }
            flat = flat * self.n + k;
        }
        flat
    }

    /// Wave vector 2 pi m / L for integer mode numbers.
    pub fn wave_vector(&self, mode: &[i64]) -> Vec<f64> {
        mode.iter()
            .map(|&m| 2.0 * std::f64::consts::PI * m as f64 / self.torus.side)
            .collect()
    }
}

/// A real scalar field sampled on a periodic grid.
///
/// Nonnegativity is required where the field represents a density; signed
/// fields (test functions, kernels with averaged jumps) use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::Input(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("field values must be finite".into()));
        }
        Ok(DensityField { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        DensityField { grid, values: vec![c; grid.num_cells()] }
    }

    /// Sample a function of the cell-center position.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.num_cells()).map(|i| f(&grid.position(i))).collect();
        DensityField { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// h^d sum of values: the integral over the torus.
    pub fn quadrature(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Value of the cell containing the point.
    pub fn value_at_point(&self, p: &[f64]) -> f64 {
        self.values[self.grid.cell_of_point(p)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DensityField {
        DensityField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &DensityField, f: impl Fn(f64, f64) -> f64) -> DensityField {
        debug_assert_eq!(self.grid, other.grid);
        DensityField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        }
    }
}

mod fft {
    use super::*;
    use std::cell::RefCell;

    thread_local! {
        static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    }

    /// In-place complex DFT along every axis of a flattened hypercube with
    /// `n` points per dimension and `d` dimensions.
    fn transform(buf: &mut [Complex64], n: usize, d: usize, forward: bool) {
        PLANNER.with(|planner| {
            let fft = if forward {
                planner.borrow_mut().plan_fft_forward(n)
            } else {
                planner.borrow_mut().plan_fft_inverse(n)
            };
            let total = buf.len();
            let mut line = vec![Complex64::default(); n];
            for axis in 0..d {
                // Stride between consecutive points along this axis.
                let stride = n.pow((d - 1 - axis) as u32);
                let lines = total / n;
                for l in 0..lines {
                    // Base offset of the l-th line orthogonal to `axis`.
                    let block = l / stride;
                    let offset = l % stride;
                    let base = block * stride * n + offset;
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + k * stride];
                    }
                    fft.process(&mut line);
                    for (k, slot) in line.iter().enumerate() {
                        buf[base + k * stride] = *slot;
                    }
                }
            }
        });
    }

    pub fn forward(values: &[f64], n: usize, d: usize) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        transform(&mut buf, n, d, true);
        buf
    }

    pub fn inverse_real(mut buf: Vec<Complex64>, n: usize, d: usize) -> Vec<f64> {
        transform(&mut buf, n, d, false);
        let scale = 1.0 / buf.len() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }
}

/// Sample a kernel on the displacement lattice of a grid, for use as the
/// second argument of [`convolve`].
pub fn sample_kernel(grid: Grid, kernel: &PairKernel) -> Result<DensityField> {
    if kernel.dim() != grid.torus().dim || kernel.torus_side() != grid.torus().side {
        return Err(Error::Input("kernel and grid live on different tori".into()));
    }
    let values = (0..grid.num_cells())
        .map(|i| kernel.grid_value(&grid.displacement(i)))
        .collect();
    DensityField::new(grid, values)
}

/// Periodic convolution of a center-sampled field with a displacement-
/// sampled kernel field, scaled by h^d so the result approximates the
/// continuum convolution. Exact for band-limited inputs; linear in `f`.
pub fn convolve(f: &DensityField, g: &DensityField) -> Result<DensityField> {
    if f.grid() != g.grid() {
        return Err(Error::Input("convolution operands on different grids".into()));
    }
    let grid = f.grid();
    let n = grid.points_per_dim();
    let d = grid.torus().dim;
    let mut fs = fft::forward(f.values(), n, d);
    let gs = fft::forward(g.values(), n, d);
    for (a, b) in fs.iter_mut().zip(&gs) {
        *a *= *b;
    }
    let mut values = fft::inverse_real(fs, n, d);
    let hd = grid.cell_volume();
    for v in &mut values {
        *v *= hd;
    }
    DensityField::new(grid, values)
}

/// Convolve a field with a parametric kernel.
pub fn convolve_kernel(f: &DensityField, kernel: &PairKernel) -> Result<DensityField> {
    let g = sample_kernel(f.grid(), kernel)?;
    convolve(f, &g)
}

/// Right-hand side of the kinetic equation:
/// `(rho*a) e^{-(rho*phi)} - rho (a * e^{-(rho*phi)})`.
pub fn vlasov_rhs(rho: &DensityField, a: &PairKernel, phi: &PairKernel) -> Result<DensityField> {
    if rho.min() < -1e-12 {
        return Err(Error::State(format!(
            "density has negative entries (min {:.3e})",
            rho.min()
        )));
    }
    let rho_a = convolve_kernel(rho, a)?;
    let rho_phi = convolve_kernel(rho, phi)?;
    let weight = rho_phi.map(|v| (-v).exp());
    let a_weight = convolve_kernel(&weight, a)?;
    let gain = rho_a.zip_with(&weight, |x, w| x * w);
    let loss = rho.zip_with(&a_weight, |r, c| r * c);
    Ok(gain.zip_with(&loss, |g, l| g - l))
}

fn rk4_step(rho: &DensityField, dt: f64, a: &PairKernel, phi: &PairKernel) -> Result<DensityField> {
    let k1 = vlasov_rhs(rho, a, phi)?;
    let mid1 = rho.zip_with(&k1, |r, k| r + 0.5 * dt * k);
    let k2 = vlasov_rhs(&mid1, a, phi)?;
    let mid2 = rho.zip_with(&k2, |r, k| r + 0.5 * dt * k);
    let k3 = vlasov_rhs(&mid2, a, phi)?;
    let end = rho.zip_with(&k3, |r, k| r + dt * k);
    let k4 = vlasov_rhs(&end, a, phi)?;
    let mut next = rho.clone();
    for i in 0..next.values().len() {
        next.values_mut()[i] += dt / 6.0
            * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i]);
    }
    Ok(next)
}

/// Tolerated negative undershoot per step; smaller values are clipped to 0,
/// larger ones abort with a step-size error.
const NEGATIVITY_TOLERANCE: f64 = 1e-13;

/// Integrate the kinetic equation with classical RK4 and return the fields
/// at the requested output times.
///
/// Steps are shortened to land exactly on each output time. The nominal
/// step must satisfy dt * ||a||_L1 <= 0.1.
pub fn integrate(
    rho0: &DensityField,
    t_end: f64,
    dt: f64,
    output_times: &[f64],
    a: &PairKernel,
    phi: &PairKernel,
) -> Result<Vec<(f64, DensityField)>> {
    if !crate::check::positive(dt) {
        return Err(Error::Input("dt must be positive".into()));
    }
    if dt * a.l1_norm() > 0.1 + 1e-12 {
        return Err(Error::Input(format!(
            "stability guard violated: dt * ||a||_L1 = {:.3e} > 0.1",
            dt * a.l1_norm()
        )));
    }
    if !crate::check::nonnegative(t_end) {
        return Err(Error::Input("t_end must be nonnegative".into()));
    }
    if output_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Input("output times must be sorted ascending".into()));
    }
    if output_times.iter().any(|&t| t < 0.0 || t > t_end) {
        return Err(Error::Input("output times must lie in [0, t_end]".into()));
    }
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(output_times.len());
    for &target in output_times {
        while target - t > 1e-12 * t_end.max(1.0) {
            let step = dt.min(target - t);
            rho = rk4_step(&rho, step, a, phi)?;
            t += step;
            let min = rho.min();
            if !rho.values().iter().all(|v| v.is_finite()) {
                return Err(Error::Numerics(format!("solution blew up at t = {t:.6}")));
            }
            if min < -NEGATIVITY_TOLERANCE {
                return Err(Error::Numerics(format!(
                    "density undershoot {min:.3e} at t = {t:.6}; reduce dt"
                )));
            }
            if min < 0.0 {
                for v in rho.values_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        t = target;
        out.push((target, rho.clone()));
    }
    Ok(out)
}

/// Analytic decay rate of the Fourier mode `k` for the interaction-free
/// linearization: ||a||_L1 - \hat a(k).
pub fn linear_mode_rate(a: &PairKernel, wave: &[f64]) -> f64 {
    a.l1_norm() - a.fourier(wave)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFamily;
    use std::f64::consts::PI;

    fn torus(l: f64) -> Torus {
        Torus::new(1, l).unwrap()
    }

    fn gauss_kernel(a: f64, sigma: f64, l: f64) -> PairKernel {
        PairKernel::new(KernelFamily::Gaussian { a, sigma }, 1, l).unwrap()
    }

    #[test]
    fn convolve_with_delta_is_identity() {
        let grid = Grid::new(torus(8.0), 64).unwrap();
        let f = DensityField::from_fn(grid, |x| 1.0 + (2.0 * PI * x[0] / 8.0).sin());
        let mut delta = vec![0.0; grid.num_cells()];
        delta[0] = 1.0 / grid.cell_volume();
        let g = DensityField::new(grid, delta).unwrap();
        let conv = convolve(&f, &g).unwrap();
        for (a, b) in conv.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn convolve_constant_gives_l1_scaling() {
        let grid = Grid::new(torus(10.0), 128).unwrap();
        let c = 1.7;
        let f = DensityField::constant(grid, c);
        let a = gauss_kernel(0.9, 0.4, 10.0);
        let conv = convolve_kernel(&f, &a).unwrap();
        for &v in conv.values() {
            assert!((v - c * a.l1_norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn convolve_integral_factorizes() {
        let grid = Grid::new(torus(10.0), 128).unwrap();
        let f = DensityField::from_fn(grid, |x| 0.5 + 0.3 * (2.0 * PI * x[0] / 10.0).cos());
        let a = gauss_kernel(1.1, 0.5, 10.0);
        let conv = convolve_kernel(&f, &a).unwrap();
        let lhs = conv.quadrature();
        let rhs = f.quadrature() * a.l1_norm();
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn convolve_grid_mismatch_is_error() {
        let g1 = Grid::new(torus(8.0), 16).unwrap();
        let g2 = Grid::new(torus(8.0), 32).unwrap();
        let f = DensityField::constant(g1, 1.0);
        let g = DensityField::constant(g2, 1.0);
        assert!(matches!(convolve(&f, &g), Err(Error::Input(_))));
    }

    #[test]
    fn rhs_vanishes_on_homogeneous_state() {
        let grid = Grid::new(torus(10.0), 64).unwrap();
        let rho = DensityField::constant(grid, 0.8);
        let a = gauss_kernel(1.0, 0.5, 10.0);
        let phi = gauss_kernel(0.5, 0.4, 10.0);
        let rhs = vlasov_rhs(&rho, &a, &phi).unwrap();
        let scale = 0.8 * a.l1_norm();
        for &v in rhs.values() {
            assert!(v.abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn rhs_conserves_mass() {
        let grid = Grid::new(torus(10.0), 128).unwrap();
        let rho = DensityField::from_fn(grid, |x| {
            1.0 + 0.5 * (2.0 * PI * x[0] / 10.0).cos() + 0.2 * (6.0 * PI * x[0] / 10.0).sin()
        });
        let a = gauss_kernel(1.0, 0.6, 10.0);
        let phi = gauss_kernel(0.7, 0.5, 10.0);
        let rhs = vlasov_rhs(&rho, &a, &phi).unwrap();
        let total: f64 = rhs.values().iter().map(|v| v.abs()).sum::<f64>();
        assert!(rhs.quadrature().abs() < 1e-10 * total.max(1.0));
    }

    /// With phi = 0 the equation is linear and diagonal in Fourier space:
    /// rhs of c + delta cos(kx) is delta (\hat a(k) - ||a||) cos(kx).
    #[test]
    fn rhs_diagonalizes_interaction_free_modes() {
        let l = 10.0;
        let grid = Grid::new(torus(l), 256).unwrap();
        let a = gauss_kernel(1.0, 0.5, l);
        let phi = PairKernel::new(KernelFamily::TopHat { h: 0.0, r: 1.0 }, 1, l).unwrap();
        let k = grid.wave_vector(&[2]);
        let (c, delta) = (1.0, 0.25);
        let rho = DensityField::from_fn(grid, |x| c + delta * (k[0] * x[0]).cos());
        let rhs = vlasov_rhs(&rho, &a, &phi).unwrap();
        let coeff = delta * (a.fourier(&k) - a.l1_norm());
        for (i, &v) in rhs.values().iter().enumerate() {
            let x = grid.position(i)[0];
            assert!((v - coeff * (k[0] * x).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn homogeneous_state_is_stationary_under_integration() {
        let grid = Grid::new(torus(10.0), 64).unwrap();
        let rho0 = DensityField::constant(grid, 0.9);
        let a = gauss_kernel(1.0, 0.5, 10.0);
        let phi = gauss_kernel(0.4, 0.5, 10.0);
        let traj = integrate(&rho0, 2.0, 0.05, &[0.0, 1.0, 2.0], &a, &phi).unwrap();
        for (_, rho) in &traj {
            for &v in rho.values() {
                assert!((v - 0.9).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interaction_free_mode_decay_matches_analytic_rate() {
        let l = 10.0;
        let grid = Grid::new(torus(l), 256).unwrap();
        let a = gauss_kernel(1.0, 0.5, l);
        let phi = PairKernel::new(KernelFamily::TopHat { h: 0.0, r: 1.0 }, 1, l).unwrap();
        let k = grid.wave_vector(&[3]);
        let delta = 0.2;
        let rho0 = DensityField::from_fn(grid, |x| 1.0 + delta * (k[0] * x[0]).cos());
        let t = 1.0;
        let traj = integrate(&rho0, t, 0.01, &[t], &a, &phi).unwrap();
        let project = |f: &DensityField| {
            let h = grid.spacing();
            2.0 * h / l
                * f.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * (k[0] * grid.position(i)[0]).cos())
                    .sum::<f64>()
        };
        let amp = project(&traj[0].1);
        let measured = -(amp / delta).ln() / t;
        let analytic = linear_mode_rate(&a, &k);
        assert!(
            (measured / analytic - 1.0).abs() < 1e-6,
            "measured {measured} analytic {analytic}"
        );
    }

    #[test]
    fn mass_conserved_along_trajectory() {
        let l = 10.0;
        let grid = Grid::new(torus(l), 128).unwrap();
        let a = gauss_kernel(1.0, 0.5, l);
        let phi = gauss_kernel(0.6, 0.4, l);
        let rho0 = DensityField::from_fn(grid, |x| {
            0.8 + 0.4 * (-((x[0] - 5.0) / 1.2f64).powi(2) / 2.0).exp()
        });
        let mass0 = rho0.quadrature();
        let traj = integrate(&rho0, 2.0, 0.05, &[0.5, 1.0, 2.0], &a, &phi).unwrap();
        for (_, rho) in &traj {
            assert!((rho.quadrature() - mass0).abs() / mass0 < 1e-8);
        }
    }

    #[test]
    fn step_guard_and_time_validation() {
        let grid = Grid::new(torus(10.0), 64).unwrap();
        let rho0 = DensityField::constant(grid, 1.0);
        let a = gauss_kernel(1.0, 0.5, 10.0);
        let phi = gauss_kernel(0.2, 0.5, 10.0);
        assert!(matches!(
            integrate(&rho0, 1.0, 0.5, &[1.0], &a, &phi),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            integrate(&rho0, 1.0, 0.05, &[0.7, 0.3], &a, &phi),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            integrate(&rho0, 1.0, 0.05, &[2.0], &a, &phi),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn linear_mode_rate_examples() {
        let l = 10.0;
        // Zero mode carries the mass: rate 0.
        let a = gauss_kernel(1.0, 0.5, l);
        assert_eq!(linear_mode_rate(&a, &[0.0]), 0.0);
        // d=1 top-hat at kR = pi: transform vanishes, rate = ||a||_L1 = 1.
        let th = PairKernel::new(KernelFamily::TopHat { h: 1.0, r: 0.5 }, 1, l).unwrap();
        let rate = linear_mode_rate(&th, &[2.0 * PI]);
        assert!((rate - 1.0).abs() < 1e-14);
        // Gaussian: || a ||_1 (1 - exp(-sigma^2 k^2 / 2)).
        let k: f64 = 1.3;
        let expect = a.l1_norm() * (1.0 - (-0.5 * 0.25 * k * k).exp());
        assert!((linear_mode_rate(&a, &[k]) - expect).abs() < 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            /// Linearity of the spectral convolution in its first argument.
            #[test]
            fn convolve_is_linear(a0 in -2.0f64..2.0, a1 in -2.0f64..2.0, m in 1i64..5) {
                let grid = Grid::new(torus(8.0), 32).unwrap();
                let f = DensityField::from_fn(grid, |x| (2.0 * PI * m as f64 * x[0] / 8.0).sin());
                let g = DensityField::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x[0] / 8.0).cos());
                let kern = sample_kernel(
                    grid,
                    &PairKernel::new(KernelFamily::Gaussian { a: 1.0, sigma: 0.4 }, 1, 8.0).unwrap(),
                )
                .unwrap();
                let combo = f.zip_with(&g, |x, y| a0 * x + a1 * y);
                let lhs = convolve(&combo, &kern).unwrap();
                let cf = convolve(&f, &kern).unwrap();
                let cg = convolve(&g, &kern).unwrap();
                for i in 0..lhs.values().len() {
                    let rhs = a0 * cf.values()[i] + a1 * cg.values()[i];
                    prop_assert!((lhs.values()[i] - rhs).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn two_dimensional_convolution_mass() {
        let t = Torus::new(2, 6.0).unwrap();
        let grid = Grid::new(t, 32).unwrap();
        let f = DensityField::from_fn(grid, |x| {
            1.0 + 0.3 * (2.0 * PI * x[0] / 6.0).cos() * (2.0 * PI * x[1] / 6.0).sin()
        });
        let a = PairKernel::new(KernelFamily::Gaussian { a: 1.0, sigma: 0.35 }, 2, 6.0).unwrap();
        let conv = convolve_kernel(&f, &a).unwrap();
        let expect = f.quadrature() * a.l1_norm();
        assert!((conv.quadrature() - expect).abs() < 1e-9 * expect.abs());
    }
}
