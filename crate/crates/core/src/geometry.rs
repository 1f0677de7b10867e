//! Torus geometry, finite particle configurations, relative interaction
//! energy with cell-list acceleration, and Poisson point-process sampling.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::PairKernel;
use crate::vlasov::DensityField;

/// Periodic box [0, L)^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Torus {
    pub dim: usize,
    pub side: f64,
}

impl Torus {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension must be 1..=3, got {dim}")));
        }
        if !crate::check::positive(side) {
            return Err(Error::Config("torus side must be positive and finite".into()));
        }
        Ok(Torus { dim, side })
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Map a coordinate into [0, L).
    pub fn wrap_coord(&self, x: f64) -> f64 {
        let w = x - self.side * (x / self.side).floor();
        // x = -1e-17 wraps to L by rounding; fold it back.
        if w >= self.side {
            w - self.side
        } else {
            w
        }
    }

    pub fn wrap(&self, x: &mut [f64]) {
        for c in x {
            *c = self.wrap_coord(*c);
        }
    }

    /// Componentwise y - x reduced to [-L/2, L/2); antisymmetric under swap.
    pub fn min_image_displacement(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let d = yi - xi;
                d - self.side * (d / self.side + 0.5).floor()
            })
            .collect()
    }

    pub fn min_image_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.min_image_displacement(x, y)
            .iter()
            .map(|&c| c * c)
            .sum::<f64>()
            .sqrt()
    }
}

/// A finite ordered point set on a torus.
///
/// Indices are stable so that hop events can reference particles; coincident
/// points are allowed (they occur with probability zero under sampling).
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    torus: Torus,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn new(torus: Torus, coords: Vec<f64>) -> Result<Self> {
        if !coords.len().is_multiple_of(torus.dim) {
            return Err(Error::Input(format!(
                "coordinate buffer length {} is not a multiple of dimension {}",
                coords.len(),
                torus.dim
            )));
        }
        if coords.iter().any(|&c| !c.is_finite() || c < 0.0 || c >= torus.side) {
            return Err(Error::Input("coordinates must lie in [0, L)".into()));
        }
        Ok(Configuration { torus, coords })
    }

    pub fn empty(torus: Torus) -> Self {
        Configuration { torus, coords: Vec::new() }
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.torus.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.torus.dim;
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.torus.dim)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.torus.dim {
            return Err(Error::Input("point dimension mismatch".into()));
        }
        if p.iter().any(|&c| !c.is_finite() || c < 0.0 || c >= self.torus.side) {
            return Err(Error::Input("point outside [0, L)".into()));
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub(crate) fn set_point(&mut self, i: usize, p: &[f64]) {
        let d = self.torus.dim;
        self.coords[i * d..(i + 1) * d].copy_from_slice(p);
    }

    /// Sub-configuration picked out by indices (order preserved).
    pub fn subset(&self, indices: &[usize]) -> Configuration {
        let d = self.torus.dim;
        let mut coords = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Configuration { torus: self.torus, coords }
    }

    /// CSV serialization: `# d=<d> L=<L>` header line, `x1,..,xd` column
    /// header, one row per point. Floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# d={} L={:.16e}", self.torus.dim, self.torus.side)?;
        let cols: Vec<String> = (1..=self.torus.dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", cols.join(","))?;
        for p in self.iter_points() {
            let row: Vec<String> = p.iter().map(|c| format!("{c:.16e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Relative interaction energy E(y, gamma) = sum_{x in gamma} phi(x - y).
///
/// Sums in index order so results are bitwise reproducible.
pub fn relative_energy(config: &Configuration, y: &[f64], phi: &PairKernel) -> f64 {
    let torus = config.torus();
    let mut e = 0.0;
    for p in config.iter_points() {
        let d = torus.min_image_displacement(y, p);
        e += phi.eval_unchecked(&d);
    }
    e
}

/// Uniform cell decomposition of the torus for range queries.
///
/// Cell side >= the interaction range, so all partners of a point lie in
/// its own or adjacent cells.
#[derive(Debug, Clone)]
pub struct CellList {
    torus: Torus,
    cells_per_dim: usize,
    cell_side: f64,
    cells: Vec<Vec<usize>>,
    cell_of: Vec<usize>,
}

impl CellList {
    pub fn build(config: &Configuration, range: f64) -> Result<Self> {
        if !crate::check::positive(range) {
            return Err(Error::Input("interaction range must be positive".into()));
        }
        let torus = config.torus();
        let cells_per_dim = ((torus.side / range).floor() as usize).max(1);
        let cell_side = torus.side / cells_per_dim as f64;
        let n_cells = cells_per_dim.pow(torus.dim as u32);
        let mut list = CellList {
            torus,
            cells_per_dim,
            cell_side,
            cells: vec![Vec::new(); n_cells],
            cell_of: Vec::with_capacity(config.len()),
        };
        for (i, p) in config.iter_points().enumerate() {
            let c = list.cell_index(p);
            list.cells[c].push(i);
            list.cell_of.push(c);
        }
        Ok(list)
    }

    pub fn cells_per_dim(&self) -> usize {
        self.cells_per_dim
    }

    fn cell_index(&self, p: &[f64]) -> usize {
        let mut idx = 0;
        for &c in p {
            let mut k = (c / self.cell_side) as usize;
            if k >= self.cells_per_dim {
                k = self.cells_per_dim - 1;
            }
            idx = idx * self.cells_per_dim + k;
        }
        idx
    }

    pub(crate) fn move_point(&mut self, i: usize, new_pos: &[f64]) {
        let old = self.cell_of[i];
        let new = self.cell_index(new_pos);
        if old == new {
            return;
        }
        let slot = self.cells[old].iter().position(|&j| j == i).expect("point in its cell");
        self.cells[old].swap_remove(slot);
        self.cells[new].push(i);
        self.cell_of[i] = new;
    }

    /// Indices of points in the cell containing `y` and all adjacent cells,
    /// sorted ascending.
    pub fn neighbor_candidates(&self, y: &[f64]) -> Vec<usize> {
        let d = self.torus.dim;
        let n = self.cells_per_dim as isize;
        let mut base = [0isize; 3];
        for (k, &c) in y.iter().enumerate() {
            let mut idx = (c / self.cell_side) as isize;
            if idx >= n {
                idx = n - 1;
            }
            base[k] = idx;
        }
        let mut cell_ids = Vec::new();
        let offsets: &[isize] = &[-1, 0, 1];
        let mut push_cell = |coords: &[isize]| {
            let mut idx = 0usize;
            for &c in coords.iter().take(d) {
                let wrapped = c.rem_euclid(n) as usize;
                idx = idx * self.cells_per_dim + wrapped;
            }
            cell_ids.push(idx);
        };
        match d {
            1 => {
                for &o in offsets {
                    push_cell(&[base[0] + o]);
                }
            }
            2 => {
                for &o0 in offsets {
                    for &o1 in offsets {
                        push_cell(&[base[0] + o0, base[1] + o1]);
                    }
                }
            }
            3 => {
                for &o0 in offsets {
                    for &o1 in offsets {
                        for &o2 in offsets {
                            push_cell(&[base[0] + o0, base[1] + o1, base[2] + o2]);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        cell_ids.sort_unstable();
        cell_ids.dedup();
        let mut out = Vec::new();
        for c in cell_ids {
            out.extend_from_slice(&self.cells[c]);
        }
        out.sort_unstable();
        out
    }

    /// Cell-list accelerated E(y, gamma). Candidates are visited in index
    /// order, so for compactly supported `phi` this is bitwise identical to
    /// the brute-force sum (omitted terms are exact zeros).
    pub fn relative_energy(&self, config: &Configuration, y: &[f64], phi: &PairKernel) -> f64 {
        let torus = config.torus();
        let mut e = 0.0;
        for i in self.neighbor_candidates(y) {
            let d = torus.min_image_displacement(y, config.point(i));
            e += phi.eval_unchecked(&d);
        }
        e
    }

    #[cfg(test)]
    fn total_points(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }
}

/// Sample a Poisson point process with the given (piecewise-constant on the
/// grid) intensity. Point count is Poisson(integral of the intensity);
/// positions are drawn by uniform proposals thinned against the grid
/// maximum.
pub fn poisson_sample<R: Rng + ?Sized>(
    torus: Torus,
    intensity: &DensityField,
    rng: &mut R,
) -> Result<Configuration> {
    if intensity.grid().torus() != torus {
        return Err(Error::Input("intensity grid does not match the torus".into()));
    }
    if intensity.min() < 0.0 {
        return Err(Error::Input("intensity must be nonnegative".into()));
    }
    let mass = intensity.quadrature();
    let mut config = Configuration::empty(torus);
    if mass == 0.0 {
        return Ok(config);
    }
    let max = intensity.max();
    let count = Poisson::new(mass)
        .map_err(|e| Error::Input(format!("invalid Poisson mean: {e}")))?
        .sample(rng) as u64;
    let d = torus.dim;
    let mut p = vec![0.0; d];
    for _ in 0..count {
        loop {
            for c in p.iter_mut() {
                *c = torus.side * rng.random::<f64>();
            }
            if rng.random::<f64>() * max <= intensity.value_at_point(&p) {
                break;
            }
        }
        config.push(&p)?;
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFamily;
    use crate::stats;
    use crate::vlasov::Grid;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn torus1(l: f64) -> Torus {
        Torus::new(1, l).unwrap()
    }

    #[test]
    fn min_image_wraps_across_boundary() {
        let t = torus1(10.0);
        let d = t.min_image_displacement(&[9.5], &[0.5]);
        assert!((d[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_image_identity_and_convention() {
        let t = torus1(4.0);
        assert_eq!(t.min_image_displacement(&[1.3], &[1.3])[0], 0.0);
        // Exactly L/2 apart: convention picks -L/2.
        assert_eq!(t.min_image_displacement(&[0.0], &[2.0])[0], -2.0);
    }

    #[test]
    fn relative_energy_examples() {
        let phi = PairKernel::new(KernelFamily::TopHat { h: 1.0, r: 1.5 }, 1, 4.0).unwrap();
        let t = torus1(4.0);
        let empty = Configuration::empty(t);
        assert_eq!(relative_energy(&empty, &[0.5], &phi), 0.0);

        let gamma = Configuration::new(t, vec![0.0, 1.0]).unwrap();
        assert!((relative_energy(&gamma, &[0.5], &phi) - 2.0).abs() < 1e-15);

        let t8 = torus1(8.0);
        let phi8 = PairKernel::new(KernelFamily::TopHat { h: 1.0, r: 1.5 }, 1, 8.0).unwrap();
        let single = Configuration::new(t8, vec![0.0]).unwrap();
        assert_eq!(relative_energy(&single, &[2.0], &phi8), 0.0);
    }

    #[test]
    fn energy_additivity() {
        let t = torus1(12.0);
        let phi = PairKernel::new(KernelFamily::Gaussian { a: 0.8, sigma: 0.7 }, 1, 12.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let pts: Vec<f64> = (0..8).map(|_| 12.0 * rng.random::<f64>()).collect();
            let gamma = Configuration::new(t, pts.clone()).unwrap();
            let z = [12.0 * rng.random::<f64>()];
            let y = [12.0 * rng.random::<f64>()];
            let mut extended = gamma.clone();
            extended.push(&z).unwrap();
            let lhs = relative_energy(&extended, &y, &phi);
            let rhs = relative_energy(&gamma, &y, &phi)
                + phi.eval_unchecked(&t.min_image_displacement(&y, &z));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    /// Cell-list energy is bitwise equal to the brute-force double loop on
    /// random configurations (top-hat potential, so omitted terms are 0).
    #[test]
    fn cell_list_energy_matches_brute_force() {
        let l = 20.0;
        let t = torus1(l);
        let phi = PairKernel::new(KernelFamily::TopHat { h: 0.7, r: 1.25 }, 1, l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = 1 + (rng.random::<f64>() * 200.0) as usize;
            let pts: Vec<f64> = (0..n).map(|_| l * rng.random::<f64>()).collect();
            let gamma = Configuration::new(t, pts).unwrap();
            let cells = CellList::build(&gamma, phi.range()).unwrap();
            assert_eq!(cells.total_points(), gamma.len());
            for _ in 0..5 {
                let y = [l * rng.random::<f64>()];
                let brute = relative_energy(&gamma, &y, &phi);
                let fast = cells.relative_energy(&gamma, &y, &phi);
                assert_eq!(brute.to_bits(), fast.to_bits());
            }
        }
    }

    #[test]
    fn cell_list_move_keeps_partition() {
        let l = 10.0;
        let t = torus1(l);
        let mut gamma = Configuration::new(t, vec![0.5, 3.3, 7.7, 9.9]).unwrap();
        let phi = PairKernel::new(KernelFamily::TopHat { h: 1.0, r: 1.0 }, 1, l).unwrap();
        let mut cells = CellList::build(&gamma, 1.0).unwrap();
        gamma.set_point(1, &[8.1]);
        cells.move_point(1, &[8.1]);
        assert_eq!(cells.total_points(), gamma.len());
        let brute = relative_energy(&gamma, &[8.0], &phi);
        let fast = cells.relative_energy(&gamma, &[8.0], &phi);
        assert_eq!(brute.to_bits(), fast.to_bits());
    }

    /// d = 3 cell list against brute force, including wrapped neighbors.
    #[test]
    fn cell_list_three_dimensional() {
        let l = 9.0;
        let t = Torus::new(3, l).unwrap();
        let phi = PairKernel::new(KernelFamily::TopHat { h: 0.9, r: 1.4 }, 3, l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = 30 + (rng.random::<f64>() * 120.0) as usize;
            let pts: Vec<f64> = (0..3 * n).map(|_| l * rng.random::<f64>()).collect();
            let gamma = Configuration::new(t, pts).unwrap();
            let cells = CellList::build(&gamma, phi.range()).unwrap();
            assert_eq!(cells.total_points(), n);
            for _ in 0..4 {
                let y = [
                    l * rng.random::<f64>(),
                    l * rng.random::<f64>(),
                    l * rng.random::<f64>(),
                ];
                let brute = relative_energy(&gamma, &y, &phi);
                let fast = cells.relative_energy(&gamma, &y, &phi);
                assert_eq!(brute.to_bits(), fast.to_bits());
            }
        }
    }

    #[test]
    fn poisson_sample_zero_intensity_is_empty() {
        let t = torus1(6.0);
        let grid = Grid::new(t, 16).unwrap();
        let field = DensityField::constant(grid, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = poisson_sample(t, &field, &mut rng).unwrap();
        assert!(cfg.is_empty());
    }

    #[test]
    fn poisson_sample_negative_intensity_rejected() {
        let t = torus1(6.0);
        let grid = Grid::new(t, 16).unwrap();
        let field = DensityField::new(grid, vec![-0.1; 16]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(poisson_sample(t, &field, &mut rng), Err(Error::Input(_))));
    }

    #[test]
    fn poisson_sample_mean_count() {
        let t = torus1(5.0);
        let grid = Grid::new(t, 8).unwrap();
        let c = 2.0;
        let field = DensityField::constant(grid, c);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let reps = 10_000;
        let counts: Vec<f64> = (0..reps)
            .map(|_| poisson_sample(t, &field, &mut rng).unwrap().len() as f64)
            .collect();
        let (mean, se) = stats::mean_stderr(&counts);
        let expect = c * t.volume();
        assert!((mean - expect).abs() < 3.0 * se, "mean {mean} expect {expect}");
    }

    #[test]
    fn poisson_sample_count_law_chi_square() {
        let t = torus1(5.0);
        let grid = Grid::new(t, 8).unwrap();
        let field = DensityField::constant(grid, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let counts: Vec<u64> = (0..10_000)
            .map(|_| poisson_sample(t, &field, &mut rng).unwrap().len() as u64)
            .collect();
        let gof = stats::poisson_count_gof(&counts, 10.0).unwrap();
        assert!(gof.passed, "chi2 {} > {}", gof.statistic, gof.threshold);
    }

    #[test]
    fn poisson_sample_respects_support() {
        let t = torus1(8.0);
        let grid = Grid::new(t, 32).unwrap();
        // Supported on the left half only.
        let field = DensityField::from_fn(grid, |x| if x[0] < 4.0 { 1.5 } else { 0.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let cfg = poisson_sample(t, &field, &mut rng).unwrap();
            assert!(cfg.iter_points().all(|p| p[0] < 4.0));
        }
    }

    proptest! {
        /// Antisymmetry of the minimum-image displacement away from the
        /// boundary tie at exactly L/2.
        #[test]
        fn min_image_antisymmetric(x in 0.0f64..10.0, y in 0.0f64..10.0) {
            let t = torus1(10.0);
            let xv = [x.min(10.0 - f64::EPSILON)];
            let yv = [y.min(10.0 - f64::EPSILON)];
            let d1 = t.min_image_displacement(&xv, &yv)[0];
            let d2 = t.min_image_displacement(&yv, &xv)[0];
            if d1.abs() < 5.0 - 1e-9 {
                prop_assert!((d1 + d2).abs() < 1e-12);
            }
            prop_assert!((-5.0..5.0).contains(&d1));
        }
    }
}
