//! Closed-form calculators for the scale-of-Banach-spaces norm bounds
//! satisfied by the generating-functional evolution operators, a
//! conservative local existence time, and a randomized falsification
//! harness checking the implemented operators against the bounds on
//! exponential functionals.
//!
//! The scale norm is `||B||_alpha = sup_theta |B(theta)| e^{-||theta||_L1 / alpha}`,
//! nested as `||.||_{alpha'} <= ||.||_{alpha''}` for alpha' < alpha''. On
//! the exponential subclass the norm is computable in closed form, which is
//! what makes the numerical verification possible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{apply_operator, OperatorVariant, TestFunction};
use crate::kernels::PairKernel;
use crate::vlasov::DensityField;

/// Banach-scale data 0 < alpha <= alpha' < alpha'' <= alpha0, with an
/// optional scaling parameter epsilon for the gap bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParameters {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub alpha_dprime: f64,
    pub alpha0: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl ScaleParameters {
    pub fn new(
        alpha: f64,
        alpha_prime: f64,
        alpha_dprime: f64,
        alpha0: f64,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        let p = ScaleParameters { alpha, alpha_prime, alpha_dprime, alpha0, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 < self.alpha
            && self.alpha <= self.alpha_prime
            && self.alpha_prime < self.alpha_dprime
            && self.alpha_dprime <= self.alpha0;
        if !ordered {
            return Err(Error::Domain(format!(
                "scale parameters must satisfy 0 < alpha <= alpha' < alpha'' <= alpha0, got \
                 alpha={} alpha'={} alpha''={} alpha0={}",
                self.alpha, self.alpha_prime, self.alpha_dprime, self.alpha0
            )));
        }
        if let Some(eps) = self.epsilon {
            if !crate::check::positive(eps) {
                return Err(Error::Domain("epsilon must be positive and finite".into()));
            }
        }
        Ok(())
    }
}

/// Scale norm of an exponential functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleNorm {
    Finite(f64),
    Unbounded,
}

impl ScaleNorm {
    pub fn is_finite(&self) -> bool {
        matches!(self, ScaleNorm::Finite(_))
    }
}

/// Scale norm of `B(theta) = exp(int rho theta)`.
///
/// The exponent is `int rho theta - ||theta||_1 / alpha <= (||rho||_inf - 1/alpha) ||theta||_1`,
/// so the supremum is 1 (attained at theta = 0) whenever
/// `max rho <= 1/alpha`; otherwise an indicator concentrated near the
/// maximizer drives the norm to infinity.
pub fn scale_norm_exponential(rho: &DensityField, alpha: f64) -> Result<ScaleNorm> {
    if !crate::check::positive(alpha) {
        return Err(Error::Domain("alpha must be positive and finite".into()));
    }
    if rho.min() < 0.0 {
        return Err(Error::Input("density must be nonnegative".into()));
    }
    if rho.max() <= 1.0 / alpha {
        Ok(ScaleNorm::Finite(1.0))
    } else {
        Ok(ScaleNorm::Unbounded)
    }
}

/// Norm bound for the generic hop-type operator whose variational argument
/// is reweighted by a multiplier family of sup norm `c0` and shifted by an
/// L1 family of norm `c1`:
///
/// ```text
/// ||L0 B||_{alpha'} <= 2 e^{c1/alpha} ||a||_L1 alpha' / (alpha - c0 alpha') ||B||_alpha,
/// ```
///
/// valid for `c0 alpha' < alpha`.
pub fn general_hop_bound(
    c0: f64,
    c1: f64,
    alpha: f64,
    alpha_prime: f64,
    a_l1: f64,
) -> Result<f64> {
    if !crate::check::positive(alpha) || !crate::check::positive(alpha_prime) {
        return Err(Error::Domain("alpha and alpha' must be positive".into()));
    }
    if c0 * alpha_prime >= alpha {
        return Err(Error::Domain(format!(
            "bound requires c0 alpha' < alpha, got c0 alpha' = {} vs alpha = {alpha}",
            c0 * alpha_prime
        )));
    }
    Ok(2.0 * (c1 / alpha).exp() * a_l1 * alpha_prime / (alpha - c0 * alpha_prime))
}

/// Norm bound for the hop-dynamics operator across the scale, mapping
/// E_{alpha''} into E_{alpha'}:
///
/// ```text
/// ||L B||_{alpha'} <= 2 e^{||phi||_L1 / alpha} ||a||_L1 alpha0 / (alpha'' - alpha') ||B||_{alpha''}.
/// ```
///
/// The identical constant bounds the scaled renormalized operators and the
/// mean-field limit operator.
pub fn kawasaki_operator_bound(params: &ScaleParameters, a_l1: f64, phi_l1: f64) -> Result<f64> {
    params.validate()?;
    Ok(2.0 * (phi_l1 / params.alpha).exp() * a_l1 * params.alpha0
        / (params.alpha_dprime - params.alpha_prime))
}

/// Norm bound on the gap between the scaled renormalized operator and its
/// mean-field limit, linear in epsilon:
///
/// ```text
/// ||L_eps B - L_V B||_{alpha'} <= 2 eps ||a||_L1 ||phi||_Linf (e alpha0 / alpha) ||B||_{alpha''}
///     e^{||phi||_L1/alpha} [ (2e ||phi||_L1 + alpha0/e) / (alpha''-alpha')
///                            + 8 alpha0^2 / (alpha''-alpha')^2 ].
/// ```
pub fn operator_gap_bound(
    params: &ScaleParameters,
    a_l1: f64,
    phi_l1: f64,
    phi_linf: f64,
    b_norm: f64,
) -> Result<f64> {
    params.validate()?;
    let eps = params
        .epsilon
        .ok_or_else(|| Error::Domain("gap bound requires epsilon".into()))?;
    let e = std::f64::consts::E;
    let da = params.alpha_dprime - params.alpha_prime;
    let bracket = (2.0 * e * phi_l1 + params.alpha0 / e) / da
        + 8.0 * params.alpha0 * params.alpha0 / (da * da);
    Ok(2.0 * eps * a_l1 * phi_linf * (e * params.alpha0 / params.alpha) * b_norm
        * (phi_l1 / params.alpha).exp()
        * bracket)
}

/// Conservative local existence time for the scale evolution:
/// `T = (alpha0 - alpha) / (e M)` with `M = 2 e^{||phi||_L1/alpha} ||a||_L1 alpha0`
/// the operator-bound constant. A conservative estimate: the true horizon
/// may be longer.
pub fn existence_time(alpha: f64, alpha0: f64, a_l1: f64, phi_l1: f64) -> Result<f64> {
    if !crate::check::positive(alpha) || alpha >= alpha0 || alpha0.is_nan() {
        return Err(Error::Domain(format!(
            "existence time requires 0 < alpha < alpha0, got alpha={alpha} alpha0={alpha0}"
        )));
    }
    let m = 2.0 * (phi_l1 / alpha).exp() * a_l1 * alpha0;
    Ok((alpha0 - alpha) / (std::f64::consts::E * m))
}

/// Which inequality the randomized verifier exercises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVariant {
    /// Generic bound instantiated for the hop operator
    /// (c0 = 1, c1 = ||phi||_L1, alpha := alpha'').
    GeneralHop,
    /// Scale bound checked against all three operator variants.
    KawasakiOperator,
    /// Epsilon-linear bound on the scaled-minus-limit operator gap.
    OperatorGap,
}

impl BoundVariant {
    pub fn name(&self) -> &'static str {
        match self {
            BoundVariant::GeneralHop => "general-hop",
            BoundVariant::KawasakiOperator => "kawasaki-operator",
            BoundVariant::OperatorGap => "operator-gap",
        }
    }
}

/// Outcome of the randomized bound check.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub variant: String,
    pub max_ratio: f64,
    pub n_samples: usize,
    pub seed: u64,
}

fn random_theta(torus: crate::geometry::Torus, target_l1: f64, rng: &mut ChaCha8Rng) -> TestFunction {
    let l = torus.side;
    let d = torus.dim;
    let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
    let family = rng.random_range(0..3u32);
    let shape = match family {
        0 => TestFunction::GaussianBump {
            amplitude: 1.0,
            center: (0..d).map(|_| l * rng.random::<f64>()).collect(),
            width: l / 16.0 + (l / 16.0) * rng.random::<f64>(),
        },
        1 => TestFunction::Cosine {
            amplitude: 1.0,
            mode: (0..d).map(|_| 1 + rng.random_range(0..4i64)).collect(),
        },
        _ => TestFunction::Indicator {
            amplitude: 1.0,
            center: (0..d).map(|_| l * rng.random::<f64>()).collect(),
            half_width: (0..d).map(|_| l / 16.0 + (3.0 * l / 16.0) * rng.random::<f64>()).collect(),
        },
    };
    let unit_l1 = shape.l1_norm(torus);
    shape.scaled(sign * target_l1 / unit_l1)
}

/// Randomized falsification of a norm inequality on the exponential
/// subclass: samples test functions with L1 magnitudes up to `20 alpha0`,
/// computes `|operator value| e^{-||theta||_1 / alpha'} / bound` for each,
/// and returns the maximum observed ratio. Any value above 1 is a
/// counterexample to the inequality (or to the implementation).
///
/// Requires `max rho <= 1 / alpha''` so that the exponential functional has
/// unit norm in E_{alpha''}.
pub fn verify_bound_randomized(
    variant: BoundVariant,
    rho: &DensityField,
    params: &ScaleParameters,
    a: &PairKernel,
    phi: &PairKernel,
    n_theta: usize,
    seed: u64,
) -> Result<BoundCheck> {
    params.validate()?;
    if !scale_norm_exponential(rho, params.alpha_dprime)?.is_finite() {
        return Err(Error::Domain(
            "max rho exceeds 1/alpha''; the exponential functional leaves the scale space".into(),
        ));
    }
    let a_l1 = a.l1_norm();
    let phi_l1 = phi.l1_norm();
    let phi_linf = phi.linf_norm();
    let bound = match variant {
        BoundVariant::GeneralHop => {
            general_hop_bound(1.0, phi_l1, params.alpha_dprime, params.alpha_prime, a_l1)?
        }
        BoundVariant::KawasakiOperator => kawasaki_operator_bound(params, a_l1, phi_l1)?,
        BoundVariant::OperatorGap => operator_gap_bound(params, a_l1, phi_l1, phi_linf, 1.0)?,
    };
    let torus = rho.grid().torus();
    let eps = params.epsilon.unwrap_or(1.0);

    let ratios: Result<Vec<f64>> = (0..n_theta)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let target_l1 = 20.0 * params.alpha0 * rng.random::<f64>();
            let theta = random_theta(torus, target_l1, &mut rng);
            let weight = (-theta.l1_norm(torus) / params.alpha_prime).exp();
            let value = match variant {
                BoundVariant::GeneralHop => {
                    apply_operator(rho, &theta, OperatorVariant::Kawasaki, a, phi)?.abs()
                }
                BoundVariant::KawasakiOperator => {
                    let kaw = apply_operator(rho, &theta, OperatorVariant::Kawasaki, a, phi)?;
                    let ren = apply_operator(
                        rho,
                        &theta,
                        OperatorVariant::ScaledRenormalized { epsilon: eps },
                        a,
                        phi,
                    )?;
                    let vla = apply_operator(rho, &theta, OperatorVariant::Vlasov, a, phi)?;
                    kaw.abs().max(ren.abs()).max(vla.abs())
                }
                BoundVariant::OperatorGap => {
                    let ren = apply_operator(
                        rho,
                        &theta,
                        OperatorVariant::ScaledRenormalized { epsilon: eps },
                        a,
                        phi,
                    )?;
                    let vla = apply_operator(rho, &theta, OperatorVariant::Vlasov, a, phi)?;
                    (ren - vla).abs()
                }
            };
            Ok(value * weight / bound)
        })
        .collect();
    let max_ratio = ratios?.into_iter().fold(0.0f64, f64::max);
    Ok(BoundCheck {
        variant: variant.name().to_string(),
        max_ratio,
        n_samples: n_theta,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Torus;
    use crate::kernels::KernelFamily;
    use crate::vlasov::Grid;

    fn params(alpha: f64, ap: f64, app: f64, a0: f64) -> ScaleParameters {
        ScaleParameters::new(alpha, ap, app, a0, None).unwrap()
    }

    #[test]
    fn ordering_is_enforced() {
        assert!(ScaleParameters::new(1.0, 0.5, 2.0, 2.0, None).is_err());
        assert!(ScaleParameters::new(1.0, 1.0, 1.0, 2.0, None).is_err());
        assert!(ScaleParameters::new(0.5, 0.5, 1.0, 1.0, None).is_ok());
        assert!(ScaleParameters::new(0.5, 0.6, 1.0, 1.0, Some(-1.0)).is_err());
    }

    #[test]
    fn scale_norm_of_exponential() {
        let grid = Grid::new(Torus::new(1, 8.0).unwrap(), 32).unwrap();
        let zero = DensityField::constant(grid, 0.0);
        assert_eq!(scale_norm_exponential(&zero, 1.0).unwrap(), ScaleNorm::Finite(1.0));
        // max rho = 1/alpha exactly: still finite.
        let half = DensityField::constant(grid, 0.5);
        assert_eq!(scale_norm_exponential(&half, 2.0).unwrap(), ScaleNorm::Finite(1.0));
        // max rho = 2/alpha: unbounded.
        assert_eq!(scale_norm_exponential(&half, 4.0).unwrap(), ScaleNorm::Unbounded);
    }

    #[test]
    fn general_hop_bound_values() {
        // c0=1, c1=0, alpha=2, alpha'=1, ||a||=1 -> 2.
        let v = general_hop_bound(1.0, 0.0, 2.0, 1.0, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        // Shifting c1 by alpha multiplies by e.
        let v2 = general_hop_bound(1.0, 2.0, 2.0, 1.0, 1.0).unwrap();
        assert!((v2 / v - std::f64::consts::E).abs() < 1e-12);
        // Pole when c0 alpha' -> alpha.
        assert!(general_hop_bound(1.0, 0.0, 1.0, 1.0, 1.0).is_err());
        let near = general_hop_bound(1.0, 0.0, 1.0 + 1e-9, 1.0, 1.0).unwrap();
        assert!(near > 1e8);
    }

    #[test]
    fn operator_bound_values() {
        // alpha=1, alpha0=2, alpha''-alpha'=1, ||a||=1, ||phi||=0 -> 4.
        let p = params(1.0, 1.0, 2.0, 2.0);
        let v = kawasaki_operator_bound(&p, 1.0, 0.0).unwrap();
        assert!((v - 4.0).abs() < 1e-15);
        // phi_l1 = alpha multiplies by e.
        let v2 = kawasaki_operator_bound(&p, 1.0, 1.0).unwrap();
        assert!((v2 / v - std::f64::consts::E).abs() < 1e-12);
        // Halving alpha''-alpha' doubles the bound.
        let p2 = params(1.0, 1.5, 2.0, 2.0);
        let v3 = kawasaki_operator_bound(&p2, 1.0, 0.0).unwrap();
        assert!((v3 / v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_bound_values() {
        let mk = |eps| ScaleParameters::new(1.0, 1.0, 2.0, 2.0, Some(eps)).unwrap();
        // Direct evaluation at eps=0.1, a=phi_l1=phi_linf=1, B=1:
        // 0.2 * (2e) * e * [(2e + 2/e) + 32] = 112.8229730676297.
        let v = operator_gap_bound(&mk(0.1), 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((v - 112.8229730676297).abs() < 1e-10, "got {v}");
        // Linear in eps; zero kill switches.
        let v2 = operator_gap_bound(&mk(0.2), 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((v2 / v - 2.0).abs() < 1e-12);
        assert_eq!(operator_gap_bound(&mk(0.1), 1.0, 1.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(operator_gap_bound(&params(1.0, 1.0, 2.0, 2.0), 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn existence_time_values() {
        // alpha=1, alpha0=2, ||a||=1, ||phi||=0: T = 1/(4e).
        let t = existence_time(1.0, 2.0, 1.0, 0.0).unwrap();
        assert!((t - 1.0 / (4.0 * std::f64::consts::E)).abs() < 1e-15);
        assert!((t - 0.09196986029286058).abs() < 1e-15);
        // Doubling ||a|| halves T.
        let t2 = existence_time(1.0, 2.0, 2.0, 0.0).unwrap();
        assert!((t / t2 - 2.0).abs() < 1e-12);
        // Collapse of the scale.
        let tiny = existence_time(2.0 - 1e-12, 2.0, 1.0, 0.0).unwrap();
        assert!(tiny < 1e-12);
        assert!(existence_time(2.0, 2.0, 1.0, 0.0).is_err());
    }

    /// Nesting of the scale: a density bounded by 1/alpha0 yields a
    /// functional of unit norm in every space of the scale.
    #[test]
    fn scale_embedding_on_exponential_subclass() {
        let grid = Grid::new(Torus::new(1, 8.0).unwrap(), 32).unwrap();
        let alpha0 = 1.25;
        let rho = DensityField::constant(grid, 1.0 / alpha0);
        for alpha in [alpha0, 1.0, 0.5, 0.1, 0.01] {
            assert_eq!(
                scale_norm_exponential(&rho, alpha).unwrap(),
                ScaleNorm::Finite(1.0),
                "alpha {alpha}"
            );
        }
        assert_eq!(
            scale_norm_exponential(&rho, alpha0 * 1.01).unwrap(),
            ScaleNorm::Unbounded
        );
    }

    #[test]
    fn bounds_monotone_in_kernel_norms() {
        let p = params(0.5, 0.6, 0.8, 1.0);
        for a_l1 in [0.5, 1.0, 2.0] {
            let lo = kawasaki_operator_bound(&p, a_l1, 0.3).unwrap();
            let hi = kawasaki_operator_bound(&p, a_l1 + 0.1, 0.3).unwrap();
            assert!(hi > lo);
            let lo_phi = kawasaki_operator_bound(&p, a_l1, 0.3).unwrap();
            let hi_phi = kawasaki_operator_bound(&p, a_l1, 0.4).unwrap();
            assert!(hi_phi > lo_phi);
        }
    }

    #[test]
    fn verifier_requires_bounded_density() {
        let grid = Grid::new(Torus::new(1, 8.0).unwrap(), 32).unwrap();
        let rho = DensityField::constant(grid, 10.0);
        let p = params(0.5, 0.6, 0.8, 1.0);
        let a = PairKernel::new(KernelFamily::Gaussian { a: 1.0, sigma: 0.4 }, 1, 8.0).unwrap();
        let phi = PairKernel::new(KernelFamily::Gaussian { a: 0.5, sigma: 0.4 }, 1, 8.0).unwrap();
        assert!(matches!(
            verify_bound_randomized(BoundVariant::KawasakiOperator, &rho, &p, &a, &phi, 4, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn verifier_never_sees_ratio_above_one_smoke() {
        let l = 8.0;
        let grid = Grid::new(Torus::new(1, l).unwrap(), 64).unwrap();
        let rho = DensityField::from_fn(grid, |x| {
            0.6 + 0.4 * (-((x[0] - 4.0) / 0.9f64).powi(2) / 2.0).exp()
        });
        let p = ScaleParameters::new(0.5, 0.6, 0.8, 1.0, Some(0.25)).unwrap();
        let a = PairKernel::new(KernelFamily::Gaussian { a: 1.0, sigma: 0.4 }, 1, l).unwrap();
        let phi = PairKernel::new(KernelFamily::Gaussian { a: 0.5, sigma: 0.5 }, 1, l).unwrap();
        for variant in [
            BoundVariant::GeneralHop,
            BoundVariant::KawasakiOperator,
            BoundVariant::OperatorGap,
        ] {
            let check = verify_bound_randomized(variant, &rho, &p, &a, &phi, 32, 7).unwrap();
            assert!(
                check.max_ratio <= 1.0,
                "{}: ratio {}",
                check.variant,
                check.max_ratio
            );
        }
        // Halving epsilon keeps the gap under its (epsilon-linear) bound.
        let halved = ScaleParameters::new(0.5, 0.6, 0.8, 1.0, Some(0.125)).unwrap();
        let check =
            verify_bound_randomized(BoundVariant::OperatorGap, &rho, &halved, &a, &phi, 32, 7)
                .unwrap();
        assert!(check.max_ratio <= 1.0);
    }

    /// Homogeneous density: the limit operator vanishes identically, so the
    /// gap check reduces to the scaled operator alone and stays well below
    /// the bound.
    #[test]
    fn verifier_homogeneous_limit_operator() {
        let grid = Grid::new(Torus::new(1, 8.0).unwrap(), 64).unwrap();
        let rho = DensityField::constant(grid, 0.9);
        let p = ScaleParameters::new(0.5, 0.6, 0.8, 1.0, Some(0.1)).unwrap();
        let a = PairKernel::new(KernelFamily::Gaussian { a: 1.0, sigma: 0.4 }, 1, 8.0).unwrap();
        let phi = PairKernel::new(KernelFamily::Gaussian { a: 0.5, sigma: 0.5 }, 1, 8.0).unwrap();
        let check =
            verify_bound_randomized(BoundVariant::OperatorGap, &rho, &p, &a, &phi, 16, 3).unwrap();
        assert!(check.max_ratio <= 1.0);
    }
}
