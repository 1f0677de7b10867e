//! Small statistics toolbox shared by the test oracles and the runtime
//! checks: chi-square goodness-of-fit, Kolmogorov-Smirnov distance, and
//! least-squares slopes.

use crate::error::{Error, Result};

/// Standard normal quantile at 0.999 (one-sided).
pub const Z_999: f64 = 3.090_232_306_167_813;
/// Standard normal quantile at 0.9995 (two-sided test at significance 0.001).
pub const Z_9995: f64 = 3.290_526_731_491_894;
/// Asymptotic Kolmogorov-Smirnov coefficient at significance 0.001:
/// sqrt(-ln(alpha/2)/2). Critical distance is this divided by sqrt(n).
pub const KS_COEFF_001: f64 = 1.949_474_552_267_858;

/// Chi-square quantile by the Wilson-Hilferty cube approximation.
///
/// Accurate to a fraction of a percent for dof >= 5, which is all the suite
/// needs; thresholds derived from it are used as fixed acceptance gates.
pub fn chi_square_quantile(dof: usize, z: f64) -> f64 {
    let nu = dof as f64;
    let a = 2.0 / (9.0 * nu);
    nu * (1.0 - a + z * a.sqrt()).powi(3)
}

/// Outcome of a goodness-of-fit test at significance 0.001.
#[derive(Debug, Clone)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub threshold: f64,
    pub passed: bool,
}

/// Pearson chi-square against fully specified expected counts.
///
/// Expected counts below 5 are rejected as insufficient statistics; callers
/// are expected to pool sparse bins first.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<GofResult> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::Input(
            "observed/expected must have equal length >= 2".into(),
        ));
    }
    if expected.iter().any(|&e| e < 5.0) {
        return Err(Error::Stats(
            "expected count below 5 in some bin; pool bins or draw more samples".into(),
        ));
    }
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = observed.len() - 1;
    let threshold = chi_square_quantile(dof, Z_999);
    Ok(GofResult {
        statistic,
        dof,
        threshold,
        passed: statistic <= threshold,
    })
}

fn poisson_ln_pmf(k: u64, lambda: f64) -> f64 {
    k as f64 * lambda.ln() - lambda - libm::lgamma(k as f64 + 1.0)
}

/// Chi-square goodness of fit of integer counts against Poisson(lambda).
///
/// Bins are single values of k over the bulk of the distribution with both
/// tails pooled so that every expected count is >= 5.
pub fn poisson_count_gof(counts: &[u64], lambda: f64) -> Result<GofResult> {
    if counts.is_empty() {
        return Err(Error::Input("no counts".into()));
    }
    if !crate::check::positive(lambda) {
        return Err(Error::Input("lambda must be positive and finite".into()));
    }
    let n = counts.len() as f64;
    // Individual bins where n*pmf >= 5, scanning outward from the mode.
    let mode = lambda.floor() as u64;
    let mut lo = mode;
    let mut hi = mode;
    while lo > 0 && n * poisson_ln_pmf(lo - 1, lambda).exp() >= 5.0 {
        lo -= 1;
    }
    while n * poisson_ln_pmf(hi + 1, lambda).exp() >= 5.0 {
        hi += 1;
    }
    let k_bins = (hi - lo + 1) as usize;
    let mut expected = vec![0.0; k_bins + 2];
    let mut observed = vec![0u64; k_bins + 2];
    let mut bulk = 0.0;
    for (i, k) in (lo..=hi).enumerate() {
        let p = poisson_ln_pmf(k, lambda).exp();
        expected[i + 1] = n * p;
        bulk += p;
    }
    let p_lo: f64 = (0..lo).map(|k| poisson_ln_pmf(k, lambda).exp()).sum();
    expected[0] = n * p_lo;
    expected[k_bins + 1] = n * (1.0 - bulk - p_lo).max(0.0);
    for &c in counts {
        let slot = if c < lo {
            0
        } else if c > hi {
            k_bins + 1
        } else {
            (c - lo) as usize + 1
        };
        observed[slot] += 1;
    }
    // Drop tail bins that are still too thin.
    let keep: Vec<usize> = (0..expected.len()).filter(|&i| expected[i] >= 5.0).collect();
    let obs: Vec<u64> = keep.iter().map(|&i| observed[i]).collect();
    let exp: Vec<f64> = keep.iter().map(|&i| expected[i]).collect();
    chi_square_gof(&obs, &exp)
}

/// Two-sided Kolmogorov-Smirnov distance of samples against an analytic CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    d
}

/// Least-squares slope of y against x.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
