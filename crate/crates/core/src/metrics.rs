//! Fidelity, purity and the summary statistics used by the experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{singular_values, sqrt_psd, trace_product, LinalgError};
use crate::states::{DensityMatrix, RngStream};

/// Bootstrap resamples used for the standard error of the median.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_SEED: u64 = 0x6d75_625f_626f_6f74;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("states have different dimensions ({0} vs {1})")]
    Dimension(usize, usize),
    #[error("no samples")]
    Empty,
    #[error("power-law fit needs at least two distinct N values")]
    DegenerateFit,
    #[error("power-law fit needs positive values, got ({0}, {1})")]
    NonPositive(f64, f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(Tr √(√σ ρ √σ))²` before clamping to `[0, 1]`.
///
/// Evaluated as the squared trace norm of `√σ √ρ`, which stays accurate
/// when either state is rank deficient.
pub fn fidelity_unclamped(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64, MetricsError> {
    if sigma.dim() != rho.dim() {
        return Err(MetricsError::Dimension(sigma.dim(), rho.dim()));
    }
    let product = &sqrt_psd(sigma.matrix())? * &sqrt_psd(rho.matrix())?;
    let s: f64 = singular_values(&product).iter().sum();
    Ok(s * s)
}

/// Uhlmann fidelity, clamped to `[0, 1]`.
pub fn fidelity(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64, MetricsError> {
    Ok(fidelity_unclamped(sigma, rho)?.clamp(0.0, 1.0))
}

pub fn infidelity(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64, MetricsError> {
    Ok(1.0 - fidelity(sigma, rho)?)
}

/// `Tr ρ²`
pub fn purity(rho: &DensityMatrix) -> f64 {
    trace_product(rho.matrix(), rho.matrix())
        .expect("square matrix")
        .re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); zero for one sample.
    pub std: f64,
    /// Bootstrap standard error of the median.
    pub median_se: f64,
    pub n: usize,
}

impl SummaryStats {
    /// Standard error of the mean.
    pub fn mean_se(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn median(samples: &[f64]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(median_of_sorted(&s))
}

/// Median, mean, sample std and a bootstrap standard error of the median.
///
/// The bootstrap uses a fixed internal seed, so the result is a pure
/// function of `samples`.
pub fn summarize(samples: &[f64]) -> Result<SummaryStats, MetricsError> {
    let n = samples.len();
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median_of_sorted(&sorted);
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };

    let median_se = if n > 1 {
        let mut rng = RngStream::new(BOOTSTRAP_SEED, n as u64);
        let mut buf = vec![0.0; n];
        let meds: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
            .map(|_| {
                for x in buf.iter_mut() {
                    *x = sorted[rng.rng().random_range(0..n)];
                }
                buf.sort_by(f64::total_cmp);
                median_of_sorted(&buf)
            })
            .collect();
        let m = meds.iter().sum::<f64>() / meds.len() as f64;
        (meds.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (meds.len() - 1) as f64).sqrt()
    } else {
        0.0
    };

    Ok(SummaryStats {
        median: med,
        mean,
        std,
        median_se,
        n,
    })
}

/// Least-squares slope of `ln y` against `ln N`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<f64, MetricsError> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, y) in points {
        if !(n > 0.0 && y > 0.0) {
            return Err(MetricsError::NonPositive(n, y));
        }
        xs.push(n.ln());
        ys.push(y.ln());
    }
    if points.len() < 2 {
        return Err(MetricsError::DegenerateFit);
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(MetricsError::DegenerateFit);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{density_from_pure, haar_random_separable, ket, maximally_mixed};

    #[test]
    fn fidelity_basic_cases() {
        let hh = density_from_pure(&ket("HH").unwrap());
        let vv = density_from_pure(&ket("VV").unwrap());
        let mm = maximally_mixed(4).unwrap();
        assert!((fidelity(&hh, &hh).unwrap() - 1.0).abs() < 1e-9);
        assert!((fidelity(&mm, &mm).unwrap() - 1.0).abs() < 1e-9);
        assert!(fidelity(&hh, &vv).unwrap().abs() < 1e-12);
        assert!((infidelity(&hh, &vv).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity(&hh, &mm).unwrap() - 0.25).abs() < 1e-12);
        assert!((fidelity(&mm, &hh).unwrap() - 0.25).abs() < 1e-12);
        assert!(infidelity(&hh, &hh).unwrap().abs() < 1e-9);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = maximally_mixed(2).unwrap();
        let b = maximally_mixed(4).unwrap();
        assert_eq!(fidelity(&a, &b), Err(MetricsError::Dimension(2, 4)));
    }

    #[test]
    fn purity_cases() {
        assert!((purity(&maximally_mixed(4).unwrap()) - 0.25).abs() < 1e-15);
        let mut rng = RngStream::new(1, 1);
        let psi = haar_random_separable(&mut rng);
        assert!((purity(&psi) - 1.0).abs() < 1e-12);
        let mut last = 1.0;
        for k in 1..=10 {
            let p = purity(&psi.depolarize(k as f64 / 10.0));
            assert!(p < last);
            last = p;
        }
        assert!((last - 0.25).abs() < 1e-12);
    }

    #[test]
    fn summarize_small() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.n, 4);
        assert!(s.median_se > 0.0);
        assert_eq!(summarize(&[3.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert_eq!(summarize(&[]), Err(MetricsError::Empty));
        assert_eq!(summarize(&[1.0, 5.0, 2.0]).unwrap(), summarize(&[1.0, 5.0, 2.0]).unwrap());
    }

    #[test]
    fn power_law_exact_slopes() {
        let inv: Vec<(f64, f64)> = [1e3, 3e3, 1e4, 3e4, 1e5].iter().map(|&n| (n, 7.0 / n)).collect();
        assert!((fit_power_law(&inv).unwrap() + 1.0).abs() < 1e-12);
        let root: Vec<(f64, f64)> = [1e3, 1e4, 1e5].iter().map(|&n: &f64| (n, 0.3 / n.sqrt())).collect();
        assert!((fit_power_law(&root).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn power_law_errors() {
        assert_eq!(fit_power_law(&[(10.0, 1.0)]), Err(MetricsError::DegenerateFit));
        assert_eq!(
            fit_power_law(&[(10.0, 1.0), (10.0, 2.0)]),
            Err(MetricsError::DegenerateFit)
        );
        assert!(matches!(
            fit_power_law(&[(10.0, 0.0), (20.0, 1.0)]),
            Err(MetricsError::NonPositive(..))
        ));
    }
}
