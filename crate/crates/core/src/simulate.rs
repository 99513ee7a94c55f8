//! Born-rule probabilities and stochastic count generation.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::{MeasurementBasis, MeasurementScheme, SchemeKind};
use crate::linalg::{trace_product, LinalgError};
use crate::states::{DensityMatrix, RngStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("state dimension {state} does not match measurement dimension {measurement}")]
    Dimension { state: usize, measurement: usize },
    #[error("unknown count model {0:?} (expected multinomial or poisson)")]
    UnknownModel(String),
    #[error("count data has {got} bases, scheme has {expected}")]
    BasisCount { got: usize, expected: usize },
    #[error("count data for basis {basis} has {got} outcomes, expected {expected}")]
    OutcomeCount {
        basis: usize,
        got: usize,
        expected: usize,
    },
    #[error("cannot merge count data from different schemes")]
    Incompatible,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How the total number of detected copies is distributed over bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CountModel {
    /// Exactly `⌊N/B⌋` shots per basis, the remainder going to the first bases.
    #[default]
    MultinomialExact,
    /// Each basis total is drawn from `Poisson(N/B)`.
    PoissonPerBasis,
}

impl CountModel {
    pub fn id(self) -> &'static str {
        match self {
            CountModel::MultinomialExact => "multinomial",
            CountModel::PoissonPerBasis => "poisson",
        }
    }
}

impl fmt::Display for CountModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for CountModel {
    type Err = SimulateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "multinomial" | "multinomial-exact" => Ok(CountModel::MultinomialExact),
            "poisson" | "poisson-per-basis" => Ok(CountModel::PoissonPerBasis),
            _ => Err(SimulateError::UnknownModel(s.to_string())),
        }
    }
}

/// Outcome counts from one simulated acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct CountData {
    pub scheme: SchemeKind,
    pub visibility: f64,
    pub model: CountModel,
    /// Requested total number of copies. Equals the sum of all counts under
    /// [`CountModel::MultinomialExact`].
    pub n_total: u64,
    pub seed: Option<u64>,
    pub stream_id: Option<u64>,
    /// `counts[basis][outcome]`
    pub counts: Vec<Vec<u64>>,
}

impl CountData {
    pub fn basis_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Checks shape against a scheme.
    pub fn check_against(&self, scheme: &MeasurementScheme) -> Result<(), SimulateError> {
        if self.counts.len() != scheme.num_bases() {
            return Err(SimulateError::BasisCount {
                got: self.counts.len(),
                expected: scheme.num_bases(),
            });
        }
        for (i, (c, b)) in self.counts.iter().zip(&scheme.bases).enumerate() {
            if c.len() != b.elements.len() {
                return Err(SimulateError::OutcomeCount {
                    basis: i,
                    got: c.len(),
                    expected: b.elements.len(),
                });
            }
        }
        Ok(())
    }

    /// Entrywise sum of several acquisitions under the same scheme.
    pub fn pooled<'a>(items: impl IntoIterator<Item = &'a CountData>) -> Result<CountData, SimulateError> {
        let mut iter = items.into_iter();
        let mut acc = iter.next().ok_or(SimulateError::Incompatible)?.clone();
        acc.seed = None;
        acc.stream_id = None;
        for c in iter {
            if c.scheme != acc.scheme || c.counts.len() != acc.counts.len() {
                return Err(SimulateError::Incompatible);
            }
            acc.n_total += c.n_total;
            for (a, b) in acc.counts.iter_mut().zip(&c.counts) {
                if a.len() != b.len() {
                    return Err(SimulateError::Incompatible);
                }
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
        }
        Ok(acc)
    }
}

/// `p_γ = Tr[O_γ ρ]`, tiny negatives clipped to zero.
pub fn born_probabilities(
    rho: &DensityMatrix,
    basis: &MeasurementBasis,
) -> Result<Vec<f64>, SimulateError> {
    let d = rho.dim();
    basis
        .elements
        .iter()
        .map(|e| {
            if e.dim() != d {
                return Err(SimulateError::Dimension {
                    state: d,
                    measurement: e.dim(),
                });
            }
            Ok(trace_product(&e.matrix, rho.matrix())?.re.max(0.0))
        })
        .collect()
}

/// Multinomial draw by sequential binomial splitting.
pub fn sample_multinomial(n: u64, probs: &[f64], rng: &mut RngStream) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .expect("probability in (0, 1)")
                .sample(rng.rng())
        };
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out
}

fn poisson(lambda: f64, rng: &mut RngStream) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let x: f64 = Poisson::new(lambda)
        .expect("positive rate")
        .sample(rng.rng());
    x as u64
}

/// Shots assigned to each basis under equal allocation.
pub fn basis_allocation(n_total: u64, num_bases: usize) -> Vec<u64> {
    let b = num_bases as u64;
    let base = n_total / b;
    let rem = n_total % b;
    (0..b).map(|i| base + u64::from(i < rem)).collect()
}

/// Simulates one acquisition of `n_total` copies of `rho`.
pub fn sample_counts(
    rho: &DensityMatrix,
    scheme: &MeasurementScheme,
    n_total: u64,
    model: CountModel,
    rng: &mut RngStream,
) -> Result<CountData, SimulateError> {
    let nb = scheme.num_bases();
    let shots: Vec<u64> = match model {
        CountModel::MultinomialExact => basis_allocation(n_total, nb),
        CountModel::PoissonPerBasis => {
            let lambda = n_total as f64 / nb as f64;
            (0..nb).map(|_| poisson(lambda, rng)).collect()
        }
    };
    let mut counts = Vec::with_capacity(nb);
    for (basis, &n) in scheme.bases.iter().zip(&shots) {
        let p = born_probabilities(rho, basis)?;
        counts.push(sample_multinomial(n, &p, rng));
    }
    Ok(CountData {
        scheme: scheme.kind,
        visibility: scheme.visibility,
        model,
        n_total,
        seed: Some(rng.seed()),
        stream_id: Some(rng.stream_id()),
        counts,
    })
}

/// Counts equal to the rounded Born expectations under equal allocation.
///
/// `n_total` is set to the resulting count sum.
pub fn noiseless_counts(
    rho: &DensityMatrix,
    scheme: &MeasurementScheme,
    n_total: u64,
) -> Result<CountData, SimulateError> {
    let shots = basis_allocation(n_total, scheme.num_bases());
    let mut counts = Vec::with_capacity(shots.len());
    for (basis, &n) in scheme.bases.iter().zip(&shots) {
        let p = born_probabilities(rho, basis)?;
        counts.push(p.iter().map(|&x| (x * n as f64).round() as u64).collect());
    }
    let mut data = CountData {
        scheme: scheme.kind,
        visibility: scheme.visibility,
        model: CountModel::MultinomialExact,
        n_total: 0,
        seed: None,
        stream_id: None,
        counts,
    };
    data.n_total = data.total();
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{mub_scheme, ssqst_scheme};
    use crate::linalg::C64;
    use crate::states::{bell_state, density_from_pure, ket, maximally_mixed, BellKind};

    #[test]
    fn mixed_state_is_uniform() {
        let rho = maximally_mixed(4).unwrap();
        for b in &mub_scheme(0.93).unwrap().bases {
            for p in born_probabilities(&rho, b).unwrap() {
                assert!((p - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bell_in_hv_basis() {
        let rho = density_from_pure(&bell_state(BellKind::PhiPlus));
        let p = born_probabilities(&rho, &ssqst_scheme().bases[0]).unwrap();
        let expect = [0.5, 0.0, 0.0, 0.5];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn bell_in_entangled_mub_basis_matches_amplitudes() {
        // Brute force: |<e|Φ+>|² with e = (|a> ± i|b>)/√2 from raw kets.
        let phi = bell_state(BellKind::PhiPlus);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut expect = Vec::new();
        for (a, b) in [("RL", "LR"), ("RR", "LL")] {
            for sign in [1.0, -1.0] {
                let ka = ket(a).unwrap();
                let kb = ket(b).unwrap();
                let amp: C64 = (0..4)
                    .map(|i| {
                        let e = (ka.amplitudes()[i] + C64::new(0.0, sign) * kb.amplitudes()[i]) * s;
                        e.conj() * phi.amplitudes()[i]
                    })
                    .sum();
                expect.push(amp.norm_sqr());
            }
        }
        let rho = density_from_pure(&phi);
        let p = born_probabilities(&rho, &mub_scheme(1.0).unwrap().bases[3]).unwrap();
        for (a, b) in p.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14, "{p:?} vs {expect:?}");
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let rho = maximally_mixed(2).unwrap();
        assert!(matches!(
            born_probabilities(&rho, &ssqst_scheme().bases[0]),
            Err(SimulateError::Dimension { .. })
        ));
    }

    #[test]
    fn zero_shots_give_zero_counts() {
        let rho = density_from_pure(&ket("HV").unwrap());
        let mut rng = RngStream::new(1, 0);
        let c = sample_counts(&rho, &ssqst_scheme(), 0, CountModel::MultinomialExact, &mut rng)
            .unwrap();
        assert!(c.counts.iter().flatten().all(|&x| x == 0));
        assert_eq!(c.counts.len(), 9);
    }

    #[test]
    fn deterministic_outcome_and_allocation() {
        let rho = density_from_pure(&ket("HV").unwrap());
        let mut rng = RngStream::new(5, 0);
        let c = sample_counts(&rho, &ssqst_scheme(), 9001, CountModel::MultinomialExact, &mut rng)
            .unwrap();
        assert_eq!(c.counts[0], vec![0, 1001, 0, 0]);
        assert_eq!(c.total(), 9001);
        assert_eq!(c.basis_totals(), vec![1001, 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000]);
    }

    #[test]
    fn same_seed_same_counts() {
        let rho = density_from_pure(&bell_state(BellKind::PhiPlus));
        let s = mub_scheme(0.93).unwrap();
        for model in [CountModel::MultinomialExact, CountModel::PoissonPerBasis] {
            let a = sample_counts(&rho, &s, 5000, model, &mut RngStream::new(3, 4)).unwrap();
            let b = sample_counts(&rho, &s, 5000, model, &mut RngStream::new(3, 4)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn allocation_encodes_basis_count() {
        assert_eq!(basis_allocation(18_000, 5), vec![3600; 5]);
        assert_eq!(basis_allocation(18_000, 9), vec![2000; 9]);
        assert_eq!(basis_allocation(7, 5), vec![2, 2, 1, 1, 1]);
    }

    #[test]
    fn pooled_sums_counts() {
        let rho = maximally_mixed(4).unwrap();
        let s = ssqst_scheme();
        let a = sample_counts(&rho, &s, 900, CountModel::MultinomialExact, &mut RngStream::new(1, 1)).unwrap();
        let b = sample_counts(&rho, &s, 1800, CountModel::MultinomialExact, &mut RngStream::new(1, 2)).unwrap();
        let p = CountData::pooled([&a, &b]).unwrap();
        assert_eq!(p.n_total, 2700);
        assert_eq!(p.total(), 2700);
        let m = sample_counts(&rho, &mub_scheme(1.0).unwrap(), 10, CountModel::MultinomialExact, &mut RngStream::new(1, 3)).unwrap();
        assert_eq!(CountData::pooled([&a, &m]), Err(SimulateError::Incompatible));
    }

    #[test]
    fn model_parsing() {
        assert_eq!("poisson".parse::<CountModel>().unwrap(), CountModel::PoissonPerBasis);
        assert_eq!("multinomial".parse::<CountModel>().unwrap(), CountModel::MultinomialExact);
        assert!("gaussian".parse::<CountModel>().is_err());
    }
}
