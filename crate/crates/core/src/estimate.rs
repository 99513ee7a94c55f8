//! Density-matrix reconstruction from count data.
//!
//! Two estimators are provided:
//!
//! * [`mle_reconstruct`]: maximum likelihood by the diluted `RρR` fixed-point
//!   iteration. Every iterate is positive semidefinite with unit trace, and
//!   rank-2 POVM elements need no special treatment.
//! * [`linear_inversion`]: unit-trace least squares on observed frequencies,
//!   followed by projection onto the physical states.
//!
//! [`predict_mixed_ratio`] compares two schemes analytically at the maximally
//! mixed state by propagating multinomial frequency covariance through the
//! linear inversion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::{certify_complete, MeasurementScheme};
use crate::linalg::{
    from_hermitian_coordinates, hermitian_coordinates, inverse_spd, project_to_physical, solve_spd,
    ComplexMatrix, LinalgError, C64,
};
use crate::simulate::{basis_allocation, born_probabilities, CountData, SimulateError};
use crate::states::{maximally_mixed, DensityMatrix};

/// Probability floor inside the logarithm for outcomes that were observed.
pub const PROBABILITY_FLOOR: f64 = 1e-15;
/// Smallest dilution before a rejected step is treated as stalled.
const MIN_DILUTION: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("measurement scheme is not informationally complete")]
    Incomplete,
    #[error("count data contains no counts")]
    NoCounts,
    #[error("basis {0} has no counts; linear inversion needs every basis")]
    EmptyBasis(usize),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("invalid MLE options: {0}")]
    Options(&'static str),
    #[error(transparent)]
    Counts(#[from] SimulateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mle,
    LinearInversion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Stop once the log-likelihood gain of an accepted step falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial dilution `ε ∈ (0, 1]`; halved whenever a step lowers the likelihood.
    pub dilution: f64,
    /// Keep the log-likelihood of every accepted iterate.
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100_000,
            dilution: 0.5,
            record_trace: false,
        }
    }
}

impl MleOptions {
    fn validate(&self) -> Result<(), EstimateError> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(EstimateError::Options("tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(EstimateError::Options("max_iterations must be at least 1"));
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(EstimateError::Options("dilution must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub rho_hat: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: Method,
    /// Log-likelihood after each accepted iterate, starting from the initial
    /// state. Empty unless requested through [`MleOptions::record_trace`].
    pub trace: Vec<f64>,
}

/// Flattened POVM and counts, laid out for the inner MLE loop.
struct Problem {
    dim: usize,
    /// Row-major `D×D` matrices, one per element.
    ops: Vec<Vec<C64>>,
    counts: Vec<f64>,
    total: f64,
}

impl Problem {
    fn new(counts: &CountData, scheme: &MeasurementScheme) -> Result<Self, EstimateError> {
        counts.check_against(scheme)?;
        let ops = scheme.elements().map(|e| e.matrix.as_slice().to_vec()).collect();
        let flat: Vec<f64> = counts.counts.iter().flatten().map(|&n| n as f64).collect();
        let total = flat.iter().sum();
        Ok(Self {
            dim: scheme.dim,
            ops,
            counts: flat,
            total,
        })
    }

    /// Born probability `Re Tr[O ρ]` for element `k`.
    fn prob(&self, k: usize, rho: &[C64]) -> f64 {
        let d = self.dim;
        let o = &self.ops[k];
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let a = o[i * d + j];
                let b = rho[j * d + i];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    fn log_likelihood(&self, rho: &[C64], probs: &mut [f64]) -> f64 {
        let mut ll = 0.0;
        for (k, p) in probs.iter_mut().enumerate() {
            *p = self.prob(k, rho);
            let n = self.counts[k];
            if n > 0.0 {
                ll += n * p.max(PROBABILITY_FLOOR).ln();
            }
        }
        ll
    }

    /// `R = Σ (n_γ / p_γ) O_γ / N`
    fn r_operator(&self, probs: &[f64], out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        for (k, &n) in self.counts.iter().enumerate() {
            if n > 0.0 {
                let w = n / probs[k].max(PROBABILITY_FLOOR) / self.total;
                for (o, &x) in out.iter_mut().zip(&self.ops[k]) {
                    *o += x * w;
                }
            }
        }
    }
}

fn matmul_into(a: &[C64], b: &[C64], out: &mut [C64], d: usize) {
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = acc;
        }
    }
}

/// `Σ_bases Σ_outcomes n_γ ln p_γ`; unobserved outcomes contribute nothing.
pub fn log_likelihood(
    rho: &DensityMatrix,
    counts: &CountData,
    scheme: &MeasurementScheme,
) -> Result<f64, EstimateError> {
    counts.check_against(scheme)?;
    let mut ll = 0.0;
    for (basis, n) in scheme.bases.iter().zip(&counts.counts) {
        let p = born_probabilities(rho, basis)?;
        for (&nk, &pk) in n.iter().zip(&p) {
            if nk > 0 {
                ll += nk as f64 * pk.max(PROBABILITY_FLOOR).ln();
            }
        }
    }
    Ok(ll)
}

/// Maximum-likelihood state by the diluted `RρR` iteration from `I/D`.
///
/// Each step maps `ρ ↦ A ρ A / Tr[A ρ A]` with `A = (1 − ε) I + ε R(ρ)`.
/// A step that lowers the likelihood is rejected and `ε` is halved, so
/// the accepted log-likelihoods never decrease.
pub fn mle_reconstruct(
    counts: &CountData,
    scheme: &MeasurementScheme,
    opts: &MleOptions,
) -> Result<ReconstructionResult, EstimateError> {
    opts.validate()?;
    if !certify_complete(scheme) {
        return Err(EstimateError::Incomplete);
    }
    let prob = Problem::new(counts, scheme)?;
    if prob.total <= 0.0 {
        return Err(EstimateError::NoCounts);
    }
    let d = prob.dim;
    let mut rho: Vec<C64> = maximally_mixed(d)
        .map_err(|_| EstimateError::Options("dimension must be at least 2"))?
        .matrix()
        .as_slice()
        .to_vec();
    let mut probs = vec![0.0; prob.ops.len()];
    let mut cand_probs = vec![0.0; prob.ops.len()];
    let mut ll = prob.log_likelihood(&rho, &mut probs);
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(ll);
    }

    let mut r = vec![C64::new(0.0, 0.0); d * d];
    let mut tmp = vec![C64::new(0.0, 0.0); d * d];
    let mut cand = vec![C64::new(0.0, 0.0); d * d];
    let mut eps = opts.dilution;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        prob.r_operator(&probs, &mut r);
        for x in r.iter_mut() {
            *x *= eps;
        }
        for i in 0..d {
            r[i * d + i] += 1.0 - eps;
        }
        // cand = A ρ A, A Hermitian
        matmul_into(&r, &rho, &mut tmp, d);
        matmul_into(&tmp, &r, &mut cand, d);
        let tr: f64 = (0..d).map(|i| cand[i * d + i].re).sum();
        for i in 0..d {
            for j in i..d {
                let z = (cand[i * d + j] + cand[j * d + i].conj()) * (0.5 / tr);
                cand[i * d + j] = z;
                cand[j * d + i] = z.conj();
            }
        }
        let cand_ll = prob.log_likelihood(&cand, &mut cand_probs);
        let gain = cand_ll - ll;
        if gain < 0.0 {
            if -gain < opts.tolerance || eps <= MIN_DILUTION {
                converged = -gain < opts.tolerance;
                break;
            }
            eps *= 0.5;
            continue;
        }
        std::mem::swap(&mut rho, &mut cand);
        std::mem::swap(&mut probs, &mut cand_probs);
        ll = cand_ll;
        if opts.record_trace {
            trace.push(ll);
        }
        if gain < opts.tolerance {
            converged = true;
            break;
        }
    }

    let m = ComplexMatrix::new(d, d, rho)?;
    Ok(ReconstructionResult {
        rho_hat: DensityMatrix::from_trusted(m),
        log_likelihood: ll,
        iterations,
        converged,
        method: Method::Mle,
        trace,
    })
}

/// Result of [`linear_inversion`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearInversion {
    /// Unit-trace least-squares solution; may have negative eigenvalues.
    pub raw: ComplexMatrix,
    /// `raw` projected onto the nearest physical state.
    pub physical: DensityMatrix,
}

impl LinearInversion {
    pub fn into_result(self, counts: &CountData, scheme: &MeasurementScheme) -> Result<ReconstructionResult, EstimateError> {
        let ll = log_likelihood(&self.physical, counts, scheme)?;
        Ok(ReconstructionResult {
            rho_hat: self.physical,
            log_likelihood: ll,
            iterations: 0,
            converged: true,
            method: Method::LinearInversion,
            trace: Vec::new(),
        })
    }
}

/// Least-squares design for unit-trace Hermitian states.
///
/// States are parametrized as `coords(ρ) = c0 + T x` where `c0 = coords(I/D)`
/// and the columns of `T` are an orthonormal basis of the traceless
/// Hermitian coordinates. Row `γ` of `A` is `coords(O_γ)`, so the predicted
/// frequency is `A c0 + A T x` and `‖ρ − σ‖²_HS = ‖x_ρ − x_σ‖²`.
struct Design {
    dim: usize,
    /// `(A T)`, row-major, one row per element.
    at: Vec<Vec<f64>>,
    /// `A c0`
    offset: Vec<f64>,
    /// Columns of `T`, each of length `D²`.
    t_cols: Vec<Vec<f64>>,
    /// `(Tᵀ Aᵀ A T)`, row-major.
    gram: Vec<f64>,
}

impl Design {
    fn new(scheme: &MeasurementScheme) -> Self {
        let d = scheme.dim;
        let d2 = d * d;
        let mut t_cols = Vec::with_capacity(d2 - 1);
        for k in 1..d {
            let mut col = vec![0.0; d2];
            let norm = ((k * (k + 1)) as f64).sqrt();
            for c in col.iter_mut().take(k) {
                *c = 1.0 / norm;
            }
            col[k] = -(k as f64) / norm;
            t_cols.push(col);
        }
        for idx in d..d2 {
            let mut col = vec![0.0; d2];
            col[idx] = 1.0;
            t_cols.push(col);
        }
        let mut c0 = vec![0.0; d2];
        for c in c0.iter_mut().take(d) {
            *c = 1.0 / d as f64;
        }

        let rows: Vec<Vec<f64>> = scheme.elements().map(|e| hermitian_coordinates(&e.matrix)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let at: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| t_cols.iter().map(|t| dot(r, t)).collect())
            .collect();
        let offset = rows.iter().map(|r| dot(r, &c0)).collect();
        let m = t_cols.len();
        let mut gram = vec![0.0; m * m];
        for row in &at {
            for i in 0..m {
                for j in 0..m {
                    gram[i * m + j] += row[i] * row[j];
                }
            }
        }
        Self {
            dim: d,
            at,
            offset,
            t_cols,
            gram,
        }
    }

    fn params(&self) -> usize {
        self.t_cols.len()
    }

    /// Least-squares traceless coordinates from per-element frequencies.
    fn solve(&self, freqs: &[f64]) -> Result<Vec<f64>, EstimateError> {
        let m = self.params();
        let mut rhs = vec![0.0; m];
        for ((row, &f), &o) in self.at.iter().zip(freqs).zip(&self.offset) {
            for (r, &a) in rhs.iter_mut().zip(row) {
                *r += a * (f - o);
            }
        }
        solve_spd(&self.gram, &rhs).map_err(|_| EstimateError::RankDeficient)
    }

    fn state_from_params(&self, x: &[f64]) -> ComplexMatrix {
        let d = self.dim;
        let mut coords = vec![0.0; d * d];
        for c in coords.iter_mut().take(d) {
            *c = 1.0 / d as f64;
        }
        for (xi, t) in x.iter().zip(&self.t_cols) {
            for (c, &ti) in coords.iter_mut().zip(t) {
                *c += xi * ti;
            }
        }
        from_hermitian_coordinates(d, &coords)
    }

    /// Row-major `(Tᵀ Aᵀ A T)⁻¹ Tᵀ Aᵀ`, mapping frequencies to parameters.
    fn estimator_matrix(&self) -> Result<Vec<Vec<f64>>, EstimateError> {
        let m = self.params();
        let inv = inverse_spd(&self.gram, m).map_err(|_| EstimateError::RankDeficient)?;
        Ok((0..m)
            .map(|i| {
                self.at
                    .iter()
                    .map(|row| (0..m).map(|k| inv[i * m + k] * row[k]).sum())
                    .collect()
            })
            .collect())
    }
}

/// Unit-trace least-squares inversion of observed per-basis frequencies.
pub fn linear_inversion(
    counts: &CountData,
    scheme: &MeasurementScheme,
) -> Result<LinearInversion, EstimateError> {
    counts.check_against(scheme)?;
    if !certify_complete(scheme) {
        return Err(EstimateError::Incomplete);
    }
    let mut freqs = Vec::with_capacity(scheme.num_elements());
    for (i, c) in counts.counts.iter().enumerate() {
        let total: u64 = c.iter().sum();
        if total == 0 {
            return Err(EstimateError::EmptyBasis(i));
        }
        freqs.extend(c.iter().map(|&n| n as f64 / total as f64));
    }
    let design = Design::new(scheme);
    let x = design.solve(&freqs)?;
    let raw = design.state_from_params(&x);
    let physical = DensityMatrix::from_trusted(project_to_physical(&raw)?);
    Ok(LinearInversion { raw, physical })
}

/// Linear inversion from exact frequencies (no sampling), mainly for checks.
pub fn linear_inversion_from_frequencies(
    freqs: &[Vec<f64>],
    scheme: &MeasurementScheme,
) -> Result<ComplexMatrix, EstimateError> {
    let flat: Vec<f64> = freqs.iter().flatten().copied().collect();
    if flat.len() != scheme.num_elements() {
        return Err(SimulateError::BasisCount {
            got: freqs.len(),
            expected: scheme.num_bases(),
        }
        .into());
    }
    let design = Design::new(scheme);
    Ok(design.state_from_params(&design.solve(&flat)?))
}

/// Expected Hilbert-Schmidt error `E‖ρ̂ − I/D‖²` of the linear-inversion
/// estimator at the maximally mixed state, under equal multinomial
/// allocation of `n_total` copies.
pub fn linear_inversion_mse_at_mixed(
    scheme: &MeasurementScheme,
    n_total: u64,
) -> Result<f64, EstimateError> {
    if !certify_complete(scheme) {
        return Err(EstimateError::Incomplete);
    }
    let d = scheme.dim;
    let sigma = maximally_mixed(d).map_err(|_| EstimateError::Options("dimension must be at least 2"))?;
    let design = Design::new(scheme);
    let est = design.estimator_matrix()?;
    let shots = basis_allocation(n_total, scheme.num_bases());

    // Cov(f) is block diagonal: (diag(p) − p pᵀ) / N_b per basis.
    let mut mse = 0.0;
    let mut offset = 0;
    for (basis, &nb) in scheme.bases.iter().zip(&shots) {
        if nb == 0 {
            return Err(EstimateError::EmptyBasis(basis.index));
        }
        let p = born_probabilities(&sigma, basis)?;
        let k = p.len();
        for row in &est {
            let w = &row[offset..offset + k];
            let quad: f64 = (0..k)
                .map(|a| {
                    (0..k)
                        .map(|b| {
                            let cov = if a == b { p[a] } else { 0.0 } - p[a] * p[b];
                            w[a] * cov * w[b]
                        })
                        .sum::<f64>()
                })
                .sum();
            mse += quad / nb as f64;
        }
        offset += k;
    }
    Ok(mse)
}

/// Second-order expected infidelity of linear inversion at `I/D`:
/// `E[1 − F] ≈ (D/4) E‖ρ̂ − I/D‖²_HS`.
pub fn predict_mixed_infidelity(scheme: &MeasurementScheme, n_total: u64) -> Result<f64, EstimateError> {
    Ok(scheme.dim as f64 / 4.0 * linear_inversion_mse_at_mixed(scheme, n_total)?)
}

/// Predicted ratio `E[1 − F]_a / E[1 − F]_b` for the maximally mixed state.
pub fn predict_mixed_ratio(
    scheme_a: &MeasurementScheme,
    scheme_b: &MeasurementScheme,
    n_total: u64,
) -> Result<f64, EstimateError> {
    Ok(predict_mixed_infidelity(scheme_a, n_total)? / predict_mixed_infidelity(scheme_b, n_total)?)
}
