//! Polarization states of one and two qubits, plus Haar-random sampling.
//!
//! Single-qubit conventions: `H = (1, 0)`, `V = (0, 1)`, `D = (H + V)/√2`,
//! `A = (H − V)/√2`, `R = (H + iV)/√2`, `L = (H − iV)/√2`. Multi-letter labels
//! are tensor products, first letter on the first qubit.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eig_hermitian, kron, kron_vec, ComplexMatrix, LinalgError, C64, HERMITIAN_TOL, PSD_TOL};

const NORM_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("unknown polarization letter {0:?} (expected one of H, V, D, A, R, L)")]
    UnknownLetter(char),
    #[error("polarization label must have 1 or 2 letters, got {0:?}")]
    LabelLength(String),
    #[error("state vector is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("density matrix trace is {0}, expected 1")]
    Trace(f64),
    #[error("unknown state identifier {0:?}")]
    UnknownState(String),
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self, StateError> {
        let n2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized(n2));
        }
        Ok(Self { amplitudes })
    }

    /// Scales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self, StateError> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::NotNormalized(norm * norm));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    /// `u |self>`; `u` must be unitary.
    pub fn evolve(&self, u: &ComplexMatrix) -> PureState {
        PureState {
            amplitudes: u.apply(&self.amplitudes),
        }
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates the three density-matrix invariants.
    pub fn new(matrix: ComplexMatrix) -> Result<Self, StateError> {
        if !matrix.is_square() {
            return Err(LinalgError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            }
            .into());
        }
        let herr = matrix.hermiticity_error();
        if herr > HERMITIAN_TOL {
            return Err(LinalgError::NotHermitian(herr).into());
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(StateError::Trace(tr));
        }
        let eig = eig_hermitian(&matrix)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(LinalgError::NotPsd(min).into());
        }
        Ok(Self {
            matrix: matrix.hermitize(),
        })
    }

    /// Wraps a matrix produced by an algorithm that guarantees the invariants.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.hermiticity_error() < 1e-8);
        debug_assert!((matrix.trace().re - 1.0).abs() < 1e-8);
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `(1 − p) ρ + p I/D`
    pub fn depolarize(&self, p: f64) -> DensityMatrix {
        let d = self.dim();
        let mixed = ComplexMatrix::identity(d).scale_real(p / d as f64);
        DensityMatrix::from_trusted(&self.matrix.scale_real(1.0 - p) + &mixed)
    }

    /// Partial trace of a two-qubit state, keeping qubit `keep` (0 or 1).
    pub fn reduced_qubit(&self, keep: usize) -> DensityMatrix {
        assert_eq!(self.dim(), 4, "reduced_qubit expects a two-qubit state");
        assert!(keep < 2);
        let m = &self.matrix;
        let r = ComplexMatrix::from_fn(2, 2, |i, j| {
            (0..2)
                .map(|k| {
                    if keep == 0 {
                        m[(2 * i + k, 2 * j + k)]
                    } else {
                        m[(2 * k + i, 2 * k + j)]
                    }
                })
                .sum()
        });
        DensityMatrix::from_trusted(r)
    }
}

fn single_qubit(letter: char) -> Result<[C64; 2], StateError> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let amps = match letter {
        'H' => [C64::new(1.0, 0.0), z],
        'V' => [z, C64::new(1.0, 0.0)],
        'D' => [C64::new(s, 0.0), C64::new(s, 0.0)],
        'A' => [C64::new(s, 0.0), C64::new(-s, 0.0)],
        'R' => [C64::new(s, 0.0), C64::new(0.0, s)],
        'L' => [C64::new(s, 0.0), C64::new(0.0, -s)],
        other => return Err(StateError::UnknownLetter(other)),
    };
    Ok(amps)
}

/// Polarization ket from a one- or two-letter label such as `"HV"` or `"R"`.
pub fn ket(label: &str) -> Result<PureState, StateError> {
    let letters: Vec<char> = label.chars().collect();
    if letters.is_empty() || letters.len() > 2 {
        return Err(StateError::LabelLength(label.to_string()));
    }
    let mut amps = vec![C64::new(1.0, 0.0)];
    for c in letters {
        amps = kron_vec(&amps, &single_qubit(c)?);
    }
    Ok(PureState { amplitudes: amps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// `Φ± = (|HH> ± |VV>)/√2`, `Ψ± = (|HV> ± |VH>)/√2`.
pub fn bell_state(kind: BellKind) -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = 0.0;
    let a = match kind {
        BellKind::PhiPlus => [s, z, z, s],
        BellKind::PhiMinus => [s, z, z, -s],
        BellKind::PsiPlus => [z, s, s, z],
        BellKind::PsiMinus => [z, s, -s, z],
    };
    PureState {
        amplitudes: a.iter().map(|&x| C64::new(x, 0.0)).collect(),
    }
}

pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    DensityMatrix::from_trusted(psi.projector())
}

pub fn maximally_mixed(dim: usize) -> Result<DensityMatrix, StateError> {
    if dim < 2 {
        return Err(StateError::Dimension(dim));
    }
    Ok(DensityMatrix::from_trusted(
        ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
    ))
}

/// Deterministic random stream keyed by `(seed, stream_id)`.
///
/// Distinct stream ids under one seed give independent ChaCha streams, so
/// trials can be assigned streams by index and run in any order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn complex_normal(&mut self) -> C64 {
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        C64::new(re, im)
    }
}

/// Haar-random element of U(2).
///
/// Gram-Schmidt on two complex Gaussian columns; the triangular factor has a
/// positive real diagonal, which fixes the phases so the result is Haar.
pub fn haar_random_single_qubit_unitary(rng: &mut RngStream) -> ComplexMatrix {
    haar_random_unitary(2, rng)
}

/// Haar-random element of U(d) by Gram-Schmidt on complex Gaussian columns.
pub fn haar_random_unitary(d: usize, rng: &mut RngStream) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| rng.complex_normal()).collect();
        for u in &cols {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

fn local_unitary(rng: &mut RngStream) -> ComplexMatrix {
    let u1 = haar_random_single_qubit_unitary(rng);
    let u2 = haar_random_single_qubit_unitary(rng);
    kron(&u1, &u2)
}

/// `(U₁ ⊗ U₂)|HH>` with independent Haar-random `U₁`, `U₂`.
pub fn haar_random_separable(rng: &mut RngStream) -> DensityMatrix {
    let hh = ket("HH").expect("valid label");
    density_from_pure(&hh.evolve(&local_unitary(rng)))
}

/// `(U₁ ⊗ U₂)|Φ+>` with independent Haar-random `U₁`, `U₂`.
pub fn haar_random_max_entangled(rng: &mut RngStream) -> DensityMatrix {
    let phi = bell_state(BellKind::PhiPlus);
    density_from_pure(&phi.evolve(&local_unitary(rng)))
}

/// Identifiers for the states the experiment harness can prepare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NamedState {
    /// `|HV>`
    Hv,
    /// `(|HH> + |VV>)/√2`
    BellPhiPlus,
    /// `I/4`
    MaximallyMixed,
    /// A fresh Haar-random product state per trial.
    HaarSeparable,
    /// A fresh Haar-random maximally entangled state per trial.
    HaarEntangled,
}

impl NamedState {
    pub const ALL: [NamedState; 5] = [
        NamedState::Hv,
        NamedState::BellPhiPlus,
        NamedState::MaximallyMixed,
        NamedState::HaarSeparable,
        NamedState::HaarEntangled,
    ];

    pub fn id(self) -> &'static str {
        match self {
            NamedState::Hv => "HV",
            NamedState::BellPhiPlus => "bell-phi-plus",
            NamedState::MaximallyMixed => "maximally-mixed",
            NamedState::HaarSeparable => "haar-separable",
            NamedState::HaarEntangled => "haar-entangled",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, NamedState::HaarSeparable | NamedState::HaarEntangled)
    }

    /// Prepares the state. Random states draw from `rng`; fixed ones ignore it.
    pub fn prepare(self, rng: &mut RngStream) -> DensityMatrix {
        match self {
            NamedState::Hv => density_from_pure(&ket("HV").expect("valid label")),
            NamedState::BellPhiPlus => density_from_pure(&bell_state(BellKind::PhiPlus)),
            NamedState::MaximallyMixed => maximally_mixed(4).expect("dim 4"),
            NamedState::HaarSeparable => haar_random_separable(rng),
            NamedState::HaarEntangled => haar_random_max_entangled(rng),
        }
    }
}

impl fmt::Display for NamedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for NamedState {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NamedState::ALL
            .into_iter()
            .find(|n| n.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| StateError::UnknownState(s.to_string()))
    }
}

impl TryFrom<String> for NamedState {
    type Error = StateError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<NamedState> for String {
    fn from(s: NamedState) -> String {
        s.id().to_string()
    }
}
