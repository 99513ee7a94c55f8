//! Measurement schemes for two-qubit polarization tomography.
//!
//! Two schemes are built here:
//!
//! * **SSQST**: the nine separable bases formed from every pair of
//!   single-qubit Pauli eigenbases, 36 rank-1 projectors in total.
//! * **MUB**: five mutually unbiased bases, three separable and two
//!   maximally entangled. The entangled elements can be degraded by a finite
//!   two-photon interference visibility `V`, which turns each projector into
//!   the rank-2 mixture `((1+V)/2)|e><e| + ((1−V)/2)|e⊥><e⊥|` with its
//!   partner `e⊥` from the same ± pair.
//!
//! Basis order and element order within each basis are fixed; count vectors
//! index into them directly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_coordinates, real_rank, trace_product, ComplexMatrix, LinalgError, C64};
use crate::states::{ket, PureState};

/// Tolerance for `Σ elements = I` within each basis.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Pivot tolerance for the informational-completeness rank test.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("visibility must lie in (0, 1], got {0}")]
    Visibility(f64),
    #[error("basis {index} does not sum to the identity (max deviation {deviation:.3e})")]
    Incomplete { index: usize, deviation: f64 },
    #[error("basis {index} has {got} elements, expected {expected}")]
    ElementCount {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("unknown scheme {0:?} (expected mub or ssqst)")]
    UnknownScheme(String),
    #[error("basis index {0} out of range")]
    BasisIndex(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Mub,
    Ssqst,
    /// Single-qubit H/V, D/A, R/L bases.
    Qubit,
}

impl SchemeKind {
    pub fn id(self) -> &'static str {
        match self {
            SchemeKind::Mub => "mub",
            SchemeKind::Ssqst => "ssqst",
            SchemeKind::Qubit => "qubit",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SchemeKind {
    type Err = BasisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mub" => Ok(SchemeKind::Mub),
            "ssqst" => Ok(SchemeKind::Ssqst),
            "qubit" => Ok(SchemeKind::Qubit),
            _ => Err(BasisError::UnknownScheme(s.to_string())),
        }
    }
}

/// One POVM element.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    pub label: String,
    pub matrix: ComplexMatrix,
    /// 1 for projectors, 2 for visibility-degraded entangled elements.
    pub rank: usize,
}

impl MeasurementOperator {
    pub fn projector(label: impl Into<String>, state: &PureState) -> Self {
        Self {
            label: label.into(),
            matrix: state.projector(),
            rank: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    pub index: usize,
    pub elements: Vec<MeasurementOperator>,
    pub entangled: bool,
}

impl MeasurementBasis {
    /// Largest entrywise deviation of `Σ elements` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let d = self.elements[0].dim();
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in &self.elements {
            sum = &sum + &e.matrix;
        }
        sum.max_abs_diff(&ComplexMatrix::identity(d))
    }

    pub fn labels(&self) -> Vec<&str> {
        self.elements.iter().map(|e| e.label.as_str()).collect()
    }
}

/// Ordered list of bases plus the visibility used to build them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementScheme {
    pub kind: SchemeKind,
    pub dim: usize,
    pub num_qubits: usize,
    pub bases: Vec<MeasurementBasis>,
    pub visibility: f64,
}

impl MeasurementScheme {
    /// Assembles a scheme, checking element counts and per-basis completeness.
    pub fn new(
        kind: SchemeKind,
        bases: Vec<MeasurementBasis>,
        visibility: f64,
    ) -> Result<Self, BasisError> {
        check_visibility(visibility)?;
        let dim = bases
            .first()
            .and_then(|b| b.elements.first())
            .map_or(0, MeasurementOperator::dim);
        for b in &bases {
            if b.elements.len() != dim {
                return Err(BasisError::ElementCount {
                    index: b.index,
                    got: b.elements.len(),
                    expected: dim,
                });
            }
            let deviation = b.completeness_error();
            if deviation > COMPLETENESS_TOL {
                return Err(BasisError::Incomplete {
                    index: b.index,
                    deviation,
                });
            }
        }
        Ok(Self {
            kind,
            dim,
            num_qubits: dim.trailing_zeros() as usize,
            bases,
            visibility,
        })
    }

    /// Builds the named scheme; `visibility` only affects entangled bases.
    pub fn build(kind: SchemeKind, visibility: f64) -> Result<Self, BasisError> {
        match kind {
            SchemeKind::Mub => mub_scheme(visibility),
            SchemeKind::Ssqst => {
                check_visibility(visibility)?;
                Ok(ssqst_scheme())
            }
            SchemeKind::Qubit => {
                check_visibility(visibility)?;
                Ok(single_qubit_scheme())
            }
        }
    }

    pub fn num_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn num_elements(&self) -> usize {
        self.bases.iter().map(|b| b.elements.len()).sum()
    }

    pub fn elements(&self) -> impl Iterator<Item = &MeasurementOperator> {
        self.bases.iter().flat_map(|b| b.elements.iter())
    }

    /// Looks up an element by label, returning `(basis, element)` indices.
    pub fn find(&self, label: &str) -> Option<(usize, usize)> {
        self.bases.iter().enumerate().find_map(|(bi, b)| {
            b.elements
                .iter()
                .position(|e| e.label == label)
                .map(|ei| (bi, ei))
        })
    }

    pub fn element(&self, label: &str) -> Option<&MeasurementOperator> {
        self.find(label).map(|(b, e)| &self.bases[b].elements[e])
    }

    /// Restricts the scheme to the given bases (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Result<Self, BasisError> {
        let bases = indices
            .iter()
            .map(|&i| {
                self.bases
                    .get(i)
                    .cloned()
                    .ok_or(BasisError::BasisIndex(i))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.kind, bases, self.visibility)
    }
}

fn check_visibility(v: f64) -> Result<(), BasisError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(BasisError::Visibility(v))
    }
}

fn separable_basis(index: usize, labels: [&str; 4]) -> MeasurementBasis {
    MeasurementBasis {
        index,
        elements: labels
            .iter()
            .map(|l| MeasurementOperator::projector(*l, &ket(l).expect("valid label")))
            .collect(),
        entangled: false,
    }
}

const PAULI_PAIRS: [[char; 2]; 3] = [['H', 'V'], ['D', 'A'], ['R', 'L']];

/// The nine separable bases, ordered HV⊗HV, HV⊗DA, HV⊗RL, DA⊗HV, … , RL⊗RL.
pub fn ssqst_scheme() -> MeasurementScheme {
    let mut bases = Vec::with_capacity(9);
    for a in PAULI_PAIRS {
        for b in PAULI_PAIRS {
            let labels: Vec<String> = a
                .iter()
                .flat_map(|x| b.iter().map(move |y| format!("{x}{y}")))
                .collect();
            let refs = [
                labels[0].as_str(),
                labels[1].as_str(),
                labels[2].as_str(),
                labels[3].as_str(),
            ];
            bases.push(separable_basis(bases.len(), refs));
        }
    }
    MeasurementScheme::new(SchemeKind::Ssqst, bases, 1.0).expect("separable bases are complete")
}

/// `(|a> + s·i|b>)/√2` for product labels `a`, `b` and sign `s`.
fn entangled_ket(a: &str, b: &str, sign: f64) -> PureState {
    let ka = ket(a).expect("valid label");
    let kb = ket(b).expect("valid label");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phase = C64::new(0.0, sign);
    let amps = ka
        .amplitudes()
        .iter()
        .zip(kb.amplitudes())
        .map(|(x, y)| (x + phase * y) * s)
        .collect();
    PureState::new(amps).expect("orthogonal product kets")
}

/// Entangled basis from two `(a, b)` label pairs, each yielding a ± pair.
fn entangled_basis(index: usize, pairs: [(&str, &str); 2], visibility: f64) -> MeasurementBasis {
    let mut elements = Vec::with_capacity(4);
    for (a, b) in pairs {
        let plus = entangled_ket(a, b, 1.0);
        let minus = entangled_ket(a, b, -1.0);
        let (pp, pm) = (plus.projector(), minus.projector());
        let hi = (1.0 + visibility) / 2.0;
        let lo = (1.0 - visibility) / 2.0;
        let rank = if visibility < 1.0 { 2 } else { 1 };
        elements.push(MeasurementOperator {
            label: format!("{a}+i{b}"),
            matrix: &pp.scale_real(hi) + &pm.scale_real(lo),
            rank,
        });
        elements.push(MeasurementOperator {
            label: format!("{a}-i{b}"),
            matrix: &pm.scale_real(hi) + &pp.scale_real(lo),
            rank,
        });
    }
    MeasurementBasis {
        index,
        elements,
        entangled: true,
    }
}

/// The five two-qubit mutually unbiased bases at interference visibility `v`.
pub fn mub_scheme(v: f64) -> Result<MeasurementScheme, BasisError> {
    check_visibility(v)?;
    let bases = vec![
        separable_basis(0, ["HH", "HV", "VH", "VV"]),
        separable_basis(1, ["RD", "RA", "LD", "LA"]),
        separable_basis(2, ["DR", "DL", "AR", "AL"]),
        entangled_basis(3, [("RL", "LR"), ("RR", "LL")], v),
        entangled_basis(4, [("RV", "LH"), ("RH", "LV")], v),
    ];
    MeasurementScheme::new(SchemeKind::Mub, bases, v)
}

/// Single-qubit H/V, D/A, R/L bases.
pub fn single_qubit_scheme() -> MeasurementScheme {
    let bases = PAULI_PAIRS
        .iter()
        .enumerate()
        .map(|(i, pair)| MeasurementBasis {
            index: i,
            elements: pair
                .iter()
                .map(|c| {
                    let l = c.to_string();
                    MeasurementOperator::projector(l.clone(), &ket(&l).expect("valid label"))
                })
                .collect(),
            entangled: false,
        })
        .collect();
    MeasurementScheme::new(SchemeKind::Qubit, bases, 1.0).expect("single-qubit bases are complete")
}

/// Hilbert-Schmidt overlap `Re Tr[p q]`.
pub fn overlap(p: &MeasurementOperator, q: &MeasurementOperator) -> Result<f64, LinalgError> {
    Ok(trace_product(&p.matrix, &q.matrix)?.re)
}

/// Overlap between two elements drawn from different bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossOverlap {
    pub basis_a: usize,
    pub element_a: usize,
    pub basis_b: usize,
    pub element_b: usize,
    pub value: f64,
}

/// All overlaps between elements of different bases, each unordered pair once.
pub fn cross_basis_overlaps(s: &MeasurementScheme) -> Vec<CrossOverlap> {
    let mut out = Vec::new();
    for (ia, ba) in s.bases.iter().enumerate() {
        for (ib, bb) in s.bases.iter().enumerate().skip(ia + 1) {
            for (ea, pa) in ba.elements.iter().enumerate() {
                for (eb, pb) in bb.elements.iter().enumerate() {
                    out.push(CrossOverlap {
                        basis_a: ia,
                        element_a: ea,
                        basis_b: ib,
                        element_b: eb,
                        value: overlap(pa, pb).expect("same dimension within a scheme"),
                    });
                }
            }
        }
    }
    out
}

/// Summary of how far cross-basis overlaps stray from `1/D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbiasednessReport {
    pub scheme: SchemeKind,
    pub dim: usize,
    pub pairs: usize,
    /// Smallest `|overlap − 1/D|`; zero when there are no pairs.
    pub min_deviation: f64,
    /// Largest `|overlap − 1/D|`; zero when there are no pairs.
    pub max_deviation: f64,
    /// Distinct overlap values, merged within `1e-9`, ascending.
    pub distinct_overlaps: Vec<f64>,
}

impl UnbiasednessReport {
    /// Every cross-basis overlap equals `1/D` within `tol`.
    pub fn is_unbiased(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

pub fn certify_unbiased(s: &MeasurementScheme) -> UnbiasednessReport {
    let target = 1.0 / s.dim as f64;
    let overlaps = cross_basis_overlaps(s);
    let mut min_dev = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    let mut values: Vec<f64> = Vec::new();
    for o in &overlaps {
        let dev = (o.value - target).abs();
        min_dev = min_dev.min(dev);
        max_dev = max_dev.max(dev);
        values.push(o.value);
    }
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for v in values {
        match distinct.last() {
            Some(&last) if (v - last).abs() <= 1e-9 => {}
            _ => distinct.push(v),
        }
    }
    UnbiasednessReport {
        scheme: s.kind,
        dim: s.dim,
        pairs: overlaps.len(),
        min_deviation: if overlaps.is_empty() { 0.0 } else { min_dev },
        max_deviation: max_dev,
        distinct_overlaps: distinct,
    }
}

/// Dimension of the real span of all elements.
pub fn operator_span_rank(s: &MeasurementScheme) -> usize {
    let rows: Vec<Vec<f64>> = s.elements().map(|e| hermitian_coordinates(&e.matrix)).collect();
    real_rank(&rows, RANK_TOL)
}

/// True iff the elements span the full `D²`-dimensional operator space.
pub fn certify_complete(s: &MeasurementScheme) -> bool {
    operator_span_rank(s) == s.dim * s.dim
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bell_state, BellKind};

    fn op(s: &MeasurementScheme, label: &str) -> MeasurementOperator {
        s.element(label).unwrap_or_else(|| panic!("missing {label}")).clone()
    }

    #[test]
    fn ssqst_labels_and_size() {
        let s = ssqst_scheme();
        assert_eq!(s.num_bases(), 9);
        assert_eq!(s.num_elements(), 36);
        assert_eq!(s.bases[0].labels(), ["HH", "HV", "VH", "VV"]);
        assert_eq!(s.bases[1].labels(), ["HD", "HA", "VD", "VA"]);
        assert_eq!(s.bases[5].labels(), ["DR", "DL", "AR", "AL"]);
        assert_eq!(s.bases[8].labels(), ["RR", "RL", "LR", "LL"]);
    }

    #[test]
    fn ssqst_overlaps_from_text() {
        let s = ssqst_scheme();
        let ov = |a: &str, b: &str| overlap(&op(&s, a), &op(&s, b)).unwrap();
        assert!((ov("HH", "HD") - 0.5).abs() < 1e-12);
        assert!((ov("HH", "DD") - 0.25).abs() < 1e-12);
        assert!(ov("HH", "VD").abs() < 1e-12);
    }

    #[test]
    fn overlap_examples() {
        let s = ssqst_scheme();
        let hh = op(&s, "HH");
        assert!((overlap(&hh, &hh).unwrap() - 1.0).abs() < 1e-15);
        assert!(overlap(&hh, &op(&s, "VV")).unwrap().abs() < 1e-15);
        let phi = MeasurementOperator::projector("phi+", &bell_state(BellKind::PhiPlus));
        // Tr[|Φ+><Φ+| |HH><HH|] = |<HH|Φ+>|² = 1/2
        assert!((overlap(&phi, &hh).unwrap() - 0.5).abs() < 1e-15);
        let q = single_qubit_scheme();
        assert!(overlap(&hh, &q.bases[0].elements[0]).is_err());
    }

    #[test]
    fn mub_structure() {
        let s = mub_scheme(1.0).unwrap();
        assert_eq!(s.num_bases(), 5);
        assert_eq!(s.bases[3].labels(), ["RL+iLR", "RL-iLR", "RR+iLL", "RR-iLL"]);
        assert_eq!(s.bases[4].labels(), ["RV+iLH", "RV-iLH", "RH+iLV", "RH-iLV"]);
        assert!(s.bases[3].entangled && s.bases[4].entangled);
        assert!(!s.bases[0].entangled);
        let report = certify_unbiased(&s);
        // C(5,2) basis pairs × 16 element pairs
        assert_eq!(report.pairs, 160);
        assert!(report.max_deviation < 1e-12, "{report:?}");
    }

    #[test]
    fn visibility_degrades_entangled_elements() {
        let s = mub_scheme(0.93).unwrap();
        for b in &s.bases {
            assert!(b.completeness_error() < 1e-9);
            for e in &b.elements {
                let eig = crate::linalg::eig_hermitian(&e.matrix).unwrap();
                if b.entangled {
                    assert_eq!(e.rank, 2);
                    assert!((eig.values[0] - 0.965).abs() < 1e-12);
                    assert!((eig.values[1] - 0.035).abs() < 1e-12);
                    assert!(eig.values[2].abs() < 1e-12);
                } else {
                    assert_eq!(e.rank, 1);
                    assert!((eig.values[0] - 1.0).abs() < 1e-12);
                }
                assert!((e.matrix.trace().re - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn visibility_range_checked() {
        assert_eq!(mub_scheme(0.0), Err(BasisError::Visibility(0.0)));
        assert_eq!(mub_scheme(1.01), Err(BasisError::Visibility(1.01)));
        assert!(mub_scheme(f64::NAN).is_err());
    }

    #[test]
    fn ssqst_is_biased_with_expected_values() {
        let r = certify_unbiased(&ssqst_scheme());
        assert_eq!(r.distinct_overlaps.len(), 3);
        assert!((r.max_deviation - 0.25).abs() < 1e-12);
        assert!(r.min_deviation < 1e-12);
        for (v, e) in r.distinct_overlaps.iter().zip([0.0, 0.25, 0.5]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn single_basis_is_vacuously_unbiased() {
        let s = mub_scheme(1.0).unwrap().subset(&[2]).unwrap();
        let r = certify_unbiased(&s);
        assert_eq!(r.pairs, 0);
        assert!(r.is_unbiased(0.0));
    }

    #[test]
    fn completeness() {
        assert!(certify_complete(&ssqst_scheme()));
        assert!(certify_complete(&mub_scheme(1.0).unwrap()));
        assert!(certify_complete(&mub_scheme(0.93).unwrap()));
        let partial = mub_scheme(1.0).unwrap().subset(&[0, 1, 2]).unwrap();
        // three bases of four projectors, identity shared: 3·3 + 1 = 10
        assert_eq!(operator_span_rank(&partial), 10);
        assert!(!certify_complete(&partial));
        assert!(certify_complete(&single_qubit_scheme()));
    }

    #[test]
    fn scheme_kind_parsing() {
        assert_eq!("MUB".parse::<SchemeKind>().unwrap(), SchemeKind::Mub);
        assert_eq!("ssqst".parse::<SchemeKind>().unwrap(), SchemeKind::Ssqst);
        assert!("pauli".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn new_rejects_incomplete_basis() {
        let mut s = ssqst_scheme();
        s.bases[0].elements.pop();
        assert!(matches!(
            MeasurementScheme::new(SchemeKind::Ssqst, s.bases.clone(), 1.0),
            Err(BasisError::ElementCount { .. })
        ));
    }
}
