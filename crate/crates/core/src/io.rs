//! JSON file formats shared by the CLI and the examples.
//!
//! Matrices are written as nested arrays of `[real, imaginary]` pairs,
//! row by row.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bases::{MeasurementScheme, SchemeKind};
use crate::estimate::{Method, ReconstructionResult};
use crate::linalg::{ComplexMatrix, C64};
use crate::metrics::purity;
use crate::simulate::{CountData, CountModel};
use crate::states::{DensityMatrix, NamedState};
use crate::{Error, Result};

/// Rows of `[re, im]` pairs.
pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_repr(m: &ComplexMatrix) -> MatrixRepr {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_repr(r: &MatrixRepr) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = r
        .iter()
        .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    if rows.iter().any(|row| row.len() != rows[0].len()) {
        return Err(Error::Format("ragged matrix rows".into()));
    }
    Ok(ComplexMatrix::from_rows(&rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub label: String,
    pub rank: usize,
    pub matrix: MatrixRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub index: usize,
    pub entangled: bool,
    pub elements: Vec<ElementRecord>,
}

/// Exported measurement scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeFile {
    pub scheme: SchemeKind,
    pub dim: usize,
    pub visibility: f64,
    pub bases: Vec<BasisRecord>,
}

impl From<&MeasurementScheme> for SchemeFile {
    fn from(s: &MeasurementScheme) -> Self {
        Self {
            scheme: s.kind,
            dim: s.dim,
            visibility: s.visibility,
            bases: s
                .bases
                .iter()
                .map(|b| BasisRecord {
                    index: b.index,
                    entangled: b.entangled,
                    elements: b
                        .elements
                        .iter()
                        .map(|e| ElementRecord {
                            label: e.label.clone(),
                            rank: e.rank,
                            matrix: matrix_to_repr(&e.matrix),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCounts {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
}

/// Serialized [`CountData`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsFile {
    pub scheme: SchemeKind,
    pub visibility: f64,
    pub model: CountModel,
    pub n_total: u64,
    pub seed: Option<u64>,
    #[serde(default)]
    pub stream_id: Option<u64>,
    /// State the counts were simulated from, when known.
    #[serde(default)]
    pub state: Option<NamedState>,
    /// Density matrix the counts were simulated from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_rho: Option<MatrixRepr>,
    pub bases: Vec<BasisCounts>,
}

impl CountsFile {
    pub fn new(data: &CountData, scheme: &MeasurementScheme, state: Option<NamedState>) -> Self {
        Self {
            scheme: data.scheme,
            visibility: data.visibility,
            model: data.model,
            n_total: data.n_total,
            seed: data.seed,
            stream_id: data.stream_id,
            state,
            true_rho: None,
            bases: scheme
                .bases
                .iter()
                .zip(&data.counts)
                .map(|(b, c)| BasisCounts {
                    labels: b.elements.iter().map(|e| e.label.clone()).collect(),
                    counts: c.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds the scheme named in the file and checks labels against it.
    pub fn scheme(&self) -> Result<MeasurementScheme> {
        let scheme = MeasurementScheme::build(self.scheme, self.visibility)?;
        if scheme.num_bases() != self.bases.len() {
            return Err(Error::Format(format!(
                "{} scheme has {} bases, file has {}",
                self.scheme,
                scheme.num_bases(),
                self.bases.len()
            )));
        }
        for (b, rec) in scheme.bases.iter().zip(&self.bases) {
            if rec.labels.len() != rec.counts.len() {
                return Err(Error::Format(format!(
                    "basis {}: {} labels but {} counts",
                    b.index,
                    rec.labels.len(),
                    rec.counts.len()
                )));
            }
            if b.labels() != rec.labels {
                return Err(Error::Format(format!(
                    "basis {} labels {:?} do not match scheme labels {:?}",
                    b.index,
                    rec.labels,
                    b.labels()
                )));
            }
        }
        Ok(scheme)
    }

    pub fn with_true_state(mut self, rho: &DensityMatrix) -> Self {
        self.true_rho = Some(matrix_to_repr(rho.matrix()));
        self
    }

    /// The recorded true state, validated as a density matrix.
    pub fn true_state(&self) -> Result<Option<DensityMatrix>> {
        match &self.true_rho {
            Some(r) => Ok(Some(DensityMatrix::new(matrix_from_repr(r)?)?)),
            None => Ok(None),
        }
    }

    pub fn to_count_data(&self) -> CountData {
        CountData {
            scheme: self.scheme,
            visibility: self.visibility,
            model: self.model,
            n_total: self.n_total,
            seed: self.seed,
            stream_id: self.stream_id,
            counts: self.bases.iter().map(|b| b.counts.clone()).collect(),
        }
    }
}

/// Serialized [`ReconstructionResult`] plus diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionFile {
    pub method: Method,
    pub scheme: SchemeKind,
    pub rho: MatrixRepr,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub purity: f64,
    /// Present when the counts file named the true state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<NamedState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

impl ReconstructionFile {
    pub fn new(result: &ReconstructionResult, scheme: SchemeKind) -> Self {
        Self {
            method: result.method,
            scheme,
            rho: matrix_to_repr(result.rho_hat.matrix()),
            log_likelihood: result.log_likelihood,
            iterations: result.iterations,
            converged: result.converged,
            purity: purity(&result.rho_hat),
            state: None,
            fidelity: None,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::mub_scheme;
    use crate::simulate::sample_counts;
    use crate::states::{maximally_mixed, RngStream};

    #[test]
    fn matrix_repr_round_trip() {
        let s = mub_scheme(0.93).unwrap();
        let m = &s.bases[3].elements[0].matrix;
        assert_eq!(&matrix_from_repr(&matrix_to_repr(m)).unwrap(), m);
        let ragged: MatrixRepr = vec![vec![[1.0, 0.0]], vec![]];
        assert!(matrix_from_repr(&ragged).is_err());
    }

    #[test]
    fn counts_file_round_trip_and_label_check() {
        let s = mub_scheme(0.93).unwrap();
        let rho = maximally_mixed(4).unwrap();
        let c = sample_counts(&rho, &s, 100, CountModel::MultinomialExact, &mut RngStream::new(1, 0)).unwrap();
        let f = CountsFile::new(&c, &s, Some(NamedState::MaximallyMixed));
        let text = serde_json::to_string(&f).unwrap();
        let back: CountsFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_count_data(), c);
        assert_eq!(back.scheme().unwrap(), s);
        assert!(back.true_state().unwrap().is_none());
        let with = f.clone().with_true_state(&rho);
        let back: CountsFile = serde_json::from_str(&serde_json::to_string(&with).unwrap()).unwrap();
        assert_eq!(back.true_state().unwrap().unwrap(), rho);
        let mut bad = back.clone();
        bad.bases[0].labels[0] = "XX".into();
        assert!(matches!(bad.scheme(), Err(Error::Format(_))));
    }

    #[test]
    fn scheme_file_shape() {
        let f = SchemeFile::from(&mub_scheme(1.0).unwrap());
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["scheme"], "mub");
        assert_eq!(v["bases"].as_array().unwrap().len(), 5);
        assert_eq!(v["bases"][3]["elements"][0]["label"], "RL+iLR");
        assert_eq!(v["bases"][0]["elements"][0]["matrix"][0][0][0], 1.0);
    }
}
