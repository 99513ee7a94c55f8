//! Two-qubit polarization tomography with mutually unbiased bases.
//!
//! The crate simulates tomography experiments on two-qubit states and
//! reconstructs density matrices from the simulated counts, so that
//! tomography in five mutually unbiased bases (MUB) can be compared with
//! standard separable tomography in nine Pauli product bases (SSQST).
//!
//! Modules, bottom-up:
//!
//! * [`linalg`]: small dense complex matrices, Jacobi eigensolver, PSD square root.
//! * [`states`]: polarization kets, Bell states, Haar-random sampling, seeded RNG streams.
//! * [`bases`]: the SSQST and MUB schemes, visibility degradation, certification.
//! * [`simulate`]: Born probabilities and count sampling.
//! * [`estimate`]: maximum likelihood, linear inversion, analytic mixed-state ratio.
//! * [`metrics`]: fidelity, purity, summaries, power-law fits.
//! * [`experiment`]: the histogram and ratio experiment runners and their CSV output.
//! * [`io`]: JSON file formats for schemes, counts, reconstructions and configs.

pub mod bases;
pub mod estimate;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod simulate;
pub mod states;

pub use bases::{certify_complete, certify_unbiased, mub_scheme, ssqst_scheme, MeasurementScheme, SchemeKind};
pub use estimate::{linear_inversion, mle_reconstruct, predict_mixed_ratio, MleOptions, ReconstructionResult};
pub use linalg::{ComplexMatrix, C64};
pub use metrics::{fidelity, infidelity, purity};
pub use simulate::{sample_counts, CountData, CountModel};
pub use states::{DensityMatrix, NamedState, RngStream};

use thiserror::Error;

/// Any error the crate can produce.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    State(#[from] states::StateError),
    #[error(transparent)]
    Basis(#[from] bases::BasisError),
    #[error(transparent)]
    Simulate(#[from] simulate::SimulateError),
    #[error(transparent)]
    Estimate(#[from] estimate::EstimateError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
