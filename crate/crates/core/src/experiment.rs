//! Experiment runners: infidelity histograms over random states, and
//! MUB-versus-SSQST infidelity ratios as a function of total copies.
//!
//! Every record draws its counts from its own RNG stream, derived from the
//! master seed and the record index, so results do not depend on the order
//! in which trials are executed. Output order is always record order.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{MeasurementScheme, SchemeKind};
use crate::estimate::{mle_reconstruct, MleOptions};
use crate::metrics::{fit_power_law, infidelity, purity, summarize, SummaryStats};
use crate::simulate::{sample_counts, CountData, CountModel};
use crate::states::{DensityMatrix, NamedState, RngStream};
use crate::{Error, Result};

/// Default total copies per reconstruction for the histogram experiment.
pub const DEFAULT_HISTOGRAM_N: u64 = 18_000;
/// Default number of random states per class.
pub const DEFAULT_RANDOM_STATES: usize = 3000;
/// Default repetitions per N for the ratio experiment.
pub const DEFAULT_TRIALS: usize = 30;
/// Interference visibility of the entangling measurements.
pub const DEFAULT_VISIBILITY: f64 = 0.93;
/// Default N grid for the ratio experiment.
pub const DEFAULT_N_GRID: [u64; 5] = [1_000, 3_000, 10_000, 30_000, 100_000];

/// Stream-id offset separating state-preparation streams from count streams.
pub const STATE_STREAM_BASE: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Histogram,
    Ratio,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Histogram => "histogram",
            ExperimentKind::Ratio => "ratio",
        })
    }
}

/// Reference state for the reported infidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// The state the counts were simulated from.
    #[default]
    TrueState,
    /// Per scheme, the MLE fit of all counts pooled over every trial and N.
    PooledFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// State for the ratio experiment; the histogram always uses both
    /// Haar-random classes.
    pub state: NamedState,
    /// Depolarize the fixed state down to this purity before simulating.
    pub state_purity: Option<f64>,
    pub schemes: Vec<SchemeKind>,
    pub visibility: f64,
    pub n_total: Vec<u64>,
    pub trials: usize,
    pub num_random_states: usize,
    pub model: CountModel,
    pub seed: u64,
    pub baseline: Baseline,
    pub mle: MleOptions,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::ratio(NamedState::MaximallyMixed)
    }
}

impl ExperimentConfig {
    pub fn histogram() -> Self {
        Self {
            experiment: ExperimentKind::Histogram,
            state: NamedState::HaarSeparable,
            state_purity: None,
            schemes: vec![SchemeKind::Ssqst],
            visibility: DEFAULT_VISIBILITY,
            n_total: vec![DEFAULT_HISTOGRAM_N],
            trials: 1,
            num_random_states: DEFAULT_RANDOM_STATES,
            model: CountModel::MultinomialExact,
            seed: 0,
            baseline: Baseline::TrueState,
            mle: MleOptions::default(),
            output: None,
        }
    }

    pub fn ratio(state: NamedState) -> Self {
        Self {
            experiment: ExperimentKind::Ratio,
            state,
            schemes: vec![SchemeKind::Mub, SchemeKind::Ssqst],
            n_total: DEFAULT_N_GRID.to_vec(),
            trials: DEFAULT_TRIALS,
            ..Self::histogram()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.trials == 0 {
            return fail("trials per point must be at least 1");
        }
        if self.n_total.is_empty() || self.n_total.contains(&0) {
            return fail("N_total list must be non-empty and every N_total positive");
        }
        if !(self.visibility > 0.0 && self.visibility <= 1.0) {
            return fail("visibility must lie in (0, 1]");
        }
        if self.schemes.is_empty() {
            return fail("at least one scheme is required");
        }
        if self.schemes.contains(&SchemeKind::Qubit) {
            return fail("the qubit scheme cannot measure two-qubit states");
        }
        if let Some(p) = self.state_purity {
            if !(p > 0.25 && p <= 1.0) {
                return fail("state purity must lie in (1/4, 1]");
            }
        }
        match self.experiment {
            ExperimentKind::Histogram => {
                if self.num_random_states == 0 {
                    return fail("number of random states must be at least 1");
                }
                if self.baseline == Baseline::PooledFit {
                    return fail("pooled baseline needs a fixed state; use the ratio experiment");
                }
            }
            ExperimentKind::Ratio => {
                if !(self.schemes.contains(&SchemeKind::Mub) && self.schemes.contains(&SchemeKind::Ssqst)) {
                    return fail("ratio experiment needs both mub and ssqst schemes");
                }
                if self.baseline == Baseline::PooledFit && self.state.is_random() {
                    return fail("pooled baseline needs a fixed state");
                }
            }
        }
        Ok(())
    }

    /// Number of records a run produces.
    pub fn expected_records(&self) -> usize {
        let per_state = self.schemes.len() * self.n_total.len() * self.trials;
        match self.experiment {
            ExperimentKind::Histogram => 2 * self.num_random_states * per_state,
            ExperimentKind::Ratio => per_state,
        }
    }
}

/// One reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: ExperimentKind,
    pub scheme: SchemeKind,
    pub state: NamedState,
    pub n_total: u64,
    pub trial: usize,
    /// Seed of the record's count stream. For fixed states, `simulate --seed`
    /// with this value regenerates the same counts.
    pub seed: u64,
    pub infidelity: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Infidelity statistics for one (state class, scheme, N) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub state: NamedState,
    pub scheme: SchemeKind,
    pub n_total: u64,
    pub stats: SummaryStats,
}

/// SSQST / MUB ratio of mean infidelities at one N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n_total: u64,
    pub ratio: f64,
    /// Standard error propagated from the standard errors of both means.
    pub ratio_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub scheme: SchemeKind,
    /// Slope of ln(mean infidelity) against ln N.
    pub slope: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub records: Vec<ExperimentRecord>,
    pub summaries: Vec<CellSummary>,
    pub ratios: Vec<RatioPoint>,
    /// Average of the per-N ratios.
    pub mean_ratio: Option<f64>,
    pub slopes: Vec<SlopeSummary>,
}

impl ExperimentOutput {
    pub fn summary(&self, state: NamedState, scheme: SchemeKind, n_total: u64) -> Option<&SummaryStats> {
        self.summaries
            .iter()
            .find(|c| c.state == state && c.scheme == scheme && c.n_total == n_total)
            .map(|c| &c.stats)
    }

    pub fn slope(&self, scheme: SchemeKind) -> Option<f64> {
        self.slopes.iter().find(|s| s.scheme == scheme).map(|s| s.slope)
    }

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    /// Writes the records as CSV with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
    }

    /// Writes `path` (CSV records) and `path.summary.json` (everything else).
    pub fn write_files(&self, path: &Path) -> Result<PathBuf> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let sidecar = summary_path(path);
        #[derive(Serialize)]
        struct Sidecar<'a> {
            config: &'a ExperimentConfig,
            records: usize,
            summaries: &'a [CellSummary],
            ratios: &'a [RatioPoint],
            mean_ratio: Option<f64>,
            slopes: &'a [SlopeSummary],
        }
        crate::io::write_json(
            &sidecar,
            &Sidecar {
                config: &self.config,
                records: self.records.len(),
                summaries: &self.summaries,
                ratios: &self.ratios,
                mean_ratio: self.mean_ratio,
                slopes: &self.slopes,
            },
        )?;
        Ok(sidecar)
    }
}

/// `results.csv` → `results.summary.json`
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

/// SplitMix64 finalizer over `(master, index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x6a09_e667_f3bc_c908);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Depolarizes `rho` (assumed pure) to the requested purity.
pub fn depolarize_to_purity(rho: &DensityMatrix, target: f64) -> DensityMatrix {
    // Tr ρ² for (1 − p)|ψ><ψ| + p I/D is 1 − 2p(1 − 1/D) + p²(1 − 1/D).
    let d = rho.dim() as f64;
    let k = 1.0 - 1.0 / d;
    let start = purity(rho);
    if target >= start {
        return rho.clone();
    }
    // Solve k p² − 2k p + (start − target) = 0 for the root in [0, 1].
    let c = start - target;
    let p = 1.0 - (1.0 - c / k).max(0.0).sqrt();
    rho.depolarize(p.clamp(0.0, 1.0))
}

struct Job {
    state: NamedState,
    state_index: usize,
    scheme_index: usize,
    n_total: u64,
    trial: usize,
}

struct Outcome {
    record: ExperimentRecord,
    counts: CountData,
    truth: DensityMatrix,
    rho_hat: DensityMatrix,
}

/// Prepares `state` from the state stream `index` of `seed`, depolarized to
/// `purity` when given. Random states ignore `purity`.
pub fn prepare_state(state: NamedState, purity: Option<f64>, seed: u64, index: u64) -> DensityMatrix {
    let mut rng = RngStream::new(seed, STATE_STREAM_BASE + index);
    let rho = state.prepare(&mut rng);
    match purity {
        Some(p) if !state.is_random() => depolarize_to_purity(&rho, p),
        _ => rho,
    }
}

fn run_job(
    cfg: &ExperimentConfig,
    schemes: &[MeasurementScheme],
    index: usize,
    job: &Job,
) -> Result<Outcome> {
    let scheme = &schemes[job.scheme_index];
    let truth = prepare_state(job.state, cfg.state_purity, cfg.seed, job.state_index as u64);
    let seed = derive_seed(cfg.seed, index as u64);
    let mut rng = RngStream::new(seed, 0);
    let counts = sample_counts(&truth, scheme, job.n_total, cfg.model, &mut rng)?;
    let fit = mle_reconstruct(&counts, scheme, &cfg.mle)?;
    let infid = infidelity(&truth, &fit.rho_hat)?;
    Ok(Outcome {
        record: ExperimentRecord {
            experiment: cfg.experiment,
            scheme: scheme.kind,
            state: job.state,
            n_total: job.n_total,
            trial: job.trial,
            seed,
            infidelity: infid,
            loglik: fit.log_likelihood,
            iterations: fit.iterations,
            converged: fit.converged,
        },
        counts,
        truth,
        rho_hat: fit.rho_hat,
    })
}

fn build_jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut jobs = Vec::with_capacity(cfg.expected_records());
    match cfg.experiment {
        ExperimentKind::Histogram => {
            for (class_index, class) in [NamedState::HaarSeparable, NamedState::HaarEntangled]
                .into_iter()
                .enumerate()
            {
                for j in 0..cfg.num_random_states {
                    for (k, _) in cfg.schemes.iter().enumerate() {
                        for &n in &cfg.n_total {
                            for t in 0..cfg.trials {
                                jobs.push(Job {
                                    state: class,
                                    state_index: class_index * cfg.num_random_states + j,
                                    scheme_index: k,
                                    n_total: n,
                                    trial: j * cfg.trials + t,
                                });
                            }
                        }
                    }
                }
            }
        }
        ExperimentKind::Ratio => {
            for &n in &cfg.n_total {
                for t in 0..cfg.trials {
                    for (k, _) in cfg.schemes.iter().enumerate() {
                        jobs.push(Job {
                            state: cfg.state,
                            // random states are redrawn per trial, shared across schemes and N
                            state_index: if cfg.state.is_random() { t } else { 0 },
                            scheme_index: k,
                            n_total: n,
                            trial: t,
                        });
                    }
                }
            }
        }
    }
    jobs
}

fn summarize_cells(cfg: &ExperimentConfig, records: &[ExperimentRecord]) -> Result<Vec<CellSummary>> {
    let states: Vec<NamedState> = match cfg.experiment {
        ExperimentKind::Histogram => vec![NamedState::HaarSeparable, NamedState::HaarEntangled],
        ExperimentKind::Ratio => vec![cfg.state],
    };
    let mut out = Vec::new();
    for &state in &states {
        for &scheme in &cfg.schemes {
            for &n in &cfg.n_total {
                let xs: Vec<f64> = records
                    .iter()
                    .filter(|r| r.state == state && r.scheme == scheme && r.n_total == n)
                    .map(|r| r.infidelity)
                    .collect();
                out.push(CellSummary {
                    state,
                    scheme,
                    n_total: n,
                    stats: summarize(&xs)?,
                });
            }
        }
    }
    Ok(out)
}

/// Runs either experiment according to `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        ExperimentKind::Histogram => run_histogram(cfg),
        ExperimentKind::Ratio => run_ratio(cfg),
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<(Vec<MeasurementScheme>, Vec<Outcome>)> {
    cfg.validate()?;
    let schemes = cfg
        .schemes
        .iter()
        .map(|&k| MeasurementScheme::build(k, cfg.visibility))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs = build_jobs(cfg);
    let outcomes = jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| run_job(cfg, &schemes, i, job))
        .collect::<Result<Vec<_>>>()?;
    Ok((schemes, outcomes))
}

/// Infidelity of SSQST reconstructions over Haar-random separable and
/// maximally entangled states.
pub fn run_histogram(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.experiment != ExperimentKind::Histogram {
        return Err(Error::Config("expected a histogram configuration".into()));
    }
    let (_, outcomes) = execute(cfg)?;
    let records: Vec<ExperimentRecord> = outcomes.into_iter().map(|o| o.record).collect();
    let summaries = summarize_cells(cfg, &records)?;
    Ok(ExperimentOutput {
        config: cfg.clone(),
        records,
        summaries,
        ratios: Vec::new(),
        mean_ratio: None,
        slopes: Vec::new(),
    })
}

/// MUB versus SSQST infidelity at each N of the configured grid.
pub fn run_ratio(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.experiment != ExperimentKind::Ratio {
        return Err(Error::Config("expected a ratio configuration".into()));
    }
    let (schemes, mut outcomes) = execute(cfg)?;

    if cfg.baseline == Baseline::PooledFit {
        for scheme in &schemes {
            let pooled = CountData::pooled(
                outcomes
                    .iter()
                    .filter(|o| o.record.scheme == scheme.kind)
                    .map(|o| &o.counts),
            )?;
            let reference = mle_reconstruct(&pooled, scheme, &cfg.mle)?.rho_hat;
            for o in outcomes.iter_mut().filter(|o| o.record.scheme == scheme.kind) {
                o.record.infidelity = infidelity(&reference, &o.rho_hat)?;
            }
        }
    }
    debug_assert!(outcomes.iter().all(|o| o.truth.dim() == 4));

    let records: Vec<ExperimentRecord> = outcomes.into_iter().map(|o| o.record).collect();
    let summaries = summarize_cells(cfg, &records)?;
    let cell = |scheme, n| {
        summaries
            .iter()
            .find(|c| c.scheme == scheme && c.n_total == n)
            .map(|c| c.stats)
            .expect("summary for every cell")
    };

    let mut ratios = Vec::with_capacity(cfg.n_total.len());
    for &n in &cfg.n_total {
        let s = cell(SchemeKind::Ssqst, n);
        let m = cell(SchemeKind::Mub, n);
        let ratio = s.mean / m.mean;
        let rel = ((s.mean_se() / s.mean).powi(2) + (m.mean_se() / m.mean).powi(2)).sqrt();
        ratios.push(RatioPoint {
            n_total: n,
            ratio,
            ratio_se: ratio * rel,
        });
    }
    let mean_ratio = Some(ratios.iter().map(|r| r.ratio).sum::<f64>() / ratios.len() as f64);

    let mut slopes = Vec::new();
    let mut distinct = cfg.n_total.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() >= 2 {
        for &scheme in &cfg.schemes {
            let pts: Vec<(f64, f64)> = distinct
                .iter()
                .map(|&n| (n as f64, cell(scheme, n).mean))
                .collect();
            slopes.push(SlopeSummary {
                scheme,
                slope: fit_power_law(&pts)?,
            });
        }
    }

    Ok(ExperimentOutput {
        config: cfg.clone(),
        records,
        summaries,
        ratios,
        mean_ratio,
        slopes,
    })
}
