use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mubtomo::bases::{certify_complete, certify_unbiased, operator_span_rank, MeasurementScheme, SchemeKind};
use mubtomo::estimate::{linear_inversion, mle_reconstruct, Method};
use mubtomo::experiment::{prepare_state, run, Baseline, ExperimentConfig, ExperimentKind, ExperimentOutput};
use mubtomo::io::{read_json, write_json, CountsFile, ReconstructionFile, SchemeFile};
use mubtomo::metrics::fidelity;
use mubtomo::simulate::{noiseless_counts, sample_counts, CountModel};
use mubtomo::states::{NamedState, RngStream};
use mubtomo::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

/// Two-qubit tomography with mutually unbiased bases versus separable
/// single-qubit measurements.
#[derive(Parser)]
#[command(name = "mubtomo", version)]
struct Cli {
    /// JSON config; flags given on the command line override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Exit with status 2 when a reconstruction does not converge or a
    /// certification fails.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify or export measurement schemes.
    Bases {
        #[command(subcommand)]
        action: BasesAction,
    },
    /// Simulate measurement counts for a named state.
    Simulate(SimulateArgs),
    /// Reconstruct a density matrix from a counts file.
    Reconstruct(ReconstructArgs),
    /// Run an infidelity experiment and write per-trial CSV.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentCommand,
    },
}

#[derive(Subcommand)]
enum BasesAction {
    /// Print unbiasedness and completeness reports.
    Check(SchemeArgs),
    /// Write the scheme's POVM elements as JSON.
    Export(SchemeArgs),
}

#[derive(Args)]
struct SchemeArgs {
    /// Scheme to inspect; both when omitted (check only).
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    visibility: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    state: Option<NamedState>,
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    visibility: Option<f64>,
    /// Total copies.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    model: Option<CountModel>,
    #[arg(long)]
    seed: Option<u64>,
    /// Depolarize the state to this purity first.
    #[arg(long)]
    purity: Option<f64>,
    /// Write rounded expected counts instead of sampling.
    #[arg(long)]
    expected: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mle,
    Linear,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Counts file written by `simulate`.
    counts: PathBuf,
    #[arg(long, value_enum, default_value = "mle")]
    method: MethodArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// SSQST infidelity over Haar-random separable and entangled states.
    Histogram(ExperimentArgs),
    /// MUB versus SSQST infidelity over a grid of N.
    Ratio(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    state: Option<NamedState>,
    /// Schemes to run (repeatable).
    #[arg(long)]
    scheme: Vec<SchemeKind>,
    #[arg(long)]
    visibility: Option<f64>,
    /// Comma-separated list of total copies.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Random states per class.
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    model: Option<CountModel>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    purity: Option<f64>,
    #[arg(long, value_enum)]
    baseline: Option<BaselineArg>,
    /// CSV output; the summary goes next to it as `<stem>.summary.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    TrueState,
    PooledFit,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    let file_config = match &cli.config {
        Some(p) => Some(read_json::<ExperimentConfig>(p)?),
        None => None,
    };
    match cli.command {
        Command::Bases { action } => match action {
            BasesAction::Check(a) => bases_check(&a, file_config.as_ref(), cli.strict),
            BasesAction::Export(a) => bases_export(&a, file_config.as_ref()),
        },
        Command::Simulate(a) => simulate(&a, file_config.as_ref()),
        Command::Reconstruct(a) => reconstruct(&a, file_config.as_ref(), cli.strict),
        Command::Experiment { kind } => experiment(kind, file_config, cli.strict),
    }
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> CmdResult {
    match out {
        Some(p) => write_json(p, value)?,
        None => {
            let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
            writeln!(std::io::stdout().lock(), "{text}").map_err(Error::from)?;
        }
    }
    Ok(())
}

fn visibility_or(flag: Option<f64>, cfg: Option<&ExperimentConfig>) -> f64 {
    flag.or(cfg.map(|c| c.visibility)).unwrap_or(1.0)
}

fn bases_check(a: &SchemeArgs, cfg: Option<&ExperimentConfig>, strict: bool) -> CmdResult {
    let v = visibility_or(a.visibility, cfg);
    let kinds = match a.scheme {
        Some(k) => vec![k],
        None => vec![SchemeKind::Mub, SchemeKind::Ssqst],
    };
    #[derive(Serialize)]
    struct Check {
        scheme: SchemeKind,
        visibility: f64,
        max_deviation: f64,
        pairs: usize,
        distinct_overlaps: Vec<f64>,
        span_rank: usize,
        complete: bool,
    }
    let mut failed = Vec::new();
    let mut reports = Vec::new();
    for kind in kinds {
        let s = MeasurementScheme::build(kind, v).map_err(Error::from)?;
        let u = certify_unbiased(&s);
        let complete = certify_complete(&s);
        println!(
            "{kind}: {} cross-basis pairs, max |overlap - 1/{}| = {:.3e}, overlaps {:?}, span rank {}/{}, complete: {complete}",
            u.pairs,
            s.dim,
            u.max_deviation,
            u.distinct_overlaps,
            operator_span_rank(&s),
            s.dim * s.dim
        );
        if !complete || (kind == SchemeKind::Mub && v == 1.0 && !u.is_unbiased(1e-12)) {
            failed.push(kind);
        }
        reports.push(Check {
            scheme: kind,
            visibility: v,
            max_deviation: u.max_deviation,
            pairs: u.pairs,
            distinct_overlaps: u.distinct_overlaps,
            span_rank: operator_span_rank(&s),
            complete,
        });
    }
    if let Some(p) = &a.out {
        write_json(p, &reports)?;
    }
    if strict && !failed.is_empty() {
        return Err(Failure::Numerical(format!("certification failed for {failed:?}")));
    }
    Ok(())
}

fn bases_export(a: &SchemeArgs, cfg: Option<&ExperimentConfig>) -> CmdResult {
    let kind = a
        .scheme
        .ok_or_else(|| Failure::Usage("bases export needs --scheme".into()))?;
    let s = MeasurementScheme::build(kind, visibility_or(a.visibility, cfg)).map_err(Error::from)?;
    emit(a.out.as_deref(), &SchemeFile::from(&s))
}

fn simulate(a: &SimulateArgs, cfg: Option<&ExperimentConfig>) -> CmdResult {
    let state = a
        .state
        .or(cfg.map(|c| c.state))
        .ok_or_else(|| Failure::Usage("simulate needs --state".into()))?;
    let kind = a
        .scheme
        .or(cfg.and_then(|c| c.schemes.first().copied()))
        .ok_or_else(|| Failure::Usage("simulate needs --scheme".into()))?;
    let n = a
        .n
        .or(cfg.and_then(|c| c.n_total.first().copied()))
        .ok_or_else(|| Failure::Usage("simulate needs --n".into()))?;
    let v = visibility_or(a.visibility, cfg);
    let model = a.model.or(cfg.map(|c| c.model)).unwrap_or_default();
    let seed = a.seed.or(cfg.map(|c| c.seed)).unwrap_or(0);
    let purity = a.purity.or(cfg.and_then(|c| c.state_purity));
    if let Some(p) = purity {
        if !(p > 0.25 && p <= 1.0) {
            return Err(Failure::Usage("purity must lie in (1/4, 1]".into()));
        }
    }

    let scheme = MeasurementScheme::build(kind, v).map_err(Error::from)?;
    let rho = prepare_state(state, purity, seed, 0);
    let data = if a.expected {
        noiseless_counts(&rho, &scheme, n).map_err(Error::from)?
    } else {
        let mut rng = RngStream::new(seed, 0);
        sample_counts(&rho, &scheme, n, model, &mut rng).map_err(Error::from)?
    };
    let file = CountsFile::new(&data, &scheme, Some(state)).with_true_state(&rho);
    emit(a.out.as_deref(), &file)
}

fn reconstruct(a: &ReconstructArgs, cfg: Option<&ExperimentConfig>, strict: bool) -> CmdResult {
    let file: CountsFile = read_json(&a.counts)?;
    let scheme = file.scheme()?;
    let data = file.to_count_data();
    let result = match a.method {
        MethodArg::Mle => {
            let opts = cfg.map(|c| c.mle).unwrap_or_default();
            mle_reconstruct(&data, &scheme, &opts)
        }
        MethodArg::Linear => linear_inversion(&data, &scheme).and_then(|l| l.into_result(&data, &scheme)),
    }
    .map_err(Error::from)?;

    let mut out = ReconstructionFile::new(&result, scheme.kind);
    out.state = file.state;
    if let Some(truth) = file.true_state()? {
        let f = fidelity(&truth, &result.rho_hat).map_err(Error::from)?;
        out.fidelity = Some(f);
        eprintln!("fidelity to true state: {f:.6}");
    }
    emit(a.out.as_deref(), &out)?;
    if strict && result.method == Method::Mle && !result.converged {
        return Err(Failure::Numerical(format!(
            "MLE did not converge after {} iterations",
            result.iterations
        )));
    }
    Ok(())
}

fn experiment(kind: ExperimentCommand, file: Option<ExperimentConfig>, strict: bool) -> CmdResult {
    let (target, a) = match kind {
        ExperimentCommand::Histogram(a) => (ExperimentKind::Histogram, a),
        ExperimentCommand::Ratio(a) => (ExperimentKind::Ratio, a),
    };
    let mut cfg = match file {
        Some(mut c) => {
            c.experiment = target;
            c
        }
        None => match target {
            ExperimentKind::Histogram => ExperimentConfig::histogram(),
            ExperimentKind::Ratio => ExperimentConfig::ratio(NamedState::MaximallyMixed),
        },
    };
    if let Some(s) = a.state {
        cfg.state = s;
    }
    if !a.scheme.is_empty() {
        cfg.schemes = a.scheme.clone();
    }
    if let Some(v) = a.visibility {
        cfg.visibility = v;
    }
    if !a.n.is_empty() {
        cfg.n_total = a.n.clone();
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(k) = a.states {
        cfg.num_random_states = k;
    }
    if let Some(m) = a.model {
        cfg.model = m;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.purity.is_some() {
        cfg.state_purity = a.purity;
    }
    if let Some(b) = a.baseline {
        cfg.baseline = match b {
            BaselineArg::TrueState => Baseline::TrueState,
            BaselineArg::PooledFit => Baseline::PooledFit,
        };
    }
    if a.out.is_some() {
        cfg.output = a.out.clone();
    }

    let output = run(&cfg)?;
    match &cfg.output {
        Some(p) => {
            let sidecar = output.write_files(p)?;
            eprintln!("wrote {} and {}", p.display(), sidecar.display());
        }
        None => output.write_csv(std::io::stdout().lock())?,
    }
    report(&output);

    let stalled = output.records.iter().filter(|r| !r.converged).count();
    if strict && stalled > 0 {
        return Err(Failure::Numerical(format!(
            "{stalled} of {} reconstructions did not converge",
            output.records.len()
        )));
    }
    Ok(())
}

fn report(out: &ExperimentOutput) {
    for c in &out.summaries {
        eprintln!(
            "{:<16} {:<6} N={:<7} median {:.5} ± {:.5}  mean {:.5} ± {:.5}",
            c.state.id(),
            c.scheme.id(),
            c.n_total,
            c.stats.median,
            c.stats.median_se,
            c.stats.mean,
            c.stats.mean_se()
        );
    }
    for r in &out.ratios {
        eprintln!("ratio ssqst/mub N={:<7} {:.3} ± {:.3}", r.n_total, r.ratio, r.ratio_se);
    }
    if let Some(m) = out.mean_ratio {
        eprintln!("mean ratio {m:.3}");
    }
    for s in &out.slopes {
        eprintln!("slope {:<6} {:.3}", s.scheme.id(), s.slope);
    }
}
