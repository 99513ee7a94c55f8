//! MUB versus SSQST infidelity across N for one state, with the fitted
//! power-law slopes.
//!
//! `cargo run --release --example ratio_experiment -- bell-phi-plus`

use mubtomo::experiment::{run_ratio, ExperimentConfig};
use mubtomo::{NamedState, SchemeKind};

fn main() -> mubtomo::Result<()> {
    let state: NamedState = match std::env::args().nth(1) {
        Some(s) => s.parse()?,
        None => NamedState::MaximallyMixed,
    };
    let cfg = ExperimentConfig {
        seed: 2026,
        ..ExperimentConfig::ratio(state)
    };
    let out = run_ratio(&cfg)?;

    println!("{state}, V = {}, {} trials per point", cfg.visibility, cfg.trials);
    println!("{:>8} {:>12} {:>12} {:>14}", "N", "mub", "ssqst", "ratio");
    for r in &out.ratios {
        let m = out.summary(state, SchemeKind::Mub, r.n_total).expect("cell");
        let s = out.summary(state, SchemeKind::Ssqst, r.n_total).expect("cell");
        println!(
            "{:>8} {:>12.3e} {:>12.3e} {:>8.3} ± {:.3}",
            r.n_total, m.mean, s.mean, r.ratio, r.ratio_se
        );
    }
    println!("mean ratio {:.3}", out.mean_ratio.unwrap_or(f64::NAN));
    for s in &out.slopes {
        println!("slope {}: {:.3}", s.scheme, s.slope);
    }
    Ok(())
}
