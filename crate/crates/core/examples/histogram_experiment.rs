//! Infidelity distribution of SSQST reconstructions over random separable
//! and maximally entangled states, printed as a text histogram.
//!
//! `cargo run --release --example histogram_experiment -- 300`

use mubtomo::experiment::{run_histogram, ExperimentConfig};
use mubtomo::states::NamedState;

fn main() -> mubtomo::Result<()> {
    let states = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = ExperimentConfig {
        num_random_states: states,
        seed: 2026,
        ..ExperimentConfig::histogram()
    };
    let out = run_histogram(&cfg)?;

    let edges: Vec<f64> = (0..=12).map(|k| k as f64 * 0.0025).collect();
    for class in [NamedState::HaarSeparable, NamedState::HaarEntangled] {
        let s = out.summary(class, cfg.schemes[0], cfg.n_total[0]).expect("cell");
        println!("{class}: median {:.4} ± {:.4}, mean {:.4}", s.median, s.median_se, s.mean);
        let xs: Vec<f64> = out.records.iter().filter(|r| r.state == class).map(|r| r.infidelity).collect();
        for w in edges.windows(2) {
            let n = xs.iter().filter(|&&x| x >= w[0] && x < w[1]).count();
            println!("  {:.4}-{:.4} {}", w[0], w[1], "#".repeat(n * 200 / xs.len().max(1)));
        }
    }
    Ok(())
}
