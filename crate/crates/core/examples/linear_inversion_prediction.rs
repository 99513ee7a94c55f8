//! Analytic infidelity of linear inversion at the maximally mixed state,
//! compared with a direct Monte-Carlo estimate.

use mubtomo::estimate::{linear_inversion, predict_mixed_infidelity};
use mubtomo::states::maximally_mixed;
use mubtomo::{infidelity, mub_scheme, predict_mixed_ratio, sample_counts, ssqst_scheme, CountModel, RngStream};

fn main() -> mubtomo::Result<()> {
    let n = 18_000;
    let mub = mub_scheme(1.0)?;
    let ssqst = ssqst_scheme();
    println!("predicted SSQST/MUB ratio at N = {n}: {:.4}", predict_mixed_ratio(&ssqst, &mub, n)?);

    let truth = maximally_mixed(4)?;
    let trials = 2000;
    for scheme in [&mub, &ssqst] {
        let predicted = predict_mixed_infidelity(scheme, n)?;
        let mut total = 0.0;
        for t in 0..trials {
            let mut rng = RngStream::new(11, t);
            let counts = sample_counts(&truth, scheme, n, CountModel::MultinomialExact, &mut rng)?;
            let est = linear_inversion(&counts, scheme)?;
            total += infidelity(&truth, &est.physical)?;
        }
        println!(
            "{}: predicted {:.3e}, Monte Carlo {:.3e} over {trials} trials",
            scheme.kind,
            predicted,
            total / trials as f64
        );
    }
    Ok(())
}
