//! Maximum-likelihood reconstruction of a Bell state from simulated MUB
//! counts, showing the likelihood climbing and the final fidelity.

use mubtomo::states::{bell_state, density_from_pure, BellKind};
use mubtomo::{fidelity, mle_reconstruct, mub_scheme, purity, sample_counts, CountModel, MleOptions, RngStream};

fn main() -> mubtomo::Result<()> {
    let truth = density_from_pure(&bell_state(BellKind::PhiPlus));
    let scheme = mub_scheme(0.93)?;
    let counts = sample_counts(&truth, &scheme, 18_000, CountModel::MultinomialExact, &mut RngStream::new(1, 0))?;

    let opts = MleOptions {
        record_trace: true,
        ..MleOptions::default()
    };
    let fit = mle_reconstruct(&counts, &scheme, &opts)?;

    for (i, ll) in fit.trace.iter().enumerate().take(6) {
        println!("iteration {i:>3}: log-likelihood {ll:.4}");
    }
    println!("...");
    println!(
        "converged = {} after {} iterations, log-likelihood {:.4}",
        fit.converged, fit.iterations, fit.log_likelihood
    );
    println!("purity {:.4}, fidelity {:.6}", purity(&fit.rho_hat), fidelity(&truth, &fit.rho_hat)?);
    println!("{:?}", fit.rho_hat.matrix());
    Ok(())
}
