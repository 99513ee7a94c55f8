//! Simulates counts for |Φ+⟩ under both schemes and prints them per basis.

use mubtomo::simulate::noiseless_counts;
use mubtomo::states::{bell_state, density_from_pure, BellKind};
use mubtomo::{mub_scheme, sample_counts, ssqst_scheme, CountModel, RngStream};

fn main() -> mubtomo::Result<()> {
    let rho = density_from_pure(&bell_state(BellKind::PhiPlus));
    let n = 18_000;

    for scheme in [mub_scheme(0.93)?, ssqst_scheme()] {
        let mut rng = RngStream::new(7, 0);
        let sampled = sample_counts(&rho, &scheme, n, CountModel::MultinomialExact, &mut rng)?;
        let expected = noiseless_counts(&rho, &scheme, n)?;
        println!("{} scheme, N = {n}", scheme.kind);
        for ((basis, got), want) in scheme.bases.iter().zip(&sampled.counts).zip(&expected.counts) {
            let cells: Vec<String> = basis
                .labels()
                .iter()
                .zip(got.iter().zip(want))
                .map(|(l, (g, w))| format!("{l}={g} ({w})"))
                .collect();
            println!("  {}", cells.join("  "));
        }
        println!();
    }

    let mut rng = RngStream::new(7, 1);
    let poisson = sample_counts(&rho, &mub_scheme(0.93)?, n, CountModel::PoissonPerBasis, &mut rng)?;
    println!("poisson model: per-basis totals {:?}", poisson.basis_totals());
    Ok(())
}
