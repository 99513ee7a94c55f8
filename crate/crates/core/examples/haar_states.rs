//! Draws Haar-random separable and maximally entangled two-qubit states and
//! shows their reduced-state purities.

use mubtomo::metrics::purity;
use mubtomo::states::{haar_random_max_entangled, haar_random_separable};
use mubtomo::RngStream;

fn main() {
    let mut rng = RngStream::new(42, 0);
    println!("{:<12} {:>8} {:>10} {:>10}", "class", "purity", "qubit A", "qubit B");
    for _ in 0..3 {
        let rho = haar_random_separable(&mut rng);
        row("separable", &rho);
    }
    for _ in 0..3 {
        let rho = haar_random_max_entangled(&mut rng);
        row("entangled", &rho);
    }
}

fn row(class: &str, rho: &mubtomo::DensityMatrix) {
    println!(
        "{class:<12} {:>8.4} {:>10.4} {:>10.4}",
        purity(rho),
        purity(&rho.reduced_qubit(0)),
        purity(&rho.reduced_qubit(1))
    );
}
