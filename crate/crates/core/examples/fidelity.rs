//! Uhlmann fidelity between a few named states and their noisy versions.

use mubtomo::states::{bell_state, density_from_pure, ket, maximally_mixed, BellKind};
use mubtomo::{fidelity, purity};

fn main() -> mubtomo::Result<()> {
    let phi = density_from_pure(&bell_state(BellKind::PhiPlus));
    let psi = density_from_pure(&bell_state(BellKind::PsiMinus));
    let hh = density_from_pure(&ket("HH")?);
    let mixed = maximally_mixed(4)?;

    println!("F(phi+, phi+)  = {:.6}", fidelity(&phi, &phi)?);
    println!("F(phi+, psi-)  = {:.6}", fidelity(&phi, &psi)?);
    println!("F(phi+, HH)    = {:.6}", fidelity(&phi, &hh)?);
    println!("F(phi+, I/4)   = {:.6}", fidelity(&phi, &mixed)?);

    println!("\n{:>6} {:>8} {:>10}", "p", "purity", "F(phi+)");
    for p in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let noisy = phi.depolarize(p);
        println!("{p:>6.2} {:>8.4} {:>10.6}", purity(&noisy), fidelity(&phi, &noisy)?);
    }
    Ok(())
}
