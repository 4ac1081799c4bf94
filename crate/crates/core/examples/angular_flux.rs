//! Angular flux of a directed point source: bounded part from the 3D inversion plus
//! the singular uncollided and once-collided terms.

use boltzmann_green::inversion::{invert_full, singular_terms, QuadratureSpec, Route, TailModel};
use boltzmann_green::{Direction, PhaseFunction};

fn main() -> boltzmann_green::Result<()> {
    let phase = PhaseFunction::new(0.7, vec![1.0, 1.2, 0.4])?;
    let omega0 = Direction::new(0.4, 0.0)?;
    // Deliberately coarse so the example runs in seconds; raise for accuracy.
    let quad = QuadratureSpec { k_max: 6.0, n_k: 64, n_mu: 24, n_phi: 32, lmax: 20, tail_model: TailModel::None };

    let r = [0.3, -0.2, 0.9];
    let omega = Direction::new(0.9, 5.5)?;
    let flux = invert_full(r, &omega, &omega0, &phase, &quad, Route::Spectral)?;
    println!("multiply-collided flux {:.8e} (quadrature error {:.1e})", flux.smooth, flux.quadrature_error);
    for t in &flux.singular {
        println!("  {:?}: weight {:.6e} on {:?}", t.kind, t.weight, t.support);
    }

    // Off the source plane only the uncollided delta remains.
    let ts = singular_terms([0.0, 1.0, 0.0], &omega, &omega0, &phase)?;
    println!("terms at a point off the source plane: {}", ts.len());
    Ok(())
}
