//! Azimuthal Bessel reduction against the full 3D quadrature for a source along `+z`.

use boltzmann_green::inversion::{invert_bessel_batch, invert_full_batch, FieldPoint, QuadratureSpec, Route, TailModel};
use boltzmann_green::{Direction, PhaseFunction};
use std::time::Instant;

fn main() -> boltzmann_green::Result<()> {
    let phase = PhaseFunction::new(0.8, vec![1.0, 1.4, 0.6])?;
    let quad = QuadratureSpec { k_max: 4.0, n_k: 48, n_mu: 24, n_phi: 64, lmax: 16, tail_model: TailModel::None };
    let points = [
        FieldPoint { r: [0.4, 0.1, 0.8], omega: Direction::new(0.5, 0.3)? },
        FieldPoint { r: [-1.0, 0.7, -0.2], omega: Direction::new(2.0, 3.9)? },
        FieldPoint { r: [0.0, -2.0, 1.0], omega: Direction::new(1.3, 4.7)? },
    ];
    let z = Direction::z();
    let t = Instant::now();
    let full = invert_full_batch(&points, &z, &phase, &quad, Route::Spectral)?;
    let t_full = t.elapsed();
    let t = Instant::now();
    let bessel = invert_bessel_batch(&points, &z, &phase, &quad)?;
    let t_bessel = t.elapsed();
    for (p, (a, b)) in points.iter().zip(full.iter().zip(&bessel)) {
        println!("r = {:?}: full {:.12e}  bessel {:.12e}  rel diff {:.1e}", p.r, a.smooth, b.smooth, (a.smooth - b.smooth).abs() / b.smooth.abs());
    }
    println!("time: full {t_full:.2?}, bessel {t_bessel:.2?}");
    Ok(())
}
