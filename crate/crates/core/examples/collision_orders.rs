//! Split Monte Carlo tallies by scattering order and compare the first two with the
//! analytic shell integrals.

use boltzmann_green::inversion::{shell_once_collided_density, shell_uncollided_density};
use boltzmann_green::mc_oracle::{decompose_collision_orders, simulate, McConfig, Source};
use boltzmann_green::{Direction, PhaseFunction};

fn main() -> boltzmann_green::Result<()> {
    let phase = PhaseFunction::new(0.7, vec![1.0, 1.2, 0.5])?;
    let config = McConfig {
        histories: 300_000,
        seed: 3,
        shells: vec![0.2, 0.5, 1.0, 2.0],
        source: Source::Beam(Direction::new(1.1, 0.4)?),
        max_scatter_order: None,
    };
    let est = simulate(&phase, &config)?;
    let orders = decompose_collision_orders(&est);
    for i in 0..est.density.len() {
        let (a, b) = est.shell(i);
        println!("shell {a}-{b}");
        println!("  uncollided {:.5e} +- {:.1e}  exact {:.5e}", orders.uncollided[i], orders.uncollided_std_error[i], shell_uncollided_density(a, b)?);
        println!("  once       {:.5e} +- {:.1e}  exact {:.5e}", orders.once[i], orders.once_std_error[i], shell_once_collided_density(a, b, &phase)?);
        println!("  multiple   {:.5e} +- {:.1e}", orders.multiple[i], orders.multiple_std_error[i]);
    }
    Ok(())
}
