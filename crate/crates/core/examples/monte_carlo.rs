//! Monte Carlo shell densities against the deterministic energy density.

use boltzmann_green::inversion::{shell_energy_density, QuadratureSpec};
use boltzmann_green::mc_oracle::{simulate, McConfig, Source};
use boltzmann_green::PhaseFunction;
use std::f64::consts::PI;

fn main() -> boltzmann_green::Result<()> {
    let phase = PhaseFunction::new(0.5, vec![1.0, 1.0])?;
    let histories = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200_000);
    let config = McConfig {
        histories,
        seed: 42,
        shells: vec![0.25, 0.5, 1.0, 2.0, 4.0],
        source: Source::IsotropicPoint,
        max_scatter_order: None,
    };
    let est = simulate(&phase, &config)?;
    let quad = QuadratureSpec::default();
    println!("{histories} histories");
    println!("{:>12} {:>14} {:>14} {:>8}", "shell", "monte carlo", "model", "sigmas");
    for i in 0..est.density.len() {
        let (a, b) = est.shell(i);
        let model = shell_energy_density(a, b, &phase, &quad)?.total;
        let (mc, se) = (4.0 * PI * est.density[i], 4.0 * PI * est.std_error[i]);
        println!("{:>12} {mc:>14.6e} {model:>14.6e} {:>8.2}", format!("{a}-{b}"), (mc - model) / se);
    }
    Ok(())
}
