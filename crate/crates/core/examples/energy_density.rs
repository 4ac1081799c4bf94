//! Energy density around an isotropic point source for a few phase functions.

use boltzmann_green::inversion::{energy_density, isotropic_reference_density, QuadratureSpec};
use boltzmann_green::PhaseFunction;

fn main() -> boltzmann_green::Result<()> {
    let quad = QuadratureSpec::default();
    let phases = [
        ("isotropic c=0.9", PhaseFunction::isotropic(0.9)?),
        ("forward  c=0.9", PhaseFunction::new(0.9, vec![1.0, 2.0, 1.0])?),
        ("backward c=0.9", PhaseFunction::new(0.9, vec![1.0, -1.2])?),
    ];
    let radii = [0.25, 0.5, 1.0, 2.0, 4.0];
    print!("{:>16}", "r");
    for r in radii {
        print!("{r:>14}");
    }
    println!();
    for (name, p) in &phases {
        print!("{name:>16}");
        for r in radii {
            print!("{:>14.6e}", energy_density(r, p, &quad)?.total);
        }
        println!();
    }
    let r = 1.0;
    let u = energy_density(r, &phases[0].1, &quad)?;
    println!(
        "\nr = {r}: uncollided {:.12e} + scattered {:.12e} = {:.12e} (reference {:.12e}, error {:.1e})",
        u.uncollided,
        u.scattered,
        u.total,
        isotropic_reference_density(r, 0.9)?,
        u.error
    );
    Ok(())
}
