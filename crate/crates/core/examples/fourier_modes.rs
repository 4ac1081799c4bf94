//! Fourier-space moments at one wave vector from both solvers.

use boltzmann_green::fourier_kernel::{psi_bar_matrix_route, FourierPoint};
use boltzmann_green::spectral_recurrence::{dispersion_lambda, ModeTable};
use boltzmann_green::{Direction, PhaseFunction};

fn main() -> boltzmann_green::Result<()> {
    let phase = PhaseFunction::new(0.8, vec![1.0, 1.5, 0.5])?;
    let kp = FourierPoint::new(1.0, Direction::new(0.8, 1.1)?)?;
    let omega0 = Direction::new(0.3, 2.0)?;
    let table = ModeTable::new(&kp, &omega0, &phase, 8)?;

    for m in -2i32..=2 {
        let dense = psi_bar_matrix_route(m, &kp, &omega0, &phase)?;
        println!("m = {m:+}  Lambda = {:.6e}", dispersion_lambda(m, kp.z(), &phase)?);
        for (i, d) in dense.iter().enumerate() {
            let l = i + m.unsigned_abs() as usize;
            let ladder = table.psibar(l, m);
            println!("  l = {l}  ladder {ladder:.10e}  dense {d:.10e}  |diff| {:.1e}", (ladder - d).norm());
        }
    }

    let w = Direction::new(1.2, 0.4)?;
    println!("\nscattered flux at w: {:.10e}", table.flux(&w));
    println!("truncation estimate |psibar_lmax| / |psibar_L|: {:.1e}", table.tail_estimate());
    Ok(())
}
