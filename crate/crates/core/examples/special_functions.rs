//! Tabulate the special functions at a point on the physical axis `z = i/k`.

use boltzmann_green::special::{
    assoc_legendre_p_real, assoc_legendre_q, bessel_j, chandrasekhar_g, chandrasekhar_rho, wigner_d,
};
use boltzmann_green::{Complex64, PhaseFunction};

fn main() -> boltzmann_green::Result<()> {
    let k = 0.8;
    let z = Complex64::new(0.0, 1.0 / k);
    let phase = PhaseFunction::new(0.9, vec![1.0, 1.5, 0.6])?;

    println!("z = i/{k}");
    let p = assoc_legendre_p_real(6, 1, 0.3)?;
    let q = assoc_legendre_q(6, 1, z)?;
    let g = chandrasekhar_g(6, 1, z, &phase)?;
    let rho = chandrasekhar_rho(6, 1, z, &phase)?;
    println!("{:>2} {:>14} {:>30} {:>30} {:>30}", "l", "P_l^1(0.3)", "Q_l^1(z)", "g_l^1(z)", "rho_l^1(z)");
    for l in 1..=6 {
        let i = l - 1;
        println!("{l:>2} {:>14.6e} {:>30.6e} {:>30.6e} {:>30.6e}", p[i], q[i], g[i], rho[i]);
    }

    let d = wigner_d(2, 0.7);
    println!("\nd^2(0.7), rows m' = -2..2:");
    for row in &d {
        println!("  {}", row.iter().map(|v| format!("{v:>10.6}")).collect::<Vec<_>>().join(" "));
    }

    println!("\nJ_m(5): {}", (0..5).map(|m| format!("{:.6}", bessel_j(m, 5.0))).collect::<Vec<_>>().join(", "));
    Ok(())
}
