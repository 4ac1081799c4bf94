use super::geometry::Direction;
use super::legendre::{legendre_p_real_nonneg, negative_m_factor};
use num_complex::Complex64;
use std::f64::consts::PI;

/// `N_lm = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!)` for any sign of `m`.
pub fn harmonic_norm(l: usize, m: i32) -> f64 {
    let am = m.unsigned_abs() as usize;
    let ratio: f64 = ((l - am + 1)..=(l + am)).map(|i| 1.0 / i as f64).product();
    let r = if m >= 0 { ratio } else { 1.0 / ratio };
    ((2 * l + 1) as f64 / (4.0 * PI) * r).sqrt()
}

/// `Y_lm(omega) = N_lm P_l^m(cos theta) e^{im phi}` with the Condon-Shortley phase in `P`.
pub fn spherical_harmonic(l: usize, m: i32, omega: &Direction) -> Complex64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let mut p = legendre_p_real_nonneg(l, am, omega.mu())[l - am];
    if m < 0 {
        p *= negative_m_factor(l, am);
    }
    Complex64::from_polar(harmonic_norm(l, m) * p, m as f64 * omega.phi())
}

/// `Y_lm` for all `l <= lmax`, `|m| <= min(l, mmax)`, stored at `[l][m + l]`.
pub fn spherical_harmonics_table(lmax: usize, mmax: usize, omega: &Direction) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = (0..=lmax).map(|l| vec![Complex64::new(0.0, 0.0); 2 * l + 1]).collect();
    let mu = omega.mu();
    for am in 0..=mmax.min(lmax) {
        let p = legendre_p_real_nonneg(lmax, am, mu);
        for l in am..=lmax {
            let pos = Complex64::from_polar(harmonic_norm(l, am as i32) * p[l - am], am as f64 * omega.phi());
            out[l][l + am] = pos;
            if am > 0 {
                // Y_{l,-m} = (-1)^m conj(Y_lm)
                let s = if am % 2 == 0 { 1.0 } else { -1.0 };
                out[l][l - am] = s * pos.conj();
            }
        }
    }
    out
}
