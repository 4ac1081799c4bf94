//! Chandrasekhar polynomials of the first (`g`) and second (`rho`) kind.
//!
//! Both solve `(l+1-m) f_{l+1} = z h_l f_l - (l+m) f_{l-1}` with
//! `g_m = (2m-1)!!, g_{m+1} = z h_m g_m` and `rho_m = 0, rho_{m+1} = z/(2m-1)!!`.

use super::legendre::{double_factorial_odd, negative_m_factor};
use super::phase::PhaseFunction;
use crate::error::{Error, Result};
use crate::real::Real;
use num_complex::{Complex, Complex64};

pub(crate) fn chandrasekhar_generic<R: Real>(
    lmax: usize,
    m: usize,
    z: Complex<R>,
    phase: &PhaseFunction,
    second_kind: bool,
) -> Vec<Complex<R>> {
    let zero = Complex::new(R::zero(), R::zero());
    let df = R::from_f64(double_factorial_odd(m));
    // c and beta_l enter separately so the product is exact in extended precision.
    let h = |l: usize| R::from_usize(2 * l + 1) - R::from_f64(phase.c()) * R::from_f64(phase.beta_l(l));
    let mut out = Vec::with_capacity(lmax + 2 - m);
    if second_kind {
        out.push(zero);
        out.push(z / df);
    } else {
        out.push(Complex::new(df, R::zero()));
        out.push(z * h(m) * df);
    }
    for l in (m + 1)..lmax {
        let i = l - m;
        let next = (out[i] * z * h(l) - out[i - 1] * R::from_usize(l + m)) / R::from_usize(l + 1 - m);
        out.push(next);
    }
    out.truncate(lmax + 1 - m);
    out
}

fn checked(v: Vec<Complex64>, m: usize) -> Result<Vec<Complex64>> {
    if let Some(i) = v.iter().position(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::Range { l: m + i });
    }
    Ok(v)
}

/// `g_m^m(z) ..= g_lmax^m(z)`.
pub fn chandrasekhar_g(lmax: usize, m: usize, z: Complex64, phase: &PhaseFunction) -> Result<Vec<Complex64>> {
    validate(lmax, m, z)?;
    checked(chandrasekhar_generic(lmax, m, z, phase, false), m)
}

/// `rho_m^m(z) ..= rho_lmax^m(z)`.
pub fn chandrasekhar_rho(lmax: usize, m: usize, z: Complex64, phase: &PhaseFunction) -> Result<Vec<Complex64>> {
    validate(lmax, m, z)?;
    checked(chandrasekhar_generic(lmax, m, z, phase, true), m)
}

fn validate(lmax: usize, m: usize, z: Complex64) -> Result<()> {
    if lmax < m {
        return Err(Error::Domain(format!("l_max = {lmax} below m = {m}")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain("non-finite z".into()));
    }
    Ok(())
}

/// Which family a negative-order conversion applies to; all share one factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolynomialKind {
    G,
    Rho,
    PReal,
    PComplex,
    Q,
}

/// Value at order `-m` from the value at order `m > 0`: multiply by `(-1)^m (l-m)!/(l+m)!`.
pub fn negative_m_convert<T: std::ops::Mul<f64, Output = T>>(kind: PolynomialKind, l: usize, m: usize, value: T) -> Result<T> {
    if m > l {
        return Err(Error::Domain(format!("{kind:?}: m = {m} exceeds l = {l}")));
    }
    Ok(value * negative_m_factor(l, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::legendre::legendre_p_real_nonneg;

    fn phase(c: f64, beta: &[f64]) -> PhaseFunction {
        PhaseFunction::new(c, beta.to_vec()).unwrap()
    }

    #[test]
    fn first_steps() {
        let i = Complex64::i();
        let p = phase(0.9, &[1.0]);
        let g = chandrasekhar_g(2, 0, i, &p).unwrap();
        assert_eq!(g[0], Complex64::new(1.0, 0.0));
        assert!((g[1] - 0.1 * i).norm() < 1e-16);
        assert!((g[2] - Complex64::new(-0.65, 0.0)).norm() < 1e-15);
        let r = chandrasekhar_rho(2, 0, i, &p).unwrap();
        assert_eq!(r[0], Complex64::new(0.0, 0.0));
        assert_eq!(r[1], i);
        assert!((r[2] - Complex64::new(-1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn negative_order_factors_are_exact() {
        let i = Complex64::i();
        let p = phase(0.6, &[1.0, 1.2]);
        let g = chandrasekhar_g(1, 1, i, &p).unwrap();
        let gm = negative_m_convert(PolynomialKind::G, 1, 1, g[0]).unwrap();
        assert_eq!(gm, g[0] * -0.5);
        let r = chandrasekhar_rho(2, 1, i, &p).unwrap();
        assert_eq!(negative_m_convert(PolynomialKind::Rho, 2, 1, r[1]).unwrap(), r[1] * (-1.0 / 6.0));
        let p11 = legendre_p_real_nonneg(1, 1, 0.0)[0];
        assert_eq!(negative_m_convert(PolynomialKind::PReal, 1, 1, p11).unwrap(), 0.5);
        assert_eq!(negative_m_factor(3, 2), 1.0 / 120.0);
    }

    #[test]
    fn without_scattering_g_is_legendre() {
        // c -> 0 turns g_l^m into P_l^m(z) with the continued convention at z real > 1.
        let p = phase(1e-300, &[1.0]);
        let z = Complex64::new(1.7, 0.0);
        let g = chandrasekhar_g(8, 0, z, &p).unwrap();
        let leg = crate::special::assoc_legendre_p_complex(8, 0, z).unwrap();
        for (a, b) in g.iter().zip(&leg) {
            assert!((a - b).norm() < 1e-13 * b.norm());
        }
    }

    #[test]
    fn overflow_is_reported_with_degree() {
        let p = phase(0.5, &[1.0]);
        let e = chandrasekhar_g(400, 0, Complex64::new(0.0, 1e4), &p).unwrap_err();
        assert!(matches!(e, Error::Range { .. }));
    }
}
