//! Analytic identities that the special functions and the ladder must satisfy, packaged
//! as checks with a normalized error so they can be run outside the test harness.

use crate::error::Result;
use crate::fourier_kernel::FourierPoint;
use crate::real::{cfrom, cto, DoubleDouble, Real};
use crate::special::chandrasekhar::chandrasekhar_generic;
use crate::special::{bessel_j, wigner_d, Direction, PhaseFunction};
use crate::spectral_recurrence::{
    factorial, factorial_ratio, lambda_forms, lambda_mismatch, psi_bar_ladder, source_moment, Tables,
};
use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One identity: the worst normalized residual over its sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &str, error: f64, tolerance: f64) -> Self {
        Check { name: name.to_string(), error, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

const WRONSKIAN_BETA: [f64; 5] = [1.0, 1.7, 1.1, 0.6, 0.2];
const LONG_BETA: [f64; 10] = [1.0, 1.8, 1.5, 1.2, 0.9, 0.6, 0.4, 0.25, 0.12, 0.05];

fn imag_dd(k: f64) -> Complex<DoubleDouble> {
    Complex::new(DoubleDouble::zero(), DoubleDouble::one() / DoubleDouble::from_f64(k))
}

/// `(l+m)(g_{l-1} rho_l - g_l rho_{l-1}) = z (l+m)!/((l-m)!(2m)!)` for `l <= 20`.
///
/// Both products grow geometrically in `l` while their difference does not, so the
/// residual is taken relative to the right side plus `1e-18` of the product size;
/// evaluation is in double-double.
pub fn wronskian() -> Check {
    let p = PhaseFunction::new(0.75, WRONSKIAN_BETA.to_vec()).expect("valid phase");
    let mut worst: f64 = 0.0;
    for &k in &[0.5, 1.0, 5.0] {
        let z = imag_dd(k);
        for m in 0..=6usize {
            let g = chandrasekhar_generic(20, m, z, &p, false);
            let r = chandrasekhar_generic(20, m, z, &p, true);
            for l in (m + 1)..=20 {
                let i = l - m;
                let (a, b) = (g[i - 1] * r[i], g[i] * r[i - 1]);
                let lhs = cto((a - b) * DoubleDouble::from_usize(l + m));
                let rhs = cto(z) * (factorial::<f64>(l + m) / factorial::<f64>(l - m) / factorial::<f64>(2 * m));
                let scale = (l + m) as f64 * (cto(a).norm() + cto(b).norm());
                worst = worst.max((lhs - rhs).norm() / (rhs.norm() + 1e-18 * scale));
            }
        }
    }
    Check::new("wronskian", worst, 1e-12)
}

/// Residual and scale of the summed identity
/// `w_{l0}(l0+1-m)(q_{l0} r_{l0+1} - q_{l0+1} r_{l0}) = sum (mu b_l - z a_l) w_l q_l r_l + boundary`
/// for sequences `q`, `r` obeying recurrences with coefficients `a_l` and `b_l`.
#[allow(clippy::too_many_arguments)]
fn summed_identity_residual<R: Real>(
    m: i32,
    l0: usize,
    z: Complex<R>,
    mu: Complex<R>,
    a: &dyn Fn(usize) -> f64,
    b: &dyn Fn(usize) -> f64,
    q: &dyn Fn(usize) -> Complex<R>,
    r: &dyn Fn(usize) -> Complex<R>,
) -> (Complex64, f64) {
    let am = m.unsigned_abs() as usize;
    let w = |l: usize| factorial_ratio::<R>(l, m);
    let lhs = (q(l0) * r(l0 + 1) - q(l0 + 1) * r(l0)) * w(l0) * R::from_f64(l0 as f64 + 1.0 - m as f64);
    let mut scale = cto(q(l0) * r(l0 + 1)).norm() + cto(q(l0 + 1) * r(l0)).norm();
    let mut rhs = Complex::new(R::zero(), R::zero());
    for l in (am + 1)..=l0 {
        let term = (mu * R::from_f64(b(l)) - z * R::from_f64(a(l))) * w(l) * q(l) * r(l);
        scale = scale.max(cto(term).norm());
        rhs = rhs + term;
    }
    let bw = factorial_ratio::<R>(am, m) * R::from_f64(am as f64 + 1.0 - m as f64);
    rhs = rhs + (q(am) * r(am + 1) - q(am + 1) * r(am)) * bw;
    (cto(lhs - rhs), scale.max(cto(lhs).norm()))
}

fn christoffel_darboux_cases(mut visit: impl FnMut(&PhaseFunction, usize, f64, i32)) {
    for big_l in 1..=9usize {
        let p = PhaseFunction::new(0.8, LONG_BETA[..=big_l].to_vec()).expect("valid phase");
        for &k in &[0.5, 1.0, 5.0] {
            for m in -(big_l as i32)..=(big_l as i32) {
                visit(&p, big_l, k, m);
            }
        }
    }
}

/// The summed identity with `q = g`, `r = rho` and `a = b = h`, at every cut-off below
/// the phase-function degree.
pub fn christoffel_darboux_polynomials() -> Check {
    let mut worst: f64 = 0.0;
    christoffel_darboux_cases(|p, big_l, k, m| {
        let am = m.unsigned_abs() as usize;
        let z = imag_dd(k);
        let t = Tables::<DoubleDouble>::new(m, z, p, big_l + 2, big_l + 2, 1e-32);
        let h = |l: usize| p.h(l);
        for l0 in (am + 1)..=big_l {
            let (res, scale) = summed_identity_residual(m, l0, z, z, &h, &h, &|l| t.g(l), &|l| t.rho(l));
            worst = worst.max(res.norm() / scale);
        }
    });
    Check::new("christoffel-darboux (g, rho)", worst, 1e-11)
}

/// The mixed summed identity with `q = g/g_m`, `r = Q P_m`, `a = h`, `b = 2l+1` at the
/// phase-function degree, evaluated in plain double precision.
pub fn christoffel_darboux_mixed() -> Check {
    let mut worst: f64 = 0.0;
    christoffel_darboux_cases(|p, big_l, k, m| {
        let am = m.unsigned_abs() as usize;
        if am >= big_l {
            return;
        }
        let z = Complex64::new(0.0, 1.0 / k);
        let t = Tables::<f64>::new(m, z, p, big_l + 1, big_l + 1, 1e-17);
        let h = |l: usize| p.h(l);
        let odd = |l: usize| (2 * l + 1) as f64;
        let (res, scale) =
            summed_identity_residual(m, big_l, z, z, &h, &odd, &|l| t.g(l) / t.g(am), &|l| t.q(l) * t.p(am));
        worst = worst.max(res.norm() / scale);
    });
    Check::new("christoffel-darboux (g, Q)", worst, 1e-11)
}

/// Sum and Wronskian forms of the dispersion function, plus its isotropic closed form
/// `1 - (c/k) atan k`.
pub fn lambda_dual_forms() -> Check {
    let mut worst: f64 = 0.0;
    for big_l in 0..=9usize {
        let p = PhaseFunction::new(0.85, LONG_BETA[..=big_l].to_vec()).expect("valid phase");
        for &k in &[0.2, 1.0, 7.0] {
            let z = cfrom::<DoubleDouble>(Complex64::new(0.0, 1.0 / k));
            for m in -(big_l as i32)..=(big_l as i32) {
                let t = Tables::<DoubleDouble>::new(m, z, &p, big_l + 1, big_l + 1, 1e-32);
                let (a, b) = lambda_forms(m, z, &t, &p);
                worst = worst.max(lambda_mismatch(a, b));
            }
        }
    }
    for &(c, k) in &[(0.9, 1.0), (0.3, 0.01), (0.5, 50.0)] {
        let p = PhaseFunction::isotropic(c).expect("valid phase");
        let z = cfrom::<DoubleDouble>(Complex64::new(0.0, 1.0 / k));
        let t = Tables::<DoubleDouble>::new(0, z, &p, 1, 1, 1e-32);
        let (_, b) = lambda_forms(0, z, &t, &p);
        let want = 1.0 - c / k * k.atan();
        worst = worst.max((cto(b) - want).norm() / want.abs());
    }
    Check::new("dispersion function dual forms", worst, 1e-12)
}

/// `z h_l psibar_l - (l+1-m) psibar_{l+1} - (l+m) psibar_{l-1} - z S_l` along the ladder.
pub fn recurrence_residuals() -> Result<Check> {
    let cases: [(f64, &[f64], f64, (f64, f64), (f64, f64)); 3] = [
        (0.9, &[1.0, 1.0], 1.0, (0.0, 0.0), (0.0, 0.0)),
        (0.7, &[1.0, 1.5, 0.9, 0.4], 0.4, (1.0, 0.4), (0.6, 2.0)),
        (0.5, &[1.0, 2.1, 1.4, 0.6, 0.2], 3.0, (2.2, 5.0), (1.3, 0.7)),
    ];
    let mut worst: f64 = 0.0;
    for (c, beta, k, kh, w0) in cases {
        let p = PhaseFunction::new(c, beta.to_vec())?;
        let kp = FourierPoint::new(k, Direction::new(kh.0, kh.1)?)?;
        let w0 = Direction::new(w0.0, w0.1)?;
        let z = kp.z();
        let big_l = p.degree() as i32;
        let lmax = 12usize;
        for m in -big_l..=big_l {
            let am = m.unsigned_abs() as usize;
            let v = psi_bar_ladder(lmax, m, &kp, &w0, &p)?;
            let at = |l: usize| if l < am { Complex64::zero() } else { v[l - am] };
            let below = |l: usize| if l == 0 { Complex64::zero() } else { at(l - 1) };
            for l in am..lmax {
                let s = if l <= p.degree() { source_moment(l, m, &kp, &w0, &p)? } else { Complex64::zero() };
                let terms = [
                    z * p.h(l) * at(l),
                    (l as f64 + 1.0 - m as f64) * at(l + 1),
                    (l as f64 + m as f64) * below(l),
                    z * s,
                ];
                let r = terms[0] - terms[1] - terms[2] - terms[3];
                let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
                if scale > 0.0 {
                    worst = worst.max(r.norm() / scale);
                }
            }
        }
    }
    Ok(Check::new("three-term recurrence residual", worst, 1e-12))
}

/// `sum_m' d_{m'm} d_{m'n} = delta_{mn}` up to degree 90.
pub fn wigner_orthonormality() -> Check {
    let mut worst: f64 = 0.0;
    for &b in &[0.1, 1.0, 2.5] {
        for l in [3usize, 12, 40, 90] {
            let d = wigner_d(l, b);
            let n = 2 * l + 1;
            for m in 0..n {
                for j in m..n {
                    let s: f64 = (0..n).map(|mp| d[mp][m] * d[mp][j]).sum();
                    let want = if m == j { 1.0 } else { 0.0 };
                    worst = worst.max((s - want).abs());
                }
            }
        }
    }
    Check::new("wigner orthonormality", worst, 1e-11)
}

/// `int_0^{2pi} e^{i x cos t - i m t} dt = 2 pi i^m J_m(x)` by the periodic trapezoid rule.
pub fn hansen_bessel() -> Check {
    let n = 256;
    let mut worst: f64 = 0.0;
    for m in 0..=8usize {
        for i in 0..=40 {
            let x = 0.5 * i as f64;
            let mut s = Complex64::zero();
            for j in 0..n {
                let t = 2.0 * PI * j as f64 / n as f64;
                s += Complex64::from_polar(1.0, x * t.cos() - m as f64 * t);
            }
            let integral = s * (2.0 * PI / n as f64);
            let want = Complex64::i().powi(m as i32) * (2.0 * PI * bessel_j(m, x));
            worst = worst.max((integral - want).norm() / (2.0 * PI));
        }
    }
    Check::new("hansen-bessel", worst, 1e-12)
}

/// Every identity above.
pub fn identity_suite() -> Result<Vec<Check>> {
    Ok(vec![
        wronskian(),
        christoffel_darboux_polynomials(),
        christoffel_darboux_mixed(),
        lambda_dual_forms(),
        recurrence_residuals()?,
        wigner_orthonormality(),
        hansen_bessel(),
    ])
}
