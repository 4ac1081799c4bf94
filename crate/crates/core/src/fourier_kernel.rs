//! Matrix route in Fourier space.
//!
//! For each azimuthal order `m` in the frame aligned with `k`, the moments
//! `psibar_l^m`, `|m| <= l <= L`, solve the dense system
//! `[I - c L^m W^m] psibar = c L^m W^m (z/(z - k.w0)) P^m(w0)` with
//! `L^m_jl(z) = (z/2) int P_j^m P_l^m / (z - mu) dmu` and `W^m = diag(omega_l^m)`.

use crate::error::{Error, Result};
use crate::quadrature::pole_graded_rule;
use crate::special::legendre::{legendre_p_complex_generic, legendre_p_real_nonneg, legendre_q_generic};
use crate::special::{negative_m_factor, phase_function_eval, Direction, PhaseFunction, RotatedFrame};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Wave vector `k khat` with spectral argument `z = i/k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierPoint {
    k: f64,
    khat: Direction,
}

impl FourierPoint {
    pub fn new(k: f64, khat: Direction) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("wavenumber must be positive and finite, got {k}")));
        }
        Ok(FourierPoint { k, khat })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn khat(&self) -> Direction {
        self.khat
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(0.0, 1.0 / self.k)
    }

    pub fn frame(&self) -> RotatedFrame {
        RotatedFrame::new(&self.khat)
    }
}

/// `P_l^m(z)` and `Q_l^m(z)` for `|m| <= l <= lmax`, negative orders included through
/// the symmetry factor.
#[derive(Clone, Debug)]
pub(crate) struct LegendrePair {
    pub m: i32,
    pub p: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

impl LegendrePair {
    pub fn new(lmax: usize, m: i32, z: Complex64) -> Self {
        let am = m.unsigned_abs() as usize;
        let mut p = legendre_p_complex_generic(lmax, am, z);
        let mut q = legendre_q_generic(lmax, am, z, 1e-17);
        if m < 0 {
            for (i, (pv, qv)) in p.iter_mut().zip(q.iter_mut()).enumerate() {
                let f = negative_m_factor(am + i, am);
                *pv *= f;
                *qv *= f;
            }
        }
        LegendrePair { m, p, q }
    }

    fn am(&self) -> usize {
        self.m.unsigned_abs() as usize
    }

    pub fn p(&self, l: usize) -> Complex64 {
        self.p[l - self.am()]
    }

    pub fn q(&self, l: usize) -> Complex64 {
        self.q[l - self.am()]
    }

    /// `L_jl = z P_min(j,l) Q_max(j,l)`, valid for all `j, l >= |m|`.
    pub fn l_entry(&self, z: Complex64, j: usize, l: usize) -> Complex64 {
        z * self.p(j.min(l)) * self.q(j.max(l))
    }
}

fn check_order(m: i32, phase: &PhaseFunction) -> Result<usize> {
    let am = m.unsigned_abs() as usize;
    if am > phase.degree() {
        return Err(Error::Domain(format!("|m| = {am} exceeds the phase-function degree {}", phase.degree())));
    }
    Ok(am)
}

pub(crate) fn l_matrix_product(pair: &LegendrePair, z: Complex64, big_l: usize) -> DMatrix<Complex64> {
    let am = pair.am();
    let n = big_l + 1 - am;
    DMatrix::from_fn(n, n, |a, b| pair.l_entry(z, am + a, am + b))
}

/// `L^m(z)` by direct quadrature of its defining integral.
pub fn build_l_matrix_quadrature(m: i32, z: Complex64, big_l: usize) -> DMatrix<Complex64> {
    let am = m.unsigned_abs() as usize;
    let n = big_l + 1 - am;
    let (x, w) = pole_graded_rule(z);
    let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (xi, wi) in x.iter().zip(&w) {
        let mut p = legendre_p_real_nonneg(big_l, am, *xi);
        if m < 0 {
            for (i, v) in p.iter_mut().enumerate() {
                *v *= negative_m_factor(am + i, am);
            }
        }
        let f = 0.5 * wi * z / (z - xi);
        for a in 0..n {
            for b in a..n {
                out[(a, b)] += f * p[a] * p[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            out[(a, b)] = out[(b, a)];
        }
    }
    out
}

/// `L^m(z)` by the Neumann-type product, cross-checked against quadrature.
pub fn build_l_matrix(m: i32, z: Complex64, phase: &PhaseFunction) -> Result<DMatrix<Complex64>> {
    check_order(m, phase)?;
    crate::special::legendre::check_cut(z)?;
    let big_l = phase.degree();
    let pair = LegendrePair::new(big_l, m, z);
    let prod = l_matrix_product(&pair, z, big_l);
    let quad = build_l_matrix_quadrature(m, z, big_l);
    let scale = prod.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = (&prod - &quad).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if diff > 1e-8 * scale {
        return Err(Error::NumericalConsistency(format!(
            "L^{m} closed form and quadrature differ by {diff:e} (scale {scale:e}) at z = {z}"
        )));
    }
    Ok(prod)
}

/// `W^m = diag(omega_l^m)` for `|m| <= l <= L`.
pub fn build_w_diagonal(m: i32, phase: &PhaseFunction) -> Vec<f64> {
    let am = m.unsigned_abs() as usize;
    (am..=phase.degree()).map(|l| phase.omega(l, m)).collect()
}

/// Entries `P_j^m(khat.w) e^{im phi0} e^{-im phi_rot(w)}` for `|m| <= j <= L`.
pub fn build_p_vector(m: i32, kpoint: &FourierPoint, omega: &Direction, omega0_phi: f64, big_l: usize) -> Vec<Complex64> {
    let local = kpoint.frame().to_local(omega);
    p_vector_local(m, &local, omega0_phi, big_l)
}

pub(crate) fn p_vector_local(m: i32, local: &Direction, omega0_phi: f64, big_l: usize) -> Vec<Complex64> {
    let am = m.unsigned_abs() as usize;
    let mut p = legendre_p_real_nonneg(big_l, am, local.mu());
    if m < 0 {
        for (i, v) in p.iter_mut().enumerate() {
            *v *= negative_m_factor(am + i, am);
        }
    }
    let ph = Complex64::from_polar(1.0, m as f64 * (omega0_phi - local.phi()));
    p.into_iter().map(|v| v * ph).collect()
}

/// Dense LU solve with a 1-norm condition estimate; fails above `1e12`.
fn solve_checked(a: DMatrix<Complex64>, b: &DVector<Complex64>, k: f64, m: i32) -> Result<DVector<Complex64>> {
    let norm1 = |mat: &DMatrix<Complex64>| {
        (0..mat.ncols()).map(|j| mat.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    };
    let an = norm1(&a);
    let lu = a.lu();
    let inv = lu.try_inverse().ok_or(Error::DispersionSingularity { k, m, condition: f64::INFINITY })?;
    let condition = an * norm1(&inv);
    if !(condition < 1e12) {
        return Err(Error::DispersionSingularity { k, m, condition });
    }
    lu.solve(b).ok_or(Error::DispersionSingularity { k, m, condition })
}

/// Per-order system matrix `I - c L^m W^m` and its pieces.
pub(crate) struct OrderSystem {
    pub lmat: DMatrix<Complex64>,
    pub w: Vec<f64>,
    pub a: DMatrix<Complex64>,
}

pub(crate) fn order_system(m: i32, z: Complex64, phase: &PhaseFunction) -> OrderSystem {
    let big_l = phase.degree();
    let pair = LegendrePair::new(big_l, m, z);
    let lmat = l_matrix_product(&pair, z, big_l);
    let w = build_w_diagonal(m, phase);
    let n = w.len();
    let c = phase.c();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) - c * lmat[(i, j)] * w[j]
    });
    OrderSystem { lmat, w, a }
}

/// `M(k, w, w0) = sum_m P^m(w)^H W^m [I - c L^m W^m]^{-1} P^m(w0)`.
pub fn compute_m(kpoint: &FourierPoint, omega: &Direction, omega0: &Direction, phase: &PhaseFunction) -> Result<Complex64> {
    let z = kpoint.z();
    let big_l = phase.degree() as i32;
    let phi0 = omega0.phi();
    let mut total = Complex64::new(0.0, 0.0);
    for m in -big_l..=big_l {
        let sys = order_system(m, z, phase);
        let p0 = DVector::from_vec(build_p_vector(m, kpoint, omega0, phi0, big_l as usize));
        let p = build_p_vector(m, kpoint, omega, phi0, big_l as usize);
        let x = solve_checked(sys.a, &p0, kpoint.k(), m)?;
        for (i, pi) in p.iter().enumerate() {
            total += pi.conj() * sys.w[i] * x[i];
        }
    }
    Ok(total)
}

/// Ballistic-subtracted moments `psibar_l^m`, `|m| <= l <= L`, from the dense system.
pub fn psi_bar_matrix_route(m: i32, kpoint: &FourierPoint, omega0: &Direction, phase: &PhaseFunction) -> Result<Vec<Complex64>> {
    check_order(m, phase)?;
    let z = kpoint.z();
    let big_l = phase.degree();
    let sys = order_system(m, z, phase);
    let local0 = kpoint.frame().to_local(omega0);
    let p0 = p_vector_local(m, &local0, omega0.phi(), big_l);
    let src = z / (z - local0.mu());
    let c = phase.c();
    let n = sys.w.len();
    let rhs = DVector::from_fn(n, |i, _| {
        (0..n).map(|j| c * sys.lmat[(i, j)] * sys.w[j] * src * p0[j]).sum::<Complex64>()
    });
    let x = solve_checked(sys.a, &rhs, kpoint.k(), m)?;
    Ok(x.iter().copied().collect())
}

/// Multiply-collided part of the Fourier-space angular flux from the matrix route,
/// `(z/(z - khat.w)) (c/4pi) sum_m P^m(w)^H W^m psibar^m`.
pub fn smooth_flux_matrix(kpoint: &FourierPoint, omega: &Direction, omega0: &Direction, phase: &PhaseFunction) -> Result<Complex64> {
    let z = kpoint.z();
    let big_l = phase.degree();
    let frame = kpoint.frame();
    let local = frame.to_local(omega);
    let mut s = Complex64::new(0.0, 0.0);
    for m in -(big_l as i32)..=(big_l as i32) {
        let psi = psi_bar_matrix_route(m, kpoint, omega0, phase)?;
        let p = p_vector_local(m, &local, omega0.phi(), big_l);
        let w = build_w_diagonal(m, phase);
        for i in 0..psi.len() {
            s += p[i].conj() * w[i] * psi[i];
        }
    }
    Ok(z / (z - local.mu()) * phase.c() / (4.0 * PI) * s)
}

/// Once-collided part of the Fourier-space angular flux,
/// `c p(w, w0) (z/(z - khat.w)) (z/(z - khat.w0))`.
pub fn once_collided_fourier(kpoint: &FourierPoint, omega: &Direction, omega0: &Direction, phase: &PhaseFunction) -> Complex64 {
    let z = kpoint.z();
    let k = kpoint.khat();
    let p = phase_function_eval(phase, omega, omega0);
    phase.c() * p * z / (z - k.dot(omega)) * z / (z - k.dot(omega0))
}
