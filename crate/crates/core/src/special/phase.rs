use super::geometry::Direction;
use super::harmonics::spherical_harmonic;
use super::legendre::{legendre_p_real_nonneg, negative_m_factor};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Scattering law: albedo `c` and Legendre coefficients `beta_0 ..= beta_L` with `beta_0 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseFunction {
    c: f64,
    beta: Vec<f64>,
}

impl PhaseFunction {
    pub fn new(c: f64, beta: Vec<f64>) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidPhase(format!("albedo must satisfy 0 < c < 1, got {c}")));
        }
        if beta.is_empty() || (beta[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPhase("beta_0 must equal 1".into()));
        }
        for (l, b) in beta.iter().enumerate().skip(1) {
            if !b.is_finite() || b.abs() >= (2 * l + 1) as f64 {
                return Err(Error::InvalidPhase(format!("|beta_{l}| = {b} must be below {}", 2 * l + 1)));
            }
        }
        Ok(PhaseFunction { c, beta })
    }

    /// Isotropic scattering with albedo `c`.
    pub fn isotropic(c: f64) -> Result<Self> {
        Self::new(c, vec![1.0])
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Truncation degree `L`.
    pub fn degree(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `beta_l`, zero above the truncation.
    pub fn beta_l(&self, l: usize) -> f64 {
        self.beta.get(l).copied().unwrap_or(0.0)
    }

    /// Same scattering shape with a different albedo.
    pub fn with_albedo(&self, c: f64) -> Result<Self> {
        Self::new(c, self.beta.clone())
    }

    /// `omega_l^m = beta_l (l-m)!/(l+m)!`, valid for negative `m` as well.
    pub fn omega(&self, l: usize, m: i32) -> f64 {
        let am = m.unsigned_abs() as usize;
        if am > l {
            return 0.0;
        }
        let ratio: f64 = ((l - am + 1)..=(l + am)).map(|i| 1.0 / i as f64).product();
        let r = if m >= 0 { ratio } else { 1.0 / ratio };
        self.beta_l(l) * r
    }

    /// `h_l = 2l + 1 - c beta_l` for `l <= L`, `2l + 1` beyond.
    pub fn h(&self, l: usize) -> f64 {
        (2 * l + 1) as f64 - self.c * self.beta_l(l)
    }

    /// Scattering density in the cosine, `(1/2) sum beta_l P_l(mu)`.
    pub fn cosine_density(&self, mu: f64) -> f64 {
        let p = legendre_p_real_nonneg(self.degree(), 0, mu);
        0.5 * p.iter().zip(&self.beta).map(|(p, b)| p * b).sum::<f64>()
    }
}

/// `p(omega, omega0) = (1/4pi) sum beta_l P_l(omega . omega0)`.
pub fn phase_function_eval(phase: &PhaseFunction, omega: &Direction, omega0: &Direction) -> f64 {
    let mu = omega.dot(omega0).clamp(-1.0, 1.0);
    phase.cosine_density(mu) / (2.0 * std::f64::consts::PI)
}

/// The same phase function through its spherical-harmonic addition form.
pub fn phase_function_eval_harmonic(phase: &PhaseFunction, omega: &Direction, omega0: &Direction) -> f64 {
    let mut s = 0.0;
    for l in 0..=phase.degree() {
        let f = phase.beta_l(l) / (2 * l + 1) as f64;
        for m in -(l as i32)..=(l as i32) {
            let y = spherical_harmonic(l, m, omega) * spherical_harmonic(l, m, omega0).conj();
            s += f * y.re;
        }
    }
    s
}

/// The azimuthal form `(1/4pi) sum omega_l^m P_l^m P_l^m e^{im(phi-phi0)}`.
pub fn phase_function_eval_azimuthal(phase: &PhaseFunction, omega: &Direction, omega0: &Direction) -> f64 {
    let big_l = phase.degree();
    let mut s = 0.0;
    for m in -(big_l as i32)..=(big_l as i32) {
        let am = m.unsigned_abs() as usize;
        let p = legendre_p_real_nonneg(big_l, am, omega.mu());
        let p0 = legendre_p_real_nonneg(big_l, am, omega0.mu());
        for l in am..=big_l {
            let mut prod = p[l - am] * p0[l - am];
            if m < 0 {
                prod *= negative_m_factor(l, am).powi(2);
            }
            s += phase.omega(l, m) * prod * (m as f64 * (omega.phi() - omega0.phi())).cos();
        }
    }
    s / (4.0 * std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_invalid_parameters() {
        assert!(PhaseFunction::new(1.0, vec![1.0]).is_err());
        assert!(PhaseFunction::new(0.5, vec![0.9]).is_err());
        assert!(PhaseFunction::new(0.5, vec![1.0, 3.0]).is_err());
        assert!(PhaseFunction::new(0.5, vec![1.0, 2.9, 4.9]).is_ok());
    }

    #[test]
    fn isotropic_and_forward_values() {
        let a = Direction::new(0.3, 1.0).unwrap();
        let b = Direction::new(2.0, 5.0).unwrap();
        let iso = PhaseFunction::isotropic(0.5).unwrap();
        assert!((phase_function_eval(&iso, &a, &b) - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let lin = PhaseFunction::new(0.5, vec![1.0, 1.0]).unwrap();
        assert!((phase_function_eval(&lin, &a, &a) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn three_forms_agree() {
        let phase = PhaseFunction::new(0.7, vec![1.0, 1.8, 1.1, 0.4, 0.1]).unwrap();
        let dirs = [(0.2, 0.1), (1.3, 2.2), (2.9, 4.0), (1.5707963, 6.0)];
        for &(t, p) in &dirs {
            for &(t0, p0) in &dirs {
                let a = Direction::new(t, p).unwrap();
                let b = Direction::new(t0, p0).unwrap();
                let x = phase_function_eval(&phase, &a, &b);
                assert!((x - phase_function_eval_harmonic(&phase, &a, &b)).abs() < 1e-12);
                assert!((x - phase_function_eval_azimuthal(&phase, &a, &b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integrates_to_one() {
        let phase = PhaseFunction::new(0.7, vec![1.0, 1.8, 1.1]).unwrap();
        let (x, w) = crate::quadrature::gauss_legendre(32);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * phase.cosine_density(*x)).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }
}
