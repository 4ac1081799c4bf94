//! Real-space evaluation.
//!
//! The multiply-collided angular flux is bounded and is integrated over the wave
//! vector in spherical coordinates, either fully in three dimensions or with the
//! azimuth of `k` done analytically through Bessel functions. The uncollided and
//! once-collided parts carry delta functions in angle and come back as
//! [`SingularTerm`]s. Angle-integrated quantities of an isotropic point source reduce
//! to a single radial sine transform.

use crate::error::{Error, Result};
use crate::fourier_kernel::{build_w_diagonal, p_vector_local, psi_bar_matrix_route, FourierPoint};
use crate::quadrature::{gauss_legendre, gauss_legendre_on, pairwise_sum};
use crate::special::{
    assoc_legendre_q, bessel_j_all, chandrasekhar_g, chandrasekhar_rho, phase_function_eval, spherical_harmonics_table,
    Direction, PhaseFunction,
};
use crate::spectral_recurrence::ModeTable;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How the radial integral is continued past the last panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    /// Truncate at the cutoff.
    None,
    /// Fit `k f(k)` as a polynomial in `1/k` and integrate the oscillatory tail exactly.
    InverseSquare,
}

/// Node counts and cutoffs for the `k` integrals.
///
/// `n_k` is rounded up to whole 16-point Gauss-Legendre panels on `[0, k_max]`.
/// The radial sine transforms behind the energy density choose their panels from
/// `r` and use only `k_max` and `tail_model` from here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub k_max: f64,
    pub n_k: usize,
    pub n_mu: usize,
    pub n_phi: usize,
    pub lmax: usize,
    pub tail_model: TailModel,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { k_max: 200.0, n_k: 512, n_mu: 64, n_phi: 64, lmax: 24, tail_model: TailModel::InverseSquare }
    }
}

impl QuadratureSpec {
    pub fn fast() -> Self {
        QuadratureSpec { k_max: 100.0, n_k: 256, n_mu: 32, n_phi: 32, lmax: 24, tail_model: TailModel::InverseSquare }
    }

    pub fn accurate() -> Self {
        QuadratureSpec { k_max: 400.0, n_k: 1024, n_mu: 96, n_phi: 96, lmax: 40, tail_model: TailModel::InverseSquare }
    }

    /// Preset by name: `fast`, `default` or `accurate`.
    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "fast" => Ok(Self::fast()),
            "default" => Ok(Self::default()),
            "accurate" => Ok(Self::accurate()),
            other => Err(Error::InvalidInput(format!("unknown quadrature profile '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_max > 0.0 && self.k_max.is_finite()) {
            return Err(Error::InvalidInput(format!("k_max must be positive, got {}", self.k_max)));
        }
        for (name, n) in [("n_k", self.n_k), ("n_mu", self.n_mu), ("n_phi", self.n_phi)] {
            if n < 2 {
                return Err(Error::InvalidInput(format!("{name} must be at least 2, got {n}")));
            }
        }
        Ok(())
    }

    fn k_rule(&self) -> (Vec<f64>, Vec<f64>) {
        let panels = self.n_k.div_ceil(PANEL_ORDER).max(1);
        let h = self.k_max / panels as f64;
        let (mut x, mut w) = (Vec::new(), Vec::new());
        for i in 0..panels {
            let (xs, ws) = gauss_legendre_on(PANEL_ORDER, h * i as f64, h * (i + 1) as f64);
            x.extend(xs);
            w.extend(ws);
        }
        (x, w)
    }
}

/// Which Fourier-space solver feeds the 3D quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Matrix,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularKind {
    Uncollided,
    OnceCollided,
}

/// Where a singular term lives in angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Support {
    /// `delta(w - d) delta(w0 - d)` with the field point on the ray through `d`.
    Ray { direction: Direction },
    /// `delta(|phi - phi0| - pi)` about the axis `r/|r|`: the flight direction lies in
    /// the plane of `r` and `w0`, on the far side of `r` from `w0`, at polar angles
    /// `tau` and `tau0` from `r`.
    Plane { tau: f64, tau0: f64 },
}

/// Amplitude of a delta-supported part of the angular flux.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularTerm {
    pub kind: SingularKind,
    pub weight: f64,
    pub support: Support,
}

/// Angular flux at one field point: the bounded multiply-collided part, the singular
/// terms and an error estimate for the former.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxResult {
    pub smooth: f64,
    pub singular: Vec<SingularTerm>,
    pub quadrature_error: f64,
}

/// Field point and flight direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub r: [f64; 3],
    pub omega: Direction,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_radius(r: f64) -> Result<()> {
    if r == 0.0 {
        return Err(Error::SingularOrigin);
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive and finite, got {r}")));
    }
    Ok(())
}

/// `e^{-r}/r^2 delta(w - rhat) delta(w - w0)`.
pub fn uncollided_term(r: f64, _omega: &Direction, omega0: &Direction) -> Result<SingularTerm> {
    check_radius(r)?;
    Ok(SingularTerm {
        kind: SingularKind::Uncollided,
        weight: (-r).exp() / (r * r),
        support: Support::Ray { direction: *omega0 },
    })
}

const GEOMETRY_EPS: f64 = 1e-14;

/// Single-scatter flux from a point source, weight
/// `c p(w, w0) exp(-r (sin tau + sin tau0)/sin(tau + tau0)) / (r sin tau sin tau0)`
/// for `tau + tau0 < pi`, zero beyond.
pub fn once_collided_term(r_vec: [f64; 3], omega: &Direction, omega0: &Direction, phase: &PhaseFunction) -> Result<SingularTerm> {
    let r = norm3(r_vec);
    check_radius(r)?;
    let rhat = Direction::from_vector(r_vec)?;
    let tau = rhat.dot(omega).clamp(-1.0, 1.0).acos();
    let tau0 = rhat.dot(omega0).clamp(-1.0, 1.0).acos();
    let (s, s0) = (tau.sin(), tau0.sin());
    if s * s0 < GEOMETRY_EPS {
        return Err(Error::CoplanarDegenerate(format!("flight or source direction along r (tau = {tau}, tau0 = {tau0})")));
    }
    let support = Support::Plane { tau, tau0 };
    let gap = PI - tau - tau0;
    if gap < -GEOMETRY_EPS {
        return Ok(SingularTerm { kind: SingularKind::OnceCollided, weight: 0.0, support });
    }
    if gap.abs() <= GEOMETRY_EPS {
        return Err(Error::CoplanarDegenerate("tau + tau0 = pi puts the scattering site at infinity".into()));
    }
    let p = phase_function_eval(phase, omega, omega0);
    let weight = phase.c() * p * (-r * (s + s0) / (tau + tau0).sin()).exp() / (r * s * s0);
    Ok(SingularTerm { kind: SingularKind::OnceCollided, weight, support })
}

/// The singular terms that apply at a field point. Geometries where the once-collided
/// weight is undefined (flight or source direction along `r`) list only the uncollided term.
pub fn singular_terms(r_vec: [f64; 3], omega: &Direction, omega0: &Direction, phase: &PhaseFunction) -> Result<Vec<SingularTerm>> {
    let mut out = vec![uncollided_term(norm3(r_vec), omega, omega0)?];
    if let Ok(t) = once_collided_term(r_vec, omega, omega0, phase) {
        out.push(t);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Radial sine transforms

const PANEL_ORDER: usize = 16;
const K_START: f64 = 1e-6;
const TAIL_NODES: usize = 8;
const TAIL_NODES_LOW: usize = 6;

/// Value and error estimate of a one-dimensional integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// `int_x^inf sin(t) t^{-p} dt = Im[x^{1-p} E_p(-ix)]`, with the generalized exponential
/// integral from its continued fraction (modified Lentz).
pub fn sine_tail_moment(p: usize, x: f64) -> f64 {
    assert!(p >= 1 && x >= 1.0, "tail moment needs p >= 1 and x >= 1");
    let w = Complex64::new(0.0, -x);
    let tiny = Complex64::new(1e-300, 0.0);
    let mut b = w + p as f64;
    let mut c = Complex64::new(1e300, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..100_000 {
        let an = -((i * (p - 1 + i)) as f64);
        b += 2.0;
        d = an * d + b;
        if d.norm() < 1e-300 {
            d = tiny;
        }
        c = b + an / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        d = d.inv();
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (h * (-w).exp() * x.powi(1 - p as i32)).im
}

fn chebyshev_nodes(n: usize, a: f64, b: f64) -> Vec<f64> {
    (0..n).map(|j| 0.5 * (a + b) + 0.5 * (b - a) * (PI * (j as f64 + 0.5) / n as f64).cos()).collect()
}

/// Polynomial coefficients in `s` through the points `(s_j, v_j)`.
fn fit_monomials(s: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = s.len();
    let a = DMatrix::from_fn(n, n, |i, j| s[i].powi(j as i32));
    let b = DVector::from_column_slice(v);
    let x = a.lu().solve(&b).ok_or_else(|| Error::NumericalConsistency("tail fit is singular".into()))?;
    Ok(x.iter().copied().collect())
}

/// `int_K^inf sin(kr) f(k) dk` with `k f(k)` fitted as a polynomial in `s = K/k`
/// on `s in [0.1, 1]`. Returns the value and the change against a lower-degree fit.
fn oscillatory_tail<F>(r: f64, cutoff: f64, f: &F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let x = cutoff * r;
    let eval = |n: usize| -> Result<f64> {
        let s = chebyshev_nodes(n, 0.1, 1.0);
        let v = s.iter().map(|&s| f(cutoff / s).map(|fv| fv * cutoff / s)).collect::<Result<Vec<_>>>()?;
        let a = fit_monomials(&s, &v)?;
        Ok(a.iter().enumerate().map(|(n, a)| a * x.powi(n as i32) * sine_tail_moment(n + 1, x)).sum())
    };
    let hi = eval(TAIL_NODES)?;
    let lo = eval(TAIL_NODES_LOW)?;
    Ok((hi, (hi - lo).abs()))
}

/// `int_0^inf sin(kr) f(k) dk`.
///
/// Gauss-Legendre panels of width `min(1, pi/r)` run from `1e-6` to
/// `K = max(k_max, 40/r)`; the remainder follows `tail`. The error estimate adds the
/// difference against 12-point panels to the spread of the tail fit.
pub fn sine_transform<F>(r: f64, f: F, k_max: f64, tail: TailModel) -> Result<Integral>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    check_radius(r)?;
    let cutoff = k_max.max(40.0 / r);
    let width = (PI / r).min(1.0);
    let n = ((cutoff - K_START) / width).ceil().max(1.0) as usize;
    let h = (cutoff - K_START) / n as f64;
    let (x16, w16) = gauss_legendre(PANEL_ORDER);
    let (x12, w12) = gauss_legendre(12);
    let panel = |a: f64, x: &[f64], w: &[f64]| -> Result<f64> {
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            let k = a + 0.5 * h * (xi + 1.0);
            s += wi * (k * r).sin() * f(k)?;
        }
        Ok(0.5 * h * s)
    };
    let sums = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = K_START + h * i as f64;
            Ok((panel(a, &x16, &w16)?, panel(a, &x12, &w12)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let hi = pairwise_sum(&sums.iter().map(|s| s.0).collect::<Vec<_>>());
    let lo = pairwise_sum(&sums.iter().map(|s| s.1).collect::<Vec<_>>());
    let mut value = hi;
    let mut error = (hi - lo).abs();
    match tail {
        TailModel::None => error += f(cutoff)?.abs() / r,
        TailModel::InverseSquare => {
            let (t, e) = oscillatory_tail(r, cutoff, &f)?;
            value += t;
            error += e;
        }
    }
    if !(value.is_finite() && error.is_finite()) {
        return Err(Error::NumericalConsistency(format!("radial transform not finite at r = {r}")));
    }
    Ok(Integral { value, error })
}

// ---------------------------------------------------------------------------
// Energy density of an isotropic point source

/// Energy density at one radius: `u = uncollided + scattered`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyDensity {
    pub r: f64,
    pub uncollided: f64,
    pub scattered: f64,
    pub total: f64,
    pub error: f64,
}

const REALITY_TOLERANCE: f64 = 1e-12;

/// Fourier transform of the scattered energy density,
/// `Phi(k) = 4pi [(rho_{L+1} Q_L - rho_L Q_{L+1}) / (g_{L+1} Q_L - g_L Q_{L+1}) - z Q_0]`
/// at `z = i/k`, all at order zero.
///
/// The value is real on the physical axis. An imaginary part above `1e-12` of the
/// magnitude of the two cancelling terms is reported as a convention error.
pub fn energy_density_integrand(k: f64, phase: &PhaseFunction) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    let big_l = phase.degree();
    let z = Complex64::new(0.0, 1.0 / k);
    let g = chandrasekhar_g(big_l + 1, 0, z, phase)?;
    let rho = chandrasekhar_rho(big_l + 1, 0, z, phase)?;
    let q = assoc_legendre_q(big_l + 1, 0, z)?;
    let (a, b) = (big_l, big_l + 1);
    let ratio = (rho[b] * q[a] - rho[a] * q[b]) / (g[b] * q[a] - g[a] * q[b]);
    let free = z * q[0];
    let v = 4.0 * PI * (ratio - free);
    let scale = 4.0 * PI * (ratio.norm() + free.norm());
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::NumericalConsistency(format!("energy-density integrand not finite at k = {k}")));
    }
    if v.im.abs() > REALITY_TOLERANCE * scale {
        return Err(Error::Convention(format!(
            "energy-density integrand has imaginary part {:e} against magnitude {scale:e} at k = {k}",
            v.im
        )));
    }
    Ok(v.re)
}

/// `u(r) = e^{-r}/r^2 + (1/(2 pi^2 r)) int sin(kr) k Phi(k) dk` for a unit isotropic
/// point source and any scattering degree.
pub fn energy_density(r: f64, phase: &PhaseFunction, quad: &QuadratureSpec) -> Result<EnergyDensity> {
    quad.validate()?;
    check_radius(r)?;
    let t = sine_transform(r, |k| Ok(k * energy_density_integrand(k, phase)?), quad.k_max, quad.tail_model)?;
    Ok(assemble(r, t, 1.0 / (2.0 * PI * PI * r)))
}

fn assemble(r: f64, t: Integral, scale: f64) -> EnergyDensity {
    let uncollided = (-r).exp() / (r * r);
    let scattered = scale * t.value;
    EnergyDensity { r, uncollided, scattered, total: uncollided + scattered, error: scale.abs() * t.error }
}

/// Isotropic-scattering energy density from the textbook transform,
/// `e^{-r}/r^2 + (2c/(pi r)) int sin(kr) atan(k)^2 / (k - c atan k) dk`.
pub fn isotropic_reference_energy_density(r: f64, c: f64, quad: &QuadratureSpec) -> Result<EnergyDensity> {
    PhaseFunction::isotropic(c)?;
    quad.validate()?;
    check_radius(r)?;
    let f = |k: f64| {
        let a = k.atan();
        Ok(a * a / (k - c * a))
    };
    let t = sine_transform(r, f, quad.k_max, quad.tail_model)?;
    Ok(assemble(r, t, 2.0 * c / (PI * r)))
}

/// [`isotropic_reference_energy_density`] with the default quadrature, total only.
pub fn isotropic_reference_density(r: f64, c: f64) -> Result<f64> {
    Ok(isotropic_reference_energy_density(r, c, &QuadratureSpec::default())?.total)
}

// ---------------------------------------------------------------------------
// Shell averages, for comparison with track-length tallies

/// Volume of the shell `ra <= |x| < rb`.
pub fn shell_volume(ra: f64, rb: f64) -> f64 {
    4.0 * PI / 3.0 * (rb.powi(3) - ra.powi(3))
}

fn check_shell(ra: f64, rb: f64) -> Result<()> {
    if !(ra >= 0.0 && rb > ra && rb.is_finite()) {
        return Err(Error::InvalidInput(format!("shell needs 0 <= inner < outer, got [{ra}, {rb}]")));
    }
    Ok(())
}

/// Uncollided scalar flux per source particle averaged over a shell.
pub fn shell_uncollided_density(ra: f64, rb: f64) -> Result<f64> {
    check_shell(ra, rb)?;
    Ok(((-ra).exp() - (-rb).exp()) / shell_volume(ra, rb))
}

/// Energy density averaged over the shell volume (8-point Gauss-Legendre in `r` for the
/// scattered part, exact for the uncollided part).
pub fn shell_energy_density(ra: f64, rb: f64, phase: &PhaseFunction, quad: &QuadratureSpec) -> Result<EnergyDensity> {
    check_shell(ra, rb)?;
    if ra == 0.0 {
        return Err(Error::SingularOrigin);
    }
    let (x, w) = gauss_legendre_on(8, ra, rb);
    let vol = shell_volume(ra, rb) / (4.0 * PI);
    let mut scattered = 0.0;
    let mut error = 0.0;
    for (r, w) in x.iter().zip(&w) {
        let e = energy_density(*r, phase, quad)?;
        scattered += w * r * r * e.scattered / vol;
        error += w * r * r * e.error / vol;
    }
    let uncollided = 4.0 * PI * shell_uncollided_density(ra, rb)?;
    Ok(EnergyDensity { r: 0.5 * (ra + rb), uncollided, scattered, total: uncollided + scattered, error })
}

/// Once-collided scalar flux per particle of a pencil beam, averaged over a shell:
/// `(2 pi c / V) int r dr int_0^pi dtau0 int_0^{pi - tau0} p(cos(tau + tau0))
/// exp(-r (sin tau + sin tau0)/sin(tau + tau0)) dtau`.
pub fn shell_once_collided_density(ra: f64, rb: f64, phase: &PhaseFunction) -> Result<f64> {
    check_shell(ra, rb)?;
    Ok(once_collided_radial_integral(ra, rb, phase) / shell_volume(ra, rb))
}

/// Rule on `[a, b]` with panels halving toward the ends marked `true`.
fn graded_rule(a: f64, b: f64, toward_a: bool, toward_b: bool, order: usize) -> Vec<(f64, f64)> {
    const LEVELS: i32 = 24;
    let mut cuts = vec![a, b];
    let half = 0.5 * (b - a);
    for j in 1..=LEVELS {
        let d = half * 0.5f64.powi(j - 1);
        if toward_a {
            cuts.push(a + d);
        }
        if toward_b {
            cuts.push(b - d);
        }
    }
    cuts.push(a + half);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (x, wt) = gauss_legendre_on(order, w[0], w[1]);
        out.extend(x.into_iter().zip(wt));
    }
    out
}

fn once_collided_radial_integral(ra: f64, rb: f64, phase: &PhaseFunction) -> f64 {
    // tau = u v, tau0 = u (1 - v): the triangle tau + tau0 <= pi becomes a rectangle,
    // with the exponent's boundary layers at u -> pi near v = 0 and v = 1.
    let us: Vec<(f64, f64, f64)> = graded_rule(0.0, PI, false, true, 8)
        .into_iter()
        .map(|(u, w)| (u, w * u * phase.cosine_density(u.cos()) / (2.0 * PI), u.sin()))
        .collect();
    let vs = graded_rule(0.0, 1.0, true, true, 8);
    let angular = |r: f64| -> f64 {
        let rows: Vec<f64> = us
            .iter()
            .map(|&(u, wu, su)| {
                let acc: f64 = vs.iter().map(|&(v, wv)| wv * (-r * ((u * v).sin() + (u - u * v).sin()) / su).exp()).sum();
                wu * acc
            })
            .collect();
        pairwise_sum(&rows)
    };
    // The angular integral is not smooth at r = 0, so a shell touching the origin
    // gets a graded first panel.
    let panels = (rb - ra).ceil().max(1.0) as usize;
    let h = (rb - ra) / panels as f64;
    let mut nodes = graded_rule(ra, ra + h, ra == 0.0, false, PANEL_ORDER);
    for p in 1..panels {
        let (x, w) = gauss_legendre_on(PANEL_ORDER, ra + h * p as f64, ra + h * (p + 1) as f64);
        nodes.extend(x.into_iter().zip(w));
    }
    let terms: Vec<f64> = nodes.par_iter().map(|&(r, w)| w * r * angular(r)).collect();
    2.0 * PI * phase.c() * pairwise_sum(&terms)
}

// ---------------------------------------------------------------------------
// Three-dimensional inversion

struct NodeSums {
    full: Vec<Complex64>,
    half: Vec<Complex64>,
}

/// `(2pi)^{-3} int k^2 dk dmu dphi e^{ik.r} f(k)` at every field point, where
/// `flux(kpoint)` returns `f` at all points. Gauss-Legendre in `k` and `mu`, trapezoid
/// in `phi`; the `phi` sum over even nodes alone feeds the error estimate.
fn integrate_full<F>(points: &[FieldPoint], quad: &QuadratureSpec, flux: F) -> Result<Vec<(f64, f64)>>
where
    F: Fn(&FourierPoint) -> Result<Vec<Complex64>> + Sync,
{
    quad.validate()?;
    let (ks, wk) = quad.k_rule();
    let (mus, wmu) = gauss_legendre(quad.n_mu);
    let np = points.len();
    let wphi = 2.0 * PI / quad.n_phi as f64;
    let per_k = ks
        .par_iter()
        .map(|&k| {
            let mut full = vec![Complex64::new(0.0, 0.0); np];
            let mut half = vec![Complex64::new(0.0, 0.0); np];
            for (mu, wm) in mus.iter().zip(&wmu) {
                let theta = mu.clamp(-1.0, 1.0).acos();
                for j in 0..quad.n_phi {
                    let khat = Direction::new(theta, wphi * j as f64)?;
                    let kp = FourierPoint::new(k, khat)?;
                    let vals = flux(&kp)?;
                    let kv = khat.to_vector();
                    for (i, p) in points.iter().enumerate() {
                        let t = vals[i] * Complex64::from_polar(wm * wphi, k * dot3(kv, p.r));
                        full[i] += t;
                        if j % 2 == 0 {
                            half[i] += 2.0 * t;
                        }
                    }
                }
            }
            Ok(NodeSums { full, half })
        })
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = ks.iter().zip(&wk).map(|(k, w)| w * k * k / (8.0 * PI * PI * PI)).collect();
    let radial: Vec<(f64, f64)> = (0..np)
        .map(|i| (0..ks.len()).map(|j| (weights[j] * per_k[j].full[i].re, weights[j] * per_k[j].half[i].re)).collect::<Vec<_>>())
        .map(|terms| finish_radial(&ks, &wk, quad, &terms))
        .collect::<Result<Vec<_>>>()?;
    Ok(radial)
}

/// Sum per-node contributions in node order. The error adds the coarse-rule spread to
/// the last panel.
///
/// Unless the tail model is [`TailModel::None`], which asks for plain truncation, a `k`
/// integral counts as divergent when the mean integrand magnitude over the top quarter
/// of `[0, k_max]` exceeds that over the quarter below it and the upper half outweighs
/// the lower half.
fn finish_radial(ks: &[f64], weights: &[f64], quad: &QuadratureSpec, terms: &[(f64, f64)]) -> Result<(f64, f64)> {
    let k_max = quad.k_max;
    let full: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let coarse: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let value = pairwise_sum(&full);
    if !value.is_finite() {
        return Err(Error::NumericalConsistency("inverse transform not finite".into()));
    }
    let at = |f: f64| ks.partition_point(|&k| k < f * k_max);
    let (half, three) = (at(0.5), at(0.75));
    let lower = pairwise_sum(&full[..half]);
    let upper = pairwise_sum(&full[half..]);
    let mean = |a: usize, b: usize| {
        let w: f64 = weights[a..b].iter().sum();
        full[a..b].iter().map(|v| v.abs()).sum::<f64>() / w.max(f64::MIN_POSITIVE)
    };
    let checked = quad.tail_model != TailModel::None;
    if checked && half < three && three < full.len() && mean(three, full.len()) > mean(half, three) && upper.abs() > lower.abs() {
        return Err(Error::TailDivergence(format!(
            "integrand still growing at k_max = {k_max}; k in [{:.3}, {k_max}] contributes {upper:e} against {lower:e} below",
            0.5 * k_max
        )));
    }
    let last = pairwise_sum(&full[full.len().saturating_sub(PANEL_ORDER)..]);
    let error = (value - pairwise_sum(&coarse)).abs() + last.abs();
    Ok((value, error))
}

fn check_points(points: &[FieldPoint]) -> Result<()> {
    for p in points {
        check_radius(norm3(p.r))?;
    }
    Ok(())
}

fn results(points: &[FieldPoint], omega0: &Direction, phase: &PhaseFunction, sums: Vec<(f64, f64)>) -> Result<Vec<FluxResult>> {
    points
        .iter()
        .zip(sums)
        .map(|(p, (smooth, err))| {
            Ok(FluxResult { smooth, singular: singular_terms(p.r, &p.omega, omega0, phase)?, quadrature_error: err })
        })
        .collect()
}

/// Multiply-collided Fourier-space flux at several directions from the dense solves.
fn matrix_route_fluxes(kp: &FourierPoint, omegas: &[Direction], omega0: &Direction, phase: &PhaseFunction) -> Result<Vec<Complex64>> {
    let big_l = phase.degree();
    let li = big_l as i32;
    let z = kp.z();
    let frame = kp.frame();
    let mut orders = Vec::with_capacity(2 * big_l + 1);
    for m in -li..=li {
        orders.push((psi_bar_matrix_route(m, kp, omega0, phase)?, build_w_diagonal(m, phase)));
    }
    let pre = phase.c() / (4.0 * PI);
    Ok(omegas
        .iter()
        .map(|omega| {
            let local = frame.to_local(omega);
            let mut s = Complex64::new(0.0, 0.0);
            for (m, (psi, w)) in (-li..=li).zip(&orders) {
                let p = p_vector_local(m, &local, omega0.phi(), big_l);
                for i in 0..psi.len() {
                    s += p[i].conj() * w[i] * psi[i];
                }
            }
            z / (z - local.mu()) * pre * s
        })
        .collect())
}

/// `psi(r, w)` for several field points sharing one source direction.
pub fn invert_full_batch(
    points: &[FieldPoint],
    omega0: &Direction,
    phase: &PhaseFunction,
    quad: &QuadratureSpec,
    route: Route,
) -> Result<Vec<FluxResult>> {
    check_points(points)?;
    let omegas: Vec<Direction> = points.iter().map(|p| p.omega).collect();
    let sums = match route {
        Route::Matrix => integrate_full(points, quad, |kp| matrix_route_fluxes(kp, &omegas, omega0, phase))?,
        Route::Spectral => {
            if quad.lmax < phase.degree() {
                return Err(Error::InvalidInput(format!("lmax = {} below the scattering degree", quad.lmax)));
            }
            let ys: Vec<_> = omegas.iter().map(|w| spherical_harmonics_table(quad.lmax, quad.lmax, w)).collect();
            integrate_full(points, quad, |kp| {
                let table = ModeTable::new(kp, omega0, phase, quad.lmax)?;
                Ok(ys.iter().map(|y| table.smooth_flux_with(y)).collect())
            })?
        }
    };
    results(points, omega0, phase, sums)
}

/// Angular flux at `r_vec` in direction `omega` for a unit point source emitting along
/// `omega0`.
///
/// The `k` integral stops at `quad.k_max` with no tail correction. With
/// [`TailModel::None`] that truncation is taken as intended; otherwise an integrand
/// still growing at the cutoff is a [`Error::TailDivergence`].
pub fn invert_full(
    r_vec: [f64; 3],
    omega: &Direction,
    omega0: &Direction,
    phase: &PhaseFunction,
    quad: &QuadratureSpec,
    route: Route,
) -> Result<FluxResult> {
    let mut v = invert_full_batch(&[FieldPoint { r: r_vec, omega: *omega }], omega0, phase, quad, route)?;
    Ok(v.remove(0))
}

/// Multiply-collided Fourier-space flux for isotropic scattering in closed form,
/// `(c/4pi) [c t/(1 - c t)] / ((1 + i k.w)(1 + i k.w0))` with `t = atan(k)/k`.
pub fn isotropic_smooth_fourier(kp: &FourierPoint, omega: &Direction, omega0: &Direction, c: f64) -> Complex64 {
    let k = kp.k();
    let khat = kp.khat();
    let t = k.atan() / k;
    let a = Complex64::new(1.0, k * khat.dot(omega)).inv();
    let a0 = Complex64::new(1.0, k * khat.dot(omega0)).inv();
    c / (4.0 * PI) * (c * t / (1.0 - c * t)) * a * a0
}

/// The isotropic-scattering flux from [`isotropic_smooth_fourier`] under the same
/// quadrature as [`invert_full_batch`].
pub fn invert_isotropic_reference(points: &[FieldPoint], omega0: &Direction, c: f64, quad: &QuadratureSpec) -> Result<Vec<FluxResult>> {
    check_points(points)?;
    let phase = PhaseFunction::isotropic(c)?;
    let sums = integrate_full(points, quad, |kp| Ok(points.iter().map(|p| isotropic_smooth_fourier(kp, &p.omega, omega0, c)).collect()))?;
    results(points, omega0, &phase, sums)
}

// ---------------------------------------------------------------------------
// Bessel-reduced inversion

const POLE_TOLERANCE: f64 = 1e-14;

/// `sum_lm' Y_lm'(w) kappa_lm' 2pi i^m' J_m'(x) e^{-im' phi_r}`: the azimuthal `k`
/// integral of the smooth flux times `e^{ix cos(phi_k - phi_r)}`, for a table built at
/// `phi_k = 0`.
fn bessel_azimuthal(table: &ModeTable, y: &[Vec<Complex64>], x: f64, phi_r: f64) -> Complex64 {
    let lmax = table.lmax();
    let j = bessel_j_all(lmax, x);
    let mut s = Complex64::new(0.0, 0.0);
    for (l, row) in y.iter().enumerate().take(lmax + 1) {
        let li = l as i32;
        for mp in -li..=li {
            let n = mp.unsigned_abs() as usize;
            let jm = if mp < 0 && n % 2 == 1 { -j[n] } else { j[n] };
            let factor = Complex64::i().powi(mp) * Complex64::from_polar(2.0 * PI * jm, -(mp as f64) * phi_r);
            s += row[(mp + li) as usize] * table.kappa_smooth(l, mp) * factor;
        }
    }
    s
}

/// [`invert_full_batch`] with the `phi_k` integral done through Bessel functions. Valid
/// only when the source points along the polar axis, which makes the Fourier
/// coefficients independent of `phi_k`; other sources are a precondition error.
pub fn invert_bessel_batch(points: &[FieldPoint], omega0: &Direction, phase: &PhaseFunction, quad: &QuadratureSpec) -> Result<Vec<FluxResult>> {
    quad.validate()?;
    check_points(points)?;
    if omega0.theta().sin() >= POLE_TOLERANCE {
        return Err(Error::Precondition(format!(
            "Bessel reduction needs the source along the z axis, got theta0 = {}",
            omega0.theta()
        )));
    }
    if quad.lmax < phase.degree() {
        return Err(Error::InvalidInput(format!("lmax = {} below the scattering degree", quad.lmax)));
    }
    let (ks, wk) = quad.k_rule();
    let (mus, wmu) = gauss_legendre(quad.n_mu);
    let ys: Vec<_> = points.iter().map(|p| spherical_harmonics_table(quad.lmax, quad.lmax, &p.omega)).collect();
    let geo: Vec<(f64, f64, f64, f64)> = points
        .iter()
        .map(|p| {
            let r = norm3(p.r);
            let d = Direction::from_vector(p.r).expect("checked radius");
            (r, d.mu(), d.theta().sin(), d.phi())
        })
        .collect();
    let per_k = ks
        .par_iter()
        .map(|&k| {
            let mut acc = vec![Complex64::new(0.0, 0.0); points.len()];
            for (mu, wm) in mus.iter().zip(&wmu) {
                let theta = mu.clamp(-1.0, 1.0).acos();
                let kp = FourierPoint::new(k, Direction::new(theta, 0.0)?)?;
                let table = ModeTable::new(&kp, omega0, phase, quad.lmax)?;
                for (i, &(r, mu_r, sin_r, phi_r)) in geo.iter().enumerate() {
                    let x = k * r * theta.sin() * sin_r;
                    let along = Complex64::from_polar(*wm, k * mu * mu_r * r);
                    acc[i] += along * bessel_azimuthal(&table, &ys[i], x.max(0.0), phi_r);
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = ks.iter().zip(&wk).map(|(k, w)| w * k * k / (8.0 * PI * PI * PI)).collect();
    let sums = (0..points.len())
        .map(|i| {
            let terms: Vec<(f64, f64)> = (0..ks.len()).map(|j| (weights[j] * per_k[j][i].re, weights[j] * per_k[j][i].re)).collect();
            finish_radial(&ks, &wk, quad, &terms)
        })
        .collect::<Result<Vec<_>>>()?;
    results(points, omega0, phase, sums)
}

/// Single-point form of [`invert_bessel_batch`].
pub fn invert_bessel(r_vec: [f64; 3], omega: &Direction, omega0: &Direction, phase: &PhaseFunction, quad: &QuadratureSpec) -> Result<FluxResult> {
    let mut v = invert_bessel_batch(&[FieldPoint { r: r_vec, omega: *omega }], omega0, phase, quad)?;
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    fn dir(t: f64, p: f64) -> Direction {
        Direction::new(t, p).unwrap()
    }

    #[test]
    fn uncollided_weights() {
        let z = Direction::z();
        assert!(close(uncollided_term(1.0, &z, &z).unwrap().weight, (-1.0f64).exp(), 1e-15));
        assert!((uncollided_term(2.0, &z, &z).unwrap().weight - 0.033_833_820_809_153_18).abs() < 1e-15);
        assert!(matches!(uncollided_term(0.0, &z, &z), Err(Error::SingularOrigin)));
    }

    #[test]
    fn uncollided_fourier_transform() {
        // int_0^inf e^{-s} e^{-isq} ds = 1/(1 + iq)
        for &q in &[0.0, 0.3, -2.0, 7.5] {
            let mut s = Complex64::new(0.0, 0.0);
            for p in 0..200 {
                let (x, w) = gauss_legendre_on(16, 0.25 * p as f64, 0.25 * (p + 1) as f64);
                for (x, w) in x.iter().zip(&w) {
                    s += w * Complex64::from_polar((-x).exp(), -q * x);
                }
            }
            assert!((s - Complex64::new(1.0, q).inv()).norm() < 1e-13);
        }
    }

    #[test]
    fn once_collided_weight_cases() {
        let iso = PhaseFunction::isotropic(0.7).unwrap();
        let q = PI / 4.0;
        // r along z; w and w0 in the xz plane on opposite sides.
        let w = dir(q, 0.0);
        let w0 = dir(q, PI);
        let t = once_collided_term([0.0, 0.0, 1.0], &w, &w0, &iso).unwrap();
        let expect = 0.7 / (4.0 * PI) * (-(2.0f64).sqrt()).exp() / 0.5;
        assert!(close(t.weight, expect, 1e-14));
        assert!(matches!(t.support, Support::Plane { .. }));

        let beyond = once_collided_term([0.0, 0.0, 1.0], &dir(2.0, 0.0), &dir(2.0, PI), &iso).unwrap();
        assert_eq!(beyond.weight, 0.0);
        let edge = once_collided_term([0.0, 0.0, 1.0], &dir(PI / 2.0, 0.0), &dir(PI / 2.0, PI), &iso);
        assert!(matches!(edge, Err(Error::CoplanarDegenerate(_))));
        let along = once_collided_term([0.0, 0.0, 1.0], &Direction::z(), &w0, &iso);
        assert!(matches!(along, Err(Error::CoplanarDegenerate(_))));
    }

    #[test]
    fn once_collided_weight_integrates_to_beam_line_sum() {
        // Scalar once-collided flux at r from a beam along w0, two ways: the closed
        // weight integrated over the in-plane flight angle, and the sum over scattering
        // sites s w0 of e^{-s} c p e^{-d}/d^2.
        let p = PhaseFunction::new(0.6, vec![1.0, 1.4, 0.5]).unwrap();
        let tau0: f64 = 1.1;
        let r = 1.3;
        let w0 = dir(tau0, 0.0);
        let rv = [0.0, 0.0, r];
        let panels = |a: f64, b: f64, n: usize, f: &dyn Fn(f64) -> f64| -> f64 {
            let h = (b - a) / n as f64;
            (0..n)
                .map(|i| {
                    let (x, w) = gauss_legendre_on(16, a + h * i as f64, a + h * (i + 1) as f64);
                    x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum::<f64>()
                })
                .sum()
        };
        let closed = panels(0.0, PI - tau0, 64, &|tau| {
            let w = dir(tau, PI);
            tau.sin() * once_collided_term(rv, &w, &w0, &p).unwrap().weight
        });
        let v0 = w0.to_vector();
        let line = panels(0.0, 45.0, 400, &|s| {
            let d = [rv[0] - s * v0[0], rv[1] - s * v0[1], rv[2] - s * v0[2]];
            let dn = norm3(d);
            let mu = dot3(d, v0) / dn;
            (-s).exp() * p.c() * p.cosine_density(mu) / (2.0 * PI) * (-dn).exp() / (dn * dn)
        });
        assert!(close(closed, line, 1e-10), "{closed} vs {line}");
    }

    #[test]
    fn tail_moments_match_frozen_values() {
        // Oscillatory quadrature at 30 digits.
        let cases = [
            (1, 40.0, -0.016_188_792_559_887_887_5),
            (1, 123.5, -0.004_578_265_788_305_476_5),
            (3, 40.0, -9.481_628_059_532_786_7e-6),
            (3, 123.5, -3.070_931_110_482_836_5e-7),
            (8, 40.0, -7.591_975_853_777_339e-14),
            (8, 123.5, -1.126_377_321_579_246e-17),
        ];
        for (p, x, v) in cases {
            assert!(close(sine_tail_moment(p, x), v, 1e-12), "p={p} x={x}");
        }
    }

    #[test]
    fn sine_transform_of_lorentzian() {
        // int_0^inf sin(kr) k/(1+k^2) dk = (pi/2) e^{-r}
        for &r in &[0.3, 1.0, 2.0, 5.0] {
            let t = sine_transform(r, |k| Ok(k / (1.0 + k * k)), 200.0, TailModel::InverseSquare).unwrap();
            assert!(close(t.value, 0.5 * PI * (-r).exp(), 1e-10), "r={r}: {}", t.value);
            assert!(t.error < 1e-9);
            let cut = sine_transform(r, |k| Ok(k / (1.0 + k * k)), 200.0, TailModel::None).unwrap();
            assert!((cut.value - t.value).abs() <= cut.error);
        }
    }

    // Adaptive oscillatory quadrature at 30 digits, total u(r).
    const REFERENCE: [(f64, f64, f64); 8] = [
        (0.9, 0.5, 6.067_454_550_803_239),
        (0.9, 1.0, 1.800_558_106_985_358_4),
        (0.9, 2.0, 0.466_544_093_482_144_2),
        (0.9, 5.0, 0.036_632_542_014_492_655),
        (0.3, 0.5, 3.083_021_833_133_063),
        (0.3, 1.0, 0.542_035_679_078_159_8),
        (0.3, 2.0, 0.060_994_893_774_062_21),
        (0.3, 5.0, 6.898_016_846_421_868e-4),
    ];

    #[test]
    fn isotropic_reference_golden_values() {
        for (c, r, u) in REFERENCE {
            let got = isotropic_reference_energy_density(r, c, &QuadratureSpec::default()).unwrap();
            assert!(close(got.total, u, 1e-9), "c={c} r={r}: {} vs {u}", got.total);
            assert!(got.error < 1e-8 * u);
        }
        assert!(close(isotropic_reference_density(1.0, 0.9).unwrap(), 1.800_558_106_985_358_4, 1e-9));
    }

    #[test]
    fn general_degree_at_zero_matches_reference() {
        let quad = QuadratureSpec::default();
        for (c, r, _) in REFERENCE {
            let p = PhaseFunction::isotropic(c).unwrap();
            let a = energy_density(r, &p, &quad).unwrap();
            let b = isotropic_reference_energy_density(r, c, &quad).unwrap();
            assert!(close(a.total, b.total, 1e-10), "c={c} r={r}");
        }
    }

    #[test]
    fn no_scattering_leaves_uncollided() {
        let p = PhaseFunction::isotropic(1e-300).unwrap();
        let e = energy_density(1.0, &p, &QuadratureSpec::default()).unwrap();
        assert!(close(e.total, (-1.0f64).exp(), 1e-14));
        assert!(close(isotropic_reference_density(1.0, 1e-300).unwrap(), 0.367_879_441_171_442_33, 1e-15));
    }

    #[test]
    fn integrand_is_real_and_decays_as_inverse_square() {
        let phases = [
            PhaseFunction::isotropic(0.9).unwrap(),
            PhaseFunction::new(0.5, vec![1.0, 1.0]).unwrap(),
            PhaseFunction::new(0.8, vec![1.0, 1.5, 0.5]).unwrap(),
            PhaseFunction::new(0.95, vec![1.0, 2.1, 1.4, 0.6]).unwrap(),
        ];
        for p in &phases {
            for i in 0..=60 {
                let k = 10f64.powf(-5.0 + 0.15 * i as f64);
                energy_density_integrand(k, p).unwrap();
            }
            let (k1, k2) = (50.0, 500.0);
            let slope = (energy_density_integrand(k2, p).unwrap() / energy_density_integrand(k1, p).unwrap()).ln() / (k2 / k1).ln();
            assert!((slope + 2.0).abs() < 0.2, "slope {slope}");
        }
    }

    #[test]
    fn energy_density_positive_and_linear_in_albedo() {
        let quad = QuadratureSpec::fast();
        for beta in [vec![1.0], vec![1.0, 1.0], vec![1.0, 1.5, 0.5]] {
            for &r in &[0.3, 1.0, 3.0] {
                for &c in &[0.2, 0.9] {
                    let p = PhaseFunction::new(c, beta.clone()).unwrap();
                    let e = energy_density(r, &p, &quad).unwrap();
                    assert!(e.total > 0.0 && e.scattered > 0.0);
                }
                let u1 = energy_density(r, &PhaseFunction::new(1e-3, beta.clone()).unwrap(), &quad).unwrap().scattered;
                let u2 = energy_density(r, &PhaseFunction::new(2e-3, beta.clone()).unwrap(), &quad).unwrap().scattered;
                assert!((u2 / u1 - 2.0).abs() < 1e-2, "ratio {}", u2 / u1);
            }
        }
    }

    #[test]
    fn shell_integrals() {
        assert!(close(shell_uncollided_density(1.0, 2.0).unwrap() * shell_volume(1.0, 2.0), (-1.0f64).exp() - (-2.0f64).exp(), 1e-15));
        // Every uncollided particle collides once; a fraction c of that weight scatters
        // and travels one mean free path on average.
        for p in [PhaseFunction::isotropic(0.6).unwrap(), PhaseFunction::new(0.6, vec![1.0, 2.0, 1.2]).unwrap()] {
            let total = once_collided_radial_integral(0.0, 40.0, &p);
            assert!(close(total, 0.6, 1e-8), "{total}");
        }
    }

    fn quad_small(lmax: usize) -> QuadratureSpec {
        QuadratureSpec { k_max: 4.0, n_k: 48, n_mu: 24, n_phi: 32, lmax, tail_model: TailModel::None }
    }

    #[test]
    fn isotropic_matrix_route_matches_closed_form() {
        let c = 0.9;
        let p = PhaseFunction::isotropic(c).unwrap();
        let w0 = dir(0.4, 1.0);
        let pts = [
            FieldPoint { r: [0.3, -0.2, 1.1], omega: dir(1.2, 2.0) },
            FieldPoint { r: [1.0, 0.5, 0.0], omega: dir(0.3, 5.0) },
        ];
        let quad = quad_small(8);
        let a = invert_full_batch(&pts, &w0, &p, &quad, Route::Matrix).unwrap();
        let b = invert_isotropic_reference(&pts, &w0, c, &quad).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert!(close(a.smooth, b.smooth, 1e-10), "{} vs {}", a.smooth, b.smooth);
            assert!(a.smooth > 0.0);
        }
    }

    #[test]
    fn matrix_and_spectral_routes_agree() {
        let p = PhaseFunction::new(0.8, vec![1.0, 1.5, 0.5]).unwrap();
        let pts = [
            FieldPoint { r: [0.0, 0.0, 1.0], omega: dir(0.9, 2.2) },
            FieldPoint { r: [0.0, 0.0, 1.0], omega: dir(2.5, 0.3) },
        ];
        let quad = QuadratureSpec { k_max: 2.0, n_k: 32, n_mu: 16, n_phi: 16, lmax: 60, tail_model: TailModel::None };
        let a = invert_full_batch(&pts, &Direction::z(), &p, &quad, Route::Matrix).unwrap();
        let b = invert_full_batch(&pts, &Direction::z(), &p, &quad, Route::Spectral).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert!(close(a.smooth, b.smooth, 1e-8), "{} vs {}", a.smooth, b.smooth);
        }
    }

    #[test]
    fn bessel_reduction_matches_full_quadrature() {
        let p = PhaseFunction::new(0.9, vec![1.0, 1.0]).unwrap();
        let quad = QuadratureSpec { k_max: 4.0, n_k: 48, n_mu: 24, n_phi: 64, lmax: 16, tail_model: TailModel::None };
        let pts = [
            FieldPoint { r: [0.0, 0.0, 1.5], omega: dir(1.0, 0.7) },
            FieldPoint { r: [0.8, -0.4, 0.6], omega: dir(2.0, 4.0) },
        ];
        let a = invert_full_batch(&pts, &Direction::z(), &p, &quad, Route::Spectral).unwrap();
        let b = invert_bessel_batch(&pts, &Direction::z(), &p, &quad).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert!(close(a.smooth, b.smooth, 1e-10), "{} vs {}", a.smooth, b.smooth);
        }
        let off = invert_bessel([0.0, 0.0, 1.0], &Direction::z(), &dir(0.3, 0.0), &p, &quad);
        assert!(matches!(off, Err(Error::Precondition(_))));
    }

    #[test]
    fn hansen_reduction_matches_numeric_azimuth() {
        let p = PhaseFunction::new(0.7, vec![1.0, 1.2, 0.4]).unwrap();
        let lmax = 12;
        let omega = dir(1.1, 0.5);
        let y = spherical_harmonics_table(lmax, lmax, &omega);
        for &(k, theta_k, x, phi_r) in &[(0.7, 0.9, 2.3, 0.4), (3.0, 2.0, 9.0, 5.1)] {
            let table = ModeTable::new(&FourierPoint::new(k, dir(theta_k, 0.0)).unwrap(), &Direction::z(), &p, lmax).unwrap();
            let bessel = bessel_azimuthal(&table, &y, x, phi_r);
            let n = 96;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let phi = 2.0 * PI * j as f64 / n as f64;
                let rotated = ModeTable::new(&FourierPoint::new(k, dir(theta_k, phi)).unwrap(), &Direction::z(), &p, lmax).unwrap();
                s += rotated.smooth_flux(&omega) * Complex64::from_polar(2.0 * PI / n as f64, x * (phi - phi_r).cos());
            }
            assert!((s - bessel).norm() < 1e-10 * bessel.norm(), "{s} vs {bessel}");
        }
    }

    #[test]
    fn reciprocity() {
        let p = PhaseFunction::new(0.85, vec![1.0, 1.3]).unwrap();
        let quad = quad_small(4);
        let r = [0.4, -0.7, 0.5];
        let (w, w0) = (dir(1.3, 0.4), dir(0.6, 2.9));
        let a = invert_full(r, &w, &w0, &p, &quad, Route::Matrix).unwrap();
        let b = invert_full([-r[0], -r[1], -r[2]], &w0.negated(), &w.negated(), &p, &quad, Route::Matrix).unwrap();
        assert!((a.smooth - b.smooth).abs() <= 1e-8 * a.smooth.abs() + a.quadrature_error + b.quadrature_error);
        assert!(close(a.smooth, b.smooth, 1e-8), "{} vs {}", a.smooth, b.smooth);
    }

    #[test]
    fn vanishing_albedo_vanishing_flux() {
        let p = PhaseFunction::new(1e-12, vec![1.0, 1.0]).unwrap();
        let quad = QuadratureSpec { k_max: 12.0, n_k: 96, ..quad_small(4) };
        let f = invert_full([0.0, 0.5, 0.5], &dir(1.0, 1.0), &Direction::z(), &p, &quad, Route::Spectral).unwrap();
        assert!(f.smooth.abs() < 1e-20);
        assert_eq!(f.singular[0].kind, SingularKind::Uncollided);
    }

    #[test]
    fn tail_divergence_is_reported() {
        // A cutoff well short of the decay scale leaves the integrand growing at k_max.
        let p = PhaseFunction::isotropic(0.5).unwrap();
        let quad = QuadratureSpec { k_max: 0.05, n_k: 16, n_mu: 8, n_phi: 8, lmax: 4, tail_model: TailModel::InverseSquare };
        let truncated = QuadratureSpec { tail_model: TailModel::None, ..quad };
        assert!(invert_full([0.0, 0.0, 1.0], &dir(0.5, 0.0), &Direction::z(), &p, &truncated, Route::Matrix).is_ok());
        let e = invert_full([0.0, 0.0, 1.0], &dir(0.5, 0.0), &Direction::z(), &p, &quad, Route::Matrix).unwrap_err();
        assert!(matches!(e, Error::TailDivergence(_)));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let q = QuadratureSpec::accurate();
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(serde_json::from_str::<QuadratureSpec>(&s).unwrap(), q);
        let partial: QuadratureSpec = serde_json::from_str(r#"{"k_max": 50.0, "tail_model": "none"}"#).unwrap();
        assert_eq!(partial.n_k, 512);
        assert_eq!(partial.tail_model, TailModel::None);
        assert!(QuadratureSpec { n_mu: 1, ..q }.validate().is_err());
        assert!(QuadratureSpec::profile("nope").is_err());
    }
}
