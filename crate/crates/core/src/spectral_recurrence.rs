//! Inversion-free route in Fourier space.
//!
//! For each azimuthal order `m` with `|m| <= L` the moments obey the inhomogeneous
//! three-term relation
//! `z h_l psibar_l - (l+1-m) psibar_{l+1} - (l+m) psibar_{l-1} = z S_l`.
//! Its solution is written with Chandrasekhar polynomials: the seed
//! `psibar_{|m|}` follows from the dispersion function `Lambda^m`, the remaining
//! degrees up to `L` from `(g_l psibar_{|m|} + chi_l) / g_{|m|}`, and degrees above `L`
//! from the minimal solution `Q_l`.
//!
//! The ladder is a forward recurrence for a subdominant solution, so it loses
//! digits at small `k`. When the loss is visible it is rerun in double-double.

use crate::error::{Error, Result};
use crate::fourier_kernel::FourierPoint;
use crate::real::{cfrom, cto, DoubleDouble, Real};
use crate::special::chandrasekhar::chandrasekhar_generic;
use crate::special::legendre::{legendre_p_complex_generic, legendre_p_real_nonneg, legendre_q_generic};
use crate::special::{
    harmonic_norm, spherical_harmonics_table, Direction, PhaseFunction, WignerTable,
};
use num_complex::{Complex, Complex64};

/// Cancellation factor above which the ladder is recomputed in double-double.
const EXTENDED_THRESHOLD: f64 = 1e4;
/// Above this the double-double ladder would keep fewer than 16 digits.
const BOUNDARY_THRESHOLD: f64 = 1e15;
/// Agreement required between the two forms of the dispersion function.
const LAMBDA_TOLERANCE: f64 = 1e-10;

/// Default ladder truncation for a phase function of degree `big_l`.
pub fn default_lmax(big_l: usize) -> usize {
    (2 * big_l + 8).max(24)
}

/// `(j - m)! / (j + m)!` for signed `m`, `|m| <= j`, formed from an exact integer product.
pub(crate) fn factorial_ratio<R: Real>(j: usize, m: i32) -> R {
    let am = m.unsigned_abs() as usize;
    let prod = ((j - am + 1)..=(j + am)).fold(R::one(), |acc, i| acc * R::from_usize(i));
    if m >= 0 {
        R::one() / prod
    } else {
        prod
    }
}

pub(crate) fn factorial<R: Real>(n: usize) -> R {
    (1..=n).fold(R::one(), |acc, i| acc * R::from_usize(i))
}

/// Factor carrying order `|m|` values to order `m`.
fn order_factor<R: Real>(l: usize, m: i32) -> R {
    if m >= 0 {
        return R::one();
    }
    let am = m.unsigned_abs() as usize;
    let r = factorial_ratio::<R>(l, am as i32);
    if am % 2 == 1 {
        -r
    } else {
        r
    }
}

/// `omega_l^m` and `c beta_l` evaluated in the working scalar, so that every identity the
/// closed form relies on holds to that scalar's precision.
fn omega<R: Real>(phase: &PhaseFunction, l: usize, m: i32) -> R {
    R::from_f64(phase.beta_l(l)) * factorial_ratio::<R>(l, m)
}

fn c_beta<R: Real>(phase: &PhaseFunction, l: usize) -> R {
    R::from_f64(phase.c()) * R::from_f64(phase.beta_l(l))
}

/// Polynomial and Legendre tables for one signed order, negative orders converted.
pub(crate) struct Tables<R: Real> {
    am: usize,
    g: Vec<Complex<R>>,
    rho: Vec<Complex<R>>,
    p: Vec<Complex<R>>,
    q: Vec<Complex<R>>,
}

impl<R: Real> Tables<R> {
    pub(crate) fn new(m: i32, z: Complex<R>, phase: &PhaseFunction, gmax: usize, qmax: usize, eps: f64) -> Self {
        let am = m.unsigned_abs() as usize;
        let scale = |v: Vec<Complex<R>>| -> Vec<Complex<R>> {
            v.into_iter()
                .enumerate()
                .map(|(i, x)| x * order_factor::<R>(am + i, m))
                .collect()
        };
        let g = scale(chandrasekhar_generic(gmax, am, z, phase, false));
        let rho = scale(chandrasekhar_generic(gmax, am, z, phase, true));
        let p = scale(legendre_p_complex_generic(gmax, am, z));
        let q = scale(legendre_q_generic(qmax.max(gmax), am, z, eps));
        Tables { am, g, rho, p, q }
    }

    pub(crate) fn g(&self, l: usize) -> Complex<R> {
        self.g[l - self.am]
    }
    pub(crate) fn rho(&self, l: usize) -> Complex<R> {
        self.rho[l - self.am]
    }
    pub(crate) fn p(&self, l: usize) -> Complex<R> {
        self.p[l - self.am]
    }
    pub(crate) fn q(&self, l: usize) -> Complex<R> {
        self.q[l - self.am]
    }
}

fn first_non_finite<R: Real>(v: &[Complex<R>], offset: usize) -> Option<usize> {
    v.iter()
        .position(|x| {
            let c = cto(*x);
            !(c.re.is_finite() && c.im.is_finite())
        })
        .map(|i| offset + i)
}

/// Sum and Wronskian forms of `Lambda^m`; needs `g` up to `L + 1`.
pub(crate) fn lambda_forms<R: Real>(m: i32, z: Complex<R>, t: &Tables<R>, phase: &PhaseFunction) -> (Complex<R>, Complex<R>) {
    let big_l = phase.degree();
    let am = t.am;
    let c = R::from_f64(phase.c());
    let gm = t.g(am);
    let pm = t.p(am);
    let mut sum = Complex::new(R::zero(), R::zero());
    for l in am..=big_l {
        sum = sum + t.q(l) * t.g(l) * omega::<R>(phase, l, m);
    }
    let sum_form = Complex::new(R::one(), R::zero()) - z * c * pm * sum / gm;
    let pref = factorial_ratio::<R>(big_l, m) * R::from_f64(big_l as f64 + 1.0 - m as f64);
    let wronskian = pm / gm * pref * (t.g(big_l + 1) * t.q(big_l) - t.g(big_l) * t.q(big_l + 1));
    (sum_form, wronskian)
}

/// `chi_l` for `|m| <= l <= lmax`; `s` holds `S_{|m|} ..= S_L`, `g` and `rho` reach `lmax`.
fn chi_generic<R: Real>(m: i32, z: Complex<R>, t: &Tables<R>, s: &[Complex<R>], lmax: usize) -> Vec<Complex<R>> {
    let am = t.am;
    let zero = Complex::new(R::zero(), R::zero());
    let s_at = |j: usize| s.get(j - am).copied().unwrap_or(zero);
    let fact2m = factorial::<R>(2 * am);
    let b = R::from_f64(am as f64 + 1.0 - m as f64);
    let boundary = z * s_at(am) / (t.rho(am + 1) * b);
    (am..=lmax)
        .map(|l| {
            let (gl, rl) = (t.g(l), t.rho(l));
            let mut sum = zero;
            for j in (am + 1)..=l.min(am + s.len().saturating_sub(1)) {
                let w = factorial_ratio::<R>(j, m);
                sum = sum + (t.rho(j) * gl - t.g(j) * rl) * s_at(j) * w;
            }
            t.g(am) * (sum * fact2m - rl * boundary)
        })
        .collect()
}

/// Moments `|m| ..= L` from the three-term relation run downward.
///
/// Above `L` the moments are `A Q_l`. Starting from `Q_L, Q_{L+1}` the relation is run down
/// once without and once with the source, and the boundary row at `l = |m|` (where the
/// `l - 1` term is absent) fixes `A`. Downward is the stable direction for the minimal
/// solution, so this holds its accuracy at any `k`.
fn downward_moments<R: Real>(m: i32, z: Complex<R>, t: &Tables<R>, s: &[Complex<R>], phase: &PhaseFunction) -> Vec<Complex<R>> {
    let big_l = phase.degree();
    let am = t.am;
    let zero = Complex::new(R::zero(), R::zero());
    let h = |l: usize| R::from_usize(2 * l + 1) - c_beta::<R>(phase, l);
    let up = |l: usize| R::from_f64(l as f64 + 1.0 - m as f64);
    let n = big_l + 2 - am;
    let mut x = vec![zero; n];
    let mut y = vec![zero; n];
    x[n - 1] = t.q(big_l + 1);
    x[n - 2] = t.q(big_l);
    for l in ((am + 1)..=big_l).rev() {
        let i = l - am;
        let down = R::from_f64(l as f64 + m as f64);
        x[i - 1] = (z * h(l) * x[i] - x[i + 1] * up(l)) / down;
        y[i - 1] = (z * h(l) * y[i] - y[i + 1] * up(l) - z * s[i]) / down;
    }
    let hx = z * h(am) * x[0] - x[1] * up(am);
    let hy = z * h(am) * y[0] - y[1] * up(am);
    let a = (z * s[0] - hy) / hx;
    (0..(n - 1)).map(|i| x[i] * a + y[i]).collect()
}

struct Solved<R: Real> {
    lambda_sum: Complex<R>,
    lambda: Complex<R>,
    chi: Vec<Complex<R>>,
    psibar: Vec<Complex<R>>,
    smooth: Vec<Complex<R>>,
    once: Vec<Complex<R>>,
    condition: f64,
}

/// Ladder, tail and split moments for one order with `|m| <= L`.
///
/// With `boundary` set, the moments up to `L` come from the downward boundary-value solve
/// instead of the closed-form ladder; `chi`, `Lambda` and the condition estimate are still
/// those of the closed form.
fn solve_generic<R: Real>(
    m: i32,
    k: f64,
    tsrc: &[Complex64],
    phase: &PhaseFunction,
    lmax: usize,
    eps: f64,
    boundary: bool,
) -> Result<Solved<R>> {
    let big_l = phase.degree();
    let am = m.unsigned_abs() as usize;
    let z = Complex::new(R::zero(), R::one() / R::from_f64(k));
    let tab = Tables::new(m, z, phase, big_l + 1, lmax, eps);
    if let Some(l) = first_non_finite(&tab.g, am).or_else(|| first_non_finite(&tab.rho, am)) {
        return Err(Error::Range { l });
    }
    let c = R::from_f64(phase.c());
    let t: Vec<Complex<R>> = tsrc.iter().map(|v| cfrom::<R>(*v)).collect();
    let s: Vec<Complex<R>> = t
        .iter()
        .enumerate()
        .map(|(i, v)| *v * c_beta::<R>(phase, am + i))
        .collect();
    let (lambda_sum, lambda) = lambda_forms(m, z, &tab, phase);
    let chi = chi_generic(m, z, &tab, &s, big_l);
    let gm = tab.g(am);
    let pm = tab.p(am);

    // Magnitudes of the terms that cancel inside chi_l, used for the condition estimate.
    let nrm = |v: Complex<R>| cto(v).norm();
    let edge = nrm(z * s[0] / (tab.rho(am + 1) * R::from_f64(am as f64 + 1.0 - m as f64)));
    let fact2m = factorial::<f64>(2 * am);
    let chi_scale: Vec<f64> = (am..=big_l)
        .map(|l| {
            let (gl, rl) = (nrm(tab.g(l)), nrm(tab.rho(l)));
            let mut sum = 0.0;
            for j in (am + 1)..=l {
                let w = factorial_ratio::<f64>(j, m);
                sum += w * (nrm(tab.rho(j)) * gl + nrm(tab.g(j)) * rl) * nrm(s[j - am]);
            }
            nrm(tab.g(am)) * (fact2m * sum + rl * edge)
        })
        .collect();

    let gm_abs = nrm(gm);
    let mut acc = Complex::new(R::zero(), R::zero());
    let mut acc_scale = 0.0;
    for l in am..=big_l {
        let i = l - am;
        let w = tab.q(l) * pm * omega::<R>(phase, l, m);
        acc = acc + w * (t[i] + chi[i] / gm);
        acc_scale += nrm(w) * (nrm(t[i]) + chi_scale[i] / gm_abs);
    }
    let seed = z * c * acc / lambda;

    let mut psibar = Vec::with_capacity(lmax + 1 - am);
    if boundary {
        psibar = downward_moments(m, z, &tab, &s, phase);
    } else {
        psibar.push(seed);
        for l in (am + 1)..=big_l {
            psibar.push((tab.g(l) * seed + chi[l - am]) / gm);
        }
    }
    if lmax > big_l {
        // Above L the source vanishes and the moments follow the minimal solution.
        let mut top = psibar[big_l - am];
        for l in (big_l + 1)..=lmax {
            let prev = tab.q(l - 1);
            top = if nrm(prev) == 0.0 { Complex::new(R::zero(), R::zero()) } else { top * tab.q(l) / prev };
            psibar.push(top);
        }
    }

    // Ratio of the largest cancelling term to the result, seed stage included.
    let seed_abs = nrm(seed);
    let seed_condition = if nrm(acc) > 0.0 { acc_scale / nrm(acc) } else { 1.0 };
    let mut condition: f64 = seed_condition;
    for l in (am + 1)..=big_l {
        let den = gm_abs * nrm(psibar[l - am]);
        if den > 0.0 {
            let num = nrm(tab.g(l)) * seed_abs * seed_condition + chi_scale[l - am];
            condition = condition.max(num / den);
        }
    }

    // Split into the once-collided part and the rest: sum_j omega_j L_lj x_j with
    // L_lj = z P_min Q_max, where x is the source T or the moments themselves.
    let split = |x: &[Complex<R>]| -> Vec<Complex<R>> {
        let zero = Complex::new(R::zero(), R::zero());
        let w: Vec<Complex<R>> =
            (am..=big_l).map(|j| x[j - am] * c * omega::<R>(phase, j, m)).collect();
        (am..=lmax)
            .map(|l| {
                let mut lower = zero;
                let mut upper = zero;
                for j in am..=big_l {
                    if j <= l {
                        lower = lower + w[j - am] * tab.p(j);
                    } else {
                        upper = upper + w[j - am] * tab.q(j);
                    }
                }
                let pl = if l <= big_l { tab.p(l) } else { zero };
                z * (tab.q(l) * lower + pl * upper)
            })
            .collect()
    };
    let smooth = split(&psibar[..(big_l.min(lmax) + 1 - am)]);
    let once = split(&t);

    Ok(Solved { lambda_sum, lambda, chi, psibar, smooth, once, condition })
}

/// Everything the ladder produces for one signed order.
#[derive(Clone, Debug)]
pub(crate) struct OrderSolution {
    pub s: Vec<Complex64>,
    pub chi: Vec<Complex64>,
    pub lambda: Complex64,
    pub psibar: Vec<Complex64>,
    pub smooth: Vec<Complex64>,
    pub once: Vec<Complex64>,
    pub condition: f64,
    pub method: LadderMethod,
}

/// How the moments up to the phase-function degree were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LadderMethod {
    /// Closed-form ladder in `f64`.
    Direct,
    /// Closed-form ladder in double-double.
    Extended,
    /// Downward boundary-value solve, used when even double-double would lose digits.
    Boundary,
}

pub(crate) fn lambda_mismatch<R: Real>(a: Complex<R>, b: Complex<R>) -> f64 {
    let (a, b) = (cto(a), cto(b));
    (a - b).norm() / b.norm().max(1e-300)
}

fn to_f64<R: Real>(v: &[Complex<R>]) -> Vec<Complex64> {
    v.iter().map(|x| cto(*x)).collect()
}

pub(crate) fn solve_order(
    m: i32,
    kpoint: &FourierPoint,
    tsrc: &[Complex64],
    phase: &PhaseFunction,
    lmax: usize,
) -> Result<OrderSolution> {
    let big_l = phase.degree();
    let am = m.unsigned_abs() as usize;
    if am > big_l {
        return Err(Error::Domain(format!("order {m} exceeds the phase-function degree {big_l}")));
    }
    if lmax < big_l {
        return Err(Error::Domain(format!("ladder truncation {lmax} below the phase-function degree {big_l}")));
    }
    let s: Vec<Complex64> =
        tsrc.iter().enumerate().map(|(i, v)| v * phase.c() * phase.beta_l(am + i)).collect();
    let pack = |chi, lambda, psibar, smooth, once, condition, method| OrderSolution {
        s: s.clone(),
        chi,
        lambda,
        psibar,
        smooth,
        once,
        condition,
        method,
    };
    let fast = solve_generic::<f64>(m, kpoint.k(), tsrc, phase, lmax, 1e-17, false);
    if let Ok(f) = fast {
        let finite = first_non_finite(&f.psibar, am).is_none();
        if finite && f.condition <= EXTENDED_THRESHOLD && lambda_mismatch(f.lambda_sum, f.lambda) <= LAMBDA_TOLERANCE {
            return Ok(pack(f.chi, f.lambda, f.psibar, f.smooth, f.once, f.condition, LadderMethod::Direct));
        }
    }
    let mut d = solve_generic::<DoubleDouble>(m, kpoint.k(), tsrc, phase, lmax, 1e-32, false)?;
    let mut method = LadderMethod::Extended;
    if d.condition > BOUNDARY_THRESHOLD {
        d = solve_generic::<DoubleDouble>(m, kpoint.k(), tsrc, phase, lmax, 1e-32, true)?;
        method = LadderMethod::Boundary;
    }
    let mismatch = lambda_mismatch(d.lambda_sum, d.lambda);
    if mismatch > LAMBDA_TOLERANCE {
        return Err(Error::NumericalConsistency(format!(
            "dispersion function forms differ by {mismatch:e} at k = {}, m = {m}",
            kpoint.k()
        )));
    }
    let psibar = to_f64(&d.psibar);
    if let Some(l) = first_non_finite(&psibar, am) {
        return Err(Error::Range { l });
    }
    Ok(pack(to_f64(&d.chi), cto(d.lambda), psibar, to_f64(&d.smooth), to_f64(&d.once), d.condition, method))
}

/// `T_l^m = (z/(z - khat.w0)) P_l^m(mu0') e^{im(phi0 - phi0')}` for `|m| <= l <= L`, where primes
/// are rotated-frame coordinates, expanded through Wigner matrices in lab coordinates.
pub(crate) fn source_factors(
    m: i32,
    kpoint: &FourierPoint,
    omega0: &Direction,
    big_l: usize,
    wigner: &WignerTable,
) -> Vec<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > big_l {
        return Vec::new();
    }
    let z = kpoint.z();
    let khat = kpoint.khat();
    let src = z / (z - khat.dot(omega0));
    let mu0 = omega0.mu();
    let (phik, phi0) = (khat.phi(), omega0.phi());
    // Legendre values P_l^{m'}(mu0) for all m' >= 0, l <= L.
    let plm: Vec<Vec<f64>> = (0..=big_l).map(|a| legendre_p_real_nonneg(big_l, a, mu0)).collect();
    (am..=big_l)
        .map(|l| {
            let nm = harmonic_norm(l, m);
            let li = l as i32;
            let mut sum = Complex64::new(0.0, 0.0);
            for mp in -li..=li {
                let ap = mp.unsigned_abs() as usize;
                let p = plm[ap][l - ap] * order_factor::<f64>(l, mp);
                let d = wigner.get(l, mp, m);
                let ratio = harmonic_norm(l, mp) / nm;
                sum += Complex64::from_polar(ratio * d * p, mp as f64 * (phik - phi0));
            }
            src * Complex64::from_polar(1.0, m as f64 * phi0) * sum
        })
        .collect()
}

fn validate_order(l: usize, m: i32) -> Result<()> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.unsigned_abs())));
    }
    Ok(())
}

/// Source moment `S_l^m = c beta_l T_l^m`; zero above the phase-function degree.
pub fn source_moment(l: usize, m: i32, kpoint: &FourierPoint, omega0: &Direction, phase: &PhaseFunction) -> Result<Complex64> {
    validate_order(l, m)?;
    let big_l = phase.degree();
    if l > big_l {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let wigner = WignerTable::new(big_l, big_l, kpoint.khat().theta());
    let t = source_factors(m, kpoint, omega0, big_l, &wigner);
    Ok(t[l - m.unsigned_abs() as usize] * phase.c() * phase.beta_l(l))
}

/// The inhomogeneous ladder term `chi_l^m`, for any `l >= |m|`.
pub fn chi(l: usize, m: i32, kpoint: &FourierPoint, omega0: &Direction, phase: &PhaseFunction) -> Result<Complex64> {
    validate_order(l, m)?;
    let big_l = phase.degree();
    let am = m.unsigned_abs() as usize;
    if am > big_l {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let wigner = WignerTable::new(big_l, big_l, kpoint.khat().theta());
    let t = source_factors(m, kpoint, omega0, big_l, &wigner);
    let s: Vec<Complex64> = t.iter().enumerate().map(|(i, v)| v * phase.c() * phase.beta_l(am + i)).collect();
    let z = kpoint.z();
    let top = l.max(big_l + 1);
    let tab = Tables::<f64>::new(m, z, phase, top, top, 1e-17);
    Ok(chi_generic(m, z, &tab, &s, l)[l - am])
}

/// Dispersion function `Lambda^m(z)`, returned in Wronskian form after checking it against
/// the sum form. Equal to one when `|m|` exceeds the phase-function degree.
pub fn dispersion_lambda(m: i32, z: Complex64, phase: &PhaseFunction) -> Result<Complex64> {
    crate::special::legendre::check_cut(z)?;
    let big_l = phase.degree();
    if m.unsigned_abs() as usize > big_l {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let tab = Tables::<f64>::new(m, z, phase, big_l + 1, big_l + 1, 1e-17);
    let (a, b) = lambda_forms(m, z, &tab, phase);
    if lambda_mismatch(a, b) <= LAMBDA_TOLERANCE {
        return Ok(b);
    }
    let zd = cfrom::<DoubleDouble>(z);
    let tab = Tables::<DoubleDouble>::new(m, zd, phase, big_l + 1, big_l + 1, 1e-32);
    let (a, b) = lambda_forms(m, zd, &tab, phase);
    let mismatch = lambda_mismatch(a, b);
    if mismatch > LAMBDA_TOLERANCE {
        return Err(Error::NumericalConsistency(format!(
            "dispersion function forms differ by {mismatch:e} at z = {z}, m = {m}"
        )));
    }
    Ok(cto(b))
}

fn order_solution(
    m: i32,
    kpoint: &FourierPoint,
    omega0: &Direction,
    phase: &PhaseFunction,
    lmax: usize,
) -> Result<OrderSolution> {
    let big_l = phase.degree();
    let wigner = WignerTable::new(big_l, big_l, kpoint.khat().theta());
    let t = source_factors(m, kpoint, omega0, big_l, &wigner);
    solve_order(m, kpoint, &t, phase, lmax.max(big_l))
}

/// Seed moment `psibar_{|m|}^m`; zero when `|m|` exceeds the phase-function degree.
pub fn psi_bar_seed(m: i32, kpoint: &FourierPoint, omega0: &Direction, phase: &PhaseFunction) -> Result<Complex64> {
    if m.unsigned_abs() as usize > phase.degree() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(order_solution(m, kpoint, omega0, phase, phase.degree())?.psibar[0])
}

/// Moments `psibar_{|m|}^m ..= psibar_lmax^m`.
pub fn psi_bar_ladder(
    lmax: usize,
    m: i32,
    kpoint: &FourierPoint,
    omega0: &Direction,
    phase: &PhaseFunction,
) -> Result<Vec<Complex64>> {
    let am = m.unsigned_abs() as usize;
    if lmax < am {
        return Err(Error::Domain(format!("lmax = {lmax} below |m| = {am}")));
    }
    if am > phase.degree() {
        return Ok(vec![Complex64::new(0.0, 0.0); lmax + 1 - am]);
    }
    let mut v = order_solution(m, kpoint, omega0, phase, lmax)?.psibar;
    v.truncate(lmax + 1 - am);
    Ok(v)
}

/// Once-collided moments `c sum_j omega_j L_lj T_j` for `|m| <= l <= lmax`.
pub fn once_collided_moments(
    lmax: usize,
    m: i32,
    kpoint: &FourierPoint,
    omega0: &Direction,
    phase: &PhaseFunction,
) -> Result<Vec<Complex64>> {
    let am = m.unsigned_abs() as usize;
    if lmax < am {
        return Err(Error::Domain(format!("lmax = {lmax} below |m| = {am}")));
    }
    if am > phase.degree() {
        return Ok(vec![Complex64::new(0.0, 0.0); lmax + 1 - am]);
    }
    let mut v = order_solution(m, kpoint, omega0, phase, lmax)?.once;
    v.truncate(lmax + 1 - am);
    Ok(v)
}

/// Lab-frame coefficient `kappa_lm`.
pub fn kappa_lm(l: usize, m: i32, kpoint: &FourierPoint, omega0: &Direction, phase: &PhaseFunction) -> Result<Complex64> {
    validate_order(l, m)?;
    Ok(ModeTable::new(kpoint, omega0, phase, l.max(phase.degree()))?.kappa(l, m))
}

/// All Fourier-space moments at one wave vector.
///
/// `psibar` covers everything scattered at least once; `smooth` drops the once-collided
/// part and is what the real-space quadrature integrates. The lab-frame coefficients
/// satisfy `psihat(w) = sum_{l,m} Y_lm(w) e^{-im phi_k} kappa_lm`.
#[derive(Clone, Debug)]
pub struct ModeTable {
    lmax: usize,
    big_l: usize,
    khat_phi: f64,
    orders: Vec<OrderSolution>,
    kappa: Vec<Vec<Complex64>>,
    kappa_smooth: Vec<Vec<Complex64>>,
}

impl ModeTable {
    pub fn new(kpoint: &FourierPoint, omega0: &Direction, phase: &PhaseFunction, lmax: usize) -> Result<Self> {
        let big_l = phase.degree();
        if lmax < big_l {
            return Err(Error::Domain(format!("lmax = {lmax} below the phase-function degree {big_l}")));
        }
        let khat = kpoint.khat();
        let wigner = WignerTable::new(lmax, big_l, khat.theta());
        let li = big_l as i32;
        let mut orders = Vec::with_capacity(2 * big_l + 1);
        for m in -li..=li {
            let t = source_factors(m, kpoint, omega0, big_l, &wigner);
            orders.push(solve_order(m, kpoint, &t, phase, lmax)?);
        }
        let phi0 = omega0.phi();
        let build = |pick: &dyn Fn(&OrderSolution) -> &Vec<Complex64>| -> Vec<Vec<Complex64>> {
            (0..=lmax)
                .map(|l| {
                    let top = l.min(big_l) as i32;
                    let lm = l as i32;
                    (-lm..=lm)
                        .map(|mp| {
                            let mut s = Complex64::new(0.0, 0.0);
                            for m in -top..=top {
                                let o = &orders[(m + li) as usize];
                                let v = pick(o)[l - m.unsigned_abs() as usize];
                                let f = harmonic_norm(l, m) * wigner.get(l, mp, m);
                                s += Complex64::from_polar(f, -(m as f64) * phi0) * v;
                            }
                            s
                        })
                        .collect()
                })
                .collect()
        };
        let kappa = build(&|o| &o.psibar);
        let kappa_smooth = build(&|o| &o.smooth);
        Ok(ModeTable { lmax, big_l, khat_phi: khat.phi(), orders, kappa, kappa_smooth })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    fn order(&self, m: i32) -> Option<&OrderSolution> {
        if m.unsigned_abs() as usize > self.big_l {
            None
        } else {
            Some(&self.orders[(m + self.big_l as i32) as usize])
        }
    }

    fn entry(&self, l: usize, m: i32, pick: impl Fn(&OrderSolution) -> &Vec<Complex64>) -> Complex64 {
        let am = m.unsigned_abs() as usize;
        match self.order(m) {
            Some(o) if l >= am => pick(o).get(l - am).copied().unwrap_or_default(),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// `S_l^m`, zero outside `|m| <= l <= L`.
    pub fn s(&self, l: usize, m: i32) -> Complex64 {
        self.entry(l, m, |o| &o.s)
    }

    pub fn chi(&self, l: usize, m: i32) -> Complex64 {
        self.entry(l, m, |o| &o.chi)
    }

    pub fn psibar(&self, l: usize, m: i32) -> Complex64 {
        self.entry(l, m, |o| &o.psibar)
    }

    /// Moments with the once-collided part removed.
    pub fn smooth(&self, l: usize, m: i32) -> Complex64 {
        self.entry(l, m, |o| &o.smooth)
    }

    pub fn once_collided(&self, l: usize, m: i32) -> Complex64 {
        self.entry(l, m, |o| &o.once)
    }

    /// `Lambda^m`, one beyond the phase-function degree.
    pub fn lambda(&self, m: i32) -> Complex64 {
        self.order(m).map_or(Complex64::new(1.0, 0.0), |o| o.lambda)
    }

    pub fn kappa(&self, l: usize, m: i32) -> Complex64 {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            return Complex64::new(0.0, 0.0);
        }
        self.kappa[l][(m + l as i32) as usize]
    }

    pub fn kappa_smooth(&self, l: usize, m: i32) -> Complex64 {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            return Complex64::new(0.0, 0.0);
        }
        self.kappa_smooth[l][(m + l as i32) as usize]
    }

    /// Largest cancellation factor met by the ladder over all orders.
    pub fn ladder_condition(&self) -> f64 {
        self.orders.iter().map(|o| o.condition).fold(1.0, f64::max)
    }

    /// The most defensive ladder evaluation any order needed.
    pub fn ladder_method(&self) -> LadderMethod {
        self.orders.iter().map(|o| o.method).max().unwrap_or(LadderMethod::Direct)
    }

    /// A-posteriori truncation estimate `max_m |psibar_lmax^m| / |psibar_L^m|`.
    pub fn tail_estimate(&self) -> f64 {
        let li = self.big_l as i32;
        (-li..=li)
            .map(|m| {
                let top = self.psibar(self.lmax, m).norm();
                let base = self.psibar(self.big_l, m).norm();
                if base > 0.0 {
                    top / base
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    fn reconstruct(&self, omega: &Direction, table: &[Vec<Complex64>]) -> Complex64 {
        let y = spherical_harmonics_table(self.lmax, self.lmax, omega);
        self.reconstruct_with(&y, table)
    }

    fn reconstruct_with(&self, y: &[Vec<Complex64>], table: &[Vec<Complex64>]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (l, row) in table.iter().enumerate() {
            let li = l as i32;
            for mp in -li..=li {
                let i = (mp + li) as usize;
                s += y[l][i] * Complex64::from_polar(1.0, -(mp as f64) * self.khat_phi) * row[i];
            }
        }
        s
    }

    /// Scattered part of the Fourier-space angular flux from the truncated series.
    pub fn flux(&self, omega: &Direction) -> Complex64 {
        self.reconstruct(omega, &self.kappa)
    }

    /// Multiply-collided part of the Fourier-space angular flux from the truncated series.
    pub fn smooth_flux(&self, omega: &Direction) -> Complex64 {
        self.reconstruct(omega, &self.kappa_smooth)
    }

    /// [`ModeTable::smooth_flux`] with `Y_lm(w)` precomputed by
    /// `spherical_harmonics_table(n, n, w)` for some `n >= lmax`.
    pub fn smooth_flux_with(&self, y: &[Vec<Complex64>]) -> Complex64 {
        assert!(y.len() > self.lmax, "harmonics table shorter than lmax");
        self.reconstruct_with(y, &self.kappa_smooth)
    }
}
