//! Scalar abstraction over `f64` and a double-double type.
//!
//! The recurrences for the Chandrasekhar ladder lose roughly `2(l - |m|) log10(1/k)`
//! digits at small wavenumber. Running the same generic code in [`DoubleDouble`]
//! recovers those digits without a second implementation.

use num_complex::Complex;
use num_traits::{Num, One, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

/// Real scalar usable by the generic recurrences.
pub trait Real:
    Copy + Debug + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn pi() -> Self;

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
}

/// Principal square root in the generic scalar.
pub fn csqrt<R: Real>(w: Complex<R>) -> Complex<R> {
    let zero = R::zero();
    let half = R::from_f64(0.5);
    if w.re == zero && w.im == zero {
        return Complex::new(zero, zero);
    }
    let r = (w.re * w.re + w.im * w.im).sqrt();
    let a = ((r + w.re.abs()) * half).sqrt();
    if w.re >= zero {
        Complex::new(a, w.im / (a + a))
    } else {
        let b = w.im.abs() / (a + a);
        if w.im < zero {
            Complex::new(b, -a)
        } else {
            Complex::new(b, a)
        }
    }
}

/// Principal logarithm in the generic scalar.
pub fn cln<R: Real>(w: Complex<R>) -> Complex<R> {
    let r2 = w.re * w.re + w.im * w.im;
    Complex::new(r2.ln() * R::from_f64(0.5), w.im.atan2(w.re))
}

pub fn cfrom<R: Real>(z: Complex<f64>) -> Complex<R> {
    Complex::new(R::from_f64(z.re), R::from_f64(z.im))
}

pub fn cto(z: Complex<impl Real>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, about 32 significant digits.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    const LN2: DoubleDouble = DoubleDouble::new(6.931471805599453e-1, 2.3190468138462996e-17);
    const PI: DoubleDouble = DoubleDouble::new(3.141592653589793, 1.2246467991473532e-16);

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (s, e2) = quick_two_sum(p, e + self.lo * b);
        DoubleDouble::new(s, e2)
    }

    fn ldexp(self, e: i32) -> Self {
        let f = 2f64.powi(e);
        DoubleDouble::new(self.hi * f, self.lo * f)
    }

    pub fn exp(self) -> Self {
        if self.hi == 0.0 {
            return DoubleDouble::one();
        }
        let k = (self.hi / Self::LN2.hi).round();
        let r = (self - Self::LN2.mul_f64(k)).ldexp(-5);
        // Taylor series on the reduced argument, then undo the scaling by squaring.
        let mut term = DoubleDouble::one();
        let mut sum = DoubleDouble::one();
        for n in 1..=16 {
            term = term * r / DoubleDouble::from(n as f64);
            sum = sum + term;
        }
        for _ in 0..5 {
            sum = sum * sum;
        }
        sum.ldexp(k as i32)
    }

    fn atan(self) -> Self {
        let one = DoubleDouble::one();
        if self.hi < 0.0 {
            return -(-self).atan();
        }
        if self.hi > 1.0 {
            return Self::PI.ldexp(-1) - (one / self).atan();
        }
        let mut x = self;
        let mut doublings = 0;
        while x.hi > 1e-2 {
            x = x / (one + (one + x * x).sqrt());
            doublings += 1;
        }
        let x2 = x * x;
        let mut sum = DoubleDouble::zero();
        let mut pow = x;
        for n in 0..10 {
            let t = pow / DoubleDouble::from((2 * n + 1) as f64);
            sum = if n % 2 == 0 { sum + t } else { sum - t };
            pow = pow * x2;
        }
        sum.ldexp(doublings)
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::new(x, 0.0)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (s, e) = quick_two_sum(s, e + f);
        DoubleDouble::new(s, e)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble::new(-self.hi, -self.lo)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (s, e) = quick_two_sum(p, e);
        DoubleDouble::new(s, e)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (s, e) = quick_two_sum(q1, q2);
        DoubleDouble::new(s, e) + DoubleDouble::from(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, b: Self) -> Self {
        let q = (self / b).hi.trunc();
        self - b.mul_f64(q)
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble::new(0.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        DoubleDouble::new(1.0, 0.0)
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(DoubleDouble::from)
    }
}

impl Real for DoubleDouble {
    fn from_f64(x: f64) -> Self {
        DoubleDouble::from(x)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::zero();
        }
        // One Newton step on the f64 estimate doubles the digits.
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let r = (self - DoubleDouble::new(p, e)).hi / (2.0 * s);
        let (h, l) = quick_two_sum(s, r);
        DoubleDouble::new(h, l)
    }
    fn ln(self) -> Self {
        let mut y = DoubleDouble::from(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - DoubleDouble::one();
        }
        y
    }
    fn atan2(self, x: Self) -> Self {
        let zero = DoubleDouble::zero();
        if x.hi == 0.0 && self.hi == 0.0 {
            return zero;
        }
        if x.hi == 0.0 {
            return if self.hi > 0.0 { Self::PI.ldexp(-1) } else { -Self::PI.ldexp(-1) };
        }
        let a = (self / x).atan();
        if x.hi > 0.0 {
            a
        } else if self.hi >= 0.0 {
            a + Self::PI
        } else {
            a - Self::PI
        }
    }
    fn pi() -> Self {
        Self::PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DoubleDouble {
        DoubleDouble::from(x)
    }

    #[test]
    fn arithmetic_keeps_low_word() {
        let third = dd(1.0) / dd(3.0);
        let back = third * dd(3.0) - dd(1.0);
        assert!(back.to_f64().abs() < 1e-31);
        let tiny = dd(1.0) + dd(1e-20) - dd(1.0);
        assert!((tiny.to_f64() - 1e-20).abs() < 1e-34);
    }

    #[test]
    fn sqrt_squares_back() {
        let two = dd(2.0);
        let s = two.sqrt();
        assert!((s * s - two).to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_ln_round_trip() {
        for &x in &[0.3, 1.0, 7.5, 123.0, 1e-5] {
            let y = dd(x).ln().exp();
            assert!(((y - dd(x)) / dd(x)).to_f64().abs() < 1e-29, "x = {x}");
        }
        assert!((dd(1.0).exp().to_f64() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn atan_matches_known_values() {
        // atan(1) = pi/4 to the full double-double width.
        let q = dd(1.0).atan2(dd(1.0)) * dd(4.0) - DoubleDouble::pi();
        assert!(q.to_f64().abs() < 1e-29);
        for &x in &[0.01, 0.4, 3.0, 250.0] {
            let a = dd(x).atan2(dd(1.0)).to_f64();
            assert!((a - x.atan()).abs() < 1e-15);
        }
        assert!((dd(-1.0).atan2(dd(-1.0)).to_f64() + 0.75 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn complex_helpers_use_principal_branch() {
        let w = csqrt(Complex::new(-1.0, 1.0)) * csqrt(Complex::new(1.0, 1.0));
        assert!((w - Complex::new(0.0, 2f64.sqrt())).norm() < 1e-15);
        for w in [Complex::new(-4.0, -1.0), Complex::new(-0.5, 3.0), Complex::new(2.0, -7.0)] {
            assert!((csqrt(w) - w.sqrt()).norm() < 1e-15);
        }
        let l = cln(Complex::new(DoubleDouble::from(0.0), DoubleDouble::from(1.0)));
        assert!((l.im.to_f64() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
