use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Unit vector on the sphere given by polar angle `theta` and azimuth `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// `theta` in `[0, pi]`; `phi` is reduced into `[0, 2pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) || !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!("theta = {theta} outside [0, pi]")));
        }
        Ok(Direction { theta, phi: phi.rem_euclid(2.0 * PI) })
    }

    pub fn z() -> Self {
        Direction { theta: 0.0, phi: 0.0 }
    }

    /// Direction of a nonzero vector.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain("zero or non-finite vector has no direction".into()));
        }
        let theta = (v[2] / n).clamp(-1.0, 1.0).acos();
        Ok(Direction { theta, phi: v[1].atan2(v[0]).rem_euclid(2.0 * PI) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn mu(&self) -> f64 {
        self.theta.cos()
    }

    pub fn to_vector(&self) -> [f64; 3] {
        let s = self.theta.sin();
        [s * self.phi.cos(), s * self.phi.sin(), self.theta.cos()]
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        let a = self.to_vector();
        let b = other.to_vector();
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub fn negated(&self) -> Direction {
        let v = self.to_vector();
        Direction::from_vector([-v[0], -v[1], -v[2]]).expect("unit vector")
    }
}

pub type Mat3 = [[f64; 3]; 3];

pub fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

pub fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

pub fn mat_t_vec(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[0][i] * v[0] + a[1][i] * v[1] + a[2][i] * v[2])
}

/// Frame whose polar axis is `axis`: `R = Rz(phi) Ry(theta)`.
#[derive(Clone, Copy, Debug)]
pub struct RotatedFrame {
    r: Mat3,
}

impl RotatedFrame {
    pub fn new(axis: &Direction) -> Self {
        RotatedFrame { r: mat_mul(&rot_z(axis.phi()), &rot_y(axis.theta())) }
    }

    /// Coordinates of `d` in the rotated frame, `R^T d`.
    pub fn to_local(&self, d: &Direction) -> Direction {
        let v = mat_t_vec(&self.r, d.to_vector());
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let theta = v[2].clamp(-1.0, 1.0).acos();
        // At the poles the azimuth is arbitrary; pin it to zero.
        let phi = if n < 1e-300 { 0.0 } else { v[1].atan2(v[0]).rem_euclid(2.0 * PI) };
        Direction { theta, phi }
    }
}
