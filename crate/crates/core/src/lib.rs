//! Green's function of the monoenergetic linear Boltzmann equation in an infinite
//! homogeneous medium with anisotropic scattering.
//!
//! The angular flux is built in Fourier space in a frame whose polar axis follows the
//! wave vector. Two independent routes produce the Fourier moments: a small dense
//! linear solve per azimuthal order ([`fourier_kernel`]) and a closed-form ladder of
//! Chandrasekhar polynomials ([`spectral_recurrence`]). [`inversion`] brings the
//! result back to real space and [`mc_oracle`] checks it by Monte Carlo.

pub mod cli;
pub mod error;
pub mod fourier_kernel;
pub mod identities;
pub mod inversion;
pub mod mc_oracle;
pub mod quadrature;
pub mod real;
pub mod special;
pub mod spectral_recurrence;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use special::{Direction, PhaseFunction};
