//! Scalar special functions: Legendre functions of both kinds, Chandrasekhar
//! polynomials, Wigner d-matrices, Bessel J and spherical harmonics.

mod bessel;
pub(crate) mod chandrasekhar;
mod geometry;
mod harmonics;
pub(crate) mod legendre;
mod phase;
mod wigner;

pub use bessel::{bessel_j, bessel_j_all};
pub use chandrasekhar::{chandrasekhar_g, chandrasekhar_rho, negative_m_convert, PolynomialKind};
pub use geometry::{mat_mul, mat_t_vec, mat_vec, rot_y, rot_z, Direction, Mat3, RotatedFrame};
pub use harmonics::{harmonic_norm, spherical_harmonic, spherical_harmonics_table};
pub use legendre::{
    assoc_legendre_p_complex, assoc_legendre_p_real, assoc_legendre_q, double_factorial_odd, negative_m_factor,
};
pub use phase::{phase_function_eval, phase_function_eval_azimuthal, phase_function_eval_harmonic, PhaseFunction};
pub use wigner::{wigner_d, WignerTable};
