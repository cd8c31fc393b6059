//! Fourier spectral calculus on the unit-volume flat torus.

mod field;
mod geometry;
mod ops;

pub use field::SpectralField;
pub use rustfft::num_complex::Complex64;
pub use geometry::{freq, TorusGeometry};
pub use ops::{
    a_grad_sq_integral, bilaplacian, div_a_grad, grad_sq_integral, gradient, hessian_sq_integral,
    inner, inner_spectral, l2_norm, laplacian, laplacian_sq_integral, lp_norm, lp_norm_refined, refined_power_integral,
};
