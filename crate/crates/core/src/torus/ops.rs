use rustfft::num_complex::Complex64;

use super::field::SpectralField;
use crate::error::{Error, Result};

/// Geometer's Laplacian `-div grad`, multiplier `|2 pi m|^2`.
pub fn laplacian(u: &SpectralField) -> SpectralField {
    let xi = u.geometry().xi_sq();
    u.map_coeffs(|i, c| c * xi[i])
}

/// `Delta^2`, multiplier `|2 pi m|^4`.
pub fn bilaplacian(u: &SpectralField) -> SpectralField {
    let xi = u.geometry().xi_sq();
    u.map_coeffs(|i, c| c * (xi[i] * xi[i]))
}

/// Partial derivatives along the resolved axes. The Nyquist mode of each
/// axis is dropped, as usual for odd-order spectral derivatives.
pub fn gradient(u: &SpectralField) -> Vec<SpectralField> {
    let g = u.geometry();
    (0..g.d_eff())
        .map(|axis| {
            let xi = g.xi_axis(axis);
            u.map_coeffs(|i, c| c * Complex64::new(0.0, xi[i]))
        })
        .collect()
}

/// `div(a grad u)`, products formed on a 3/2-padded grid so that no
/// aliasing reaches the band-limited modes.
pub fn div_a_grad(a: &SpectralField, u: &SpectralField) -> Result<SpectralField> {
    a.check_same(u)?;
    let g = u.geometry();
    let size = g.padded_size();
    let a_fine = a.refine_to(size);
    let mut acc = vec![Complex64::new(0.0, 0.0); g.num_nodes()];
    for (axis, du) in gradient(u).iter().enumerate() {
        let prod: Vec<f64> = du
            .refine_to(size)
            .iter()
            .zip(&a_fine)
            .map(|(d, a)| d * a)
            .collect();
        let flux = g.truncate(&g.analyze(size, &prod), size);
        let xi = g.xi_axis(axis);
        for (i, c) in flux.iter().enumerate() {
            acc[i] += c * Complex64::new(0.0, xi[i]);
        }
    }
    Ok(SpectralField::from_coeffs_unchecked(g, acc))
}

/// Spectral inner product `sum_m c_m conj(d_m)`, equal to the quadrature
/// inner product by Parseval but free of aliasing in the high modes.
pub fn inner_spectral(u: &SpectralField, v: &SpectralField) -> Result<f64> {
    u.check_same(v)?;
    Ok(u
        .coeffs()
        .iter()
        .zip(v.coeffs())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum())
}

/// Uniform-weight quadrature of `u v`.
pub fn inner(u: &SpectralField, v: &SpectralField) -> Result<f64> {
    u.check_same(v)?;
    let w = u.geometry().weight();
    Ok(u.samples().iter().zip(v.samples()).map(|(a, b)| a * b).sum::<f64>() * w)
}

pub fn l2_norm(u: &SpectralField) -> f64 {
    u.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Discrete `L^p` norm by nodal quadrature.
pub fn lp_norm(u: &SpectralField, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p must be in [1, inf), got {p}")));
    }
    let w = u.geometry().weight();
    let s: f64 = u.samples().iter().map(|v| v.abs().powf(p)).sum::<f64>() * w;
    Ok(s.powf(1.0 / p))
}

/// `int |u|^p` evaluated on the 2x refined grid.
pub fn refined_power_integral(u: &SpectralField, p: f64) -> f64 {
    let fine = u.refined();
    fine.iter().map(|v| v.abs().powf(p)).sum::<f64>() / fine.len() as f64
}

/// `||u||_p` of the band-limited interpolant, on the 2x refined grid.
pub fn lp_norm_refined(u: &SpectralField, p: f64) -> f64 {
    refined_power_integral(u, p).powf(1.0 / p)
}

/// `int |grad u|^2 = sum |2 pi m|^2 |c_m|^2`.
pub fn grad_sq_integral(u: &SpectralField) -> f64 {
    let xi = u.geometry().xi_sq();
    u.coeffs().iter().zip(xi).map(|(c, x)| x * c.norm_sqr()).sum()
}

/// `||Delta u||^2 = sum |2 pi m|^4 |c_m|^2`.
pub fn laplacian_sq_integral(u: &SpectralField) -> f64 {
    let xi = u.geometry().xi_sq();
    u.coeffs().iter().zip(xi).map(|(c, x)| x * x * c.norm_sqr()).sum()
}

/// `int |grad^2 u|^2 = sum_ij ||d_i d_j u||^2`, from the second-derivative
/// multipliers `-(2 pi)^2 m_i m_j`.
pub fn hessian_sq_integral(u: &SpectralField) -> f64 {
    let g = u.geometry();
    let tau = 2.0 * std::f64::consts::PI;
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let m = g.frequency(idx);
            let mut s = 0.0;
            for i in 0..g.d_eff() {
                for j in 0..g.d_eff() {
                    let w = tau * tau * (m[i] * m[j]) as f64;
                    s += w * w;
                }
            }
            s * c.norm_sqr()
        })
        .sum()
}

/// `int a |grad u|^2` with the same padded products as [`div_a_grad`].
pub fn a_grad_sq_integral(a: &SpectralField, u: &SpectralField) -> Result<f64> {
    a.check_same(u)?;
    let g = u.geometry();
    let size = g.padded_size();
    let a_fine = a.refine_to(size);
    let mut total = 0.0;
    for du in gradient(u) {
        let fine = du.refine_to(size);
        total += fine.iter().zip(&a_fine).map(|(d, a)| a * d * d).sum::<f64>();
    }
    Ok(total / a_fine.len() as f64)
}
