#![allow(dead_code)]

use std::sync::Arc;

use biharm::torus::{SpectralField, TorusGeometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn geom1(m: usize) -> Arc<TorusGeometry> {
    TorusGeometry::new(6, 1, m).unwrap()
}

pub fn geom2(m: usize) -> Arc<TorusGeometry> {
    TorusGeometry::new(6, 2, m).unwrap()
}

/// Random band-limited field whose coefficients decay like `exp(-|m|/width)`.
pub fn random_field(g: &Arc<TorusGeometry>, seed: u64, width: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..g.num_nodes())
        .map(|i| {
            let m = g.frequency(i);
            let r = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
            let amp = (-r / width).exp();
            biharm::torus::Complex64::new(
                amp * (rng.gen::<f64>() - 0.5),
                amp * (rng.gen::<f64>() - 0.5),
            )
        })
        .collect();
    SpectralField::from_coeffs(g, coeffs).unwrap().band_limited()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
