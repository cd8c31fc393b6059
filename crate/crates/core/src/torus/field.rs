use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::geometry::TorusGeometry;
use crate::error::{Error, Result};

/// Real field on the torus grid.
///
/// Spectral coefficients are the canonical state; nodal samples are kept
/// in sync eagerly. Differential operators and inner products read the
/// coefficients, pointwise nonlinearities read the samples. Fields are
/// immutable: every operation returns a new value.
#[derive(Clone, Debug)]
pub struct SpectralField {
    geom: Arc<TorusGeometry>,
    samples: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_samples(geom: &Arc<TorusGeometry>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != geom.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                geom.num_nodes(),
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field sample".into()));
        }
        let coeffs = geom.analyze(geom.grid_size(), &samples);
        Ok(SpectralField {
            geom: geom.clone(),
            samples,
            coeffs,
        })
    }

    /// Build from normalized coefficients. The coefficient array is
    /// symmetrized so that the represented field is real.
    pub fn from_coeffs(geom: &Arc<TorusGeometry>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != geom.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                geom.num_nodes(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("field coefficient".into()));
        }
        Ok(Self::from_coeffs_unchecked(geom, coeffs))
    }

    pub(crate) fn from_coeffs_unchecked(geom: &Arc<TorusGeometry>, coeffs: Vec<Complex64>) -> Self {
        let mut sym = coeffs.clone();
        for (idx, c) in sym.iter_mut().enumerate() {
            let j = geom.conjugate_index(idx);
            *c = (coeffs[idx] + coeffs[j].conj()) * 0.5;
        }
        let samples = geom.synthesize(geom.grid_size(), &sym);
        SpectralField {
            geom: geom.clone(),
            samples,
            coeffs: sym,
        }
    }

    pub fn constant(geom: &Arc<TorusGeometry>, value: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); geom.num_nodes()];
        coeffs[0] = Complex64::new(value, 0.0);
        SpectralField {
            geom: geom.clone(),
            samples: vec![value; geom.num_nodes()],
            coeffs,
        }
    }

    pub fn zeros(geom: &Arc<TorusGeometry>) -> Self {
        Self::constant(geom, 0.0)
    }

    /// Sample `g(x1, x2)` at the grid nodes.
    pub fn from_fn(geom: &Arc<TorusGeometry>, g: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let samples = (0..geom.num_nodes())
            .map(|i| {
                let x = geom.node(i);
                g(x[0], x[1])
            })
            .collect();
        Self::from_samples(geom, samples)
    }

    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        &self.geom
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn check_same(&self, other: &SpectralField) -> Result<()> {
        if self.geom.same_as(&other.geom) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }

    /// Projection onto the band-limited space (Nyquist modes removed).
    /// Solver fields live in this space, where refinement and truncation
    /// are exact adjoints of each other.
    pub fn band_limited(&self) -> SpectralField {
        if !(0..self.coeffs.len()).any(|i| self.geom.is_nyquist(i) && self.coeffs[i].norm() != 0.0) {
            return self.clone();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if self.geom.is_nyquist(i) { Complex64::new(0.0, 0.0) } else { c })
            .collect();
        Self::from_coeffs_unchecked(&self.geom, coeffs)
    }

    /// Largest Nyquist coefficient magnitude.
    pub fn nyquist_content(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.geom.is_nyquist(*i))
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, Complex64) -> Complex64) -> SpectralField {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect();
        Self::from_coeffs_unchecked(&self.geom, coeffs)
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        SpectralField {
            geom: self.geom.clone(),
            samples: self.samples.iter().map(|v| v * s).collect(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &SpectralField) -> Result<SpectralField> {
        self.check_same(other)?;
        Ok(SpectralField {
            geom: self.geom.clone(),
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + t * b)
                .collect(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * t)
                .collect(),
        })
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(-1.0, other)
    }

    /// Linear combination `sum_i w_i f_i` of fields on one geometry.
    pub fn combine(terms: &[(f64, &SpectralField)]) -> Result<SpectralField> {
        let (w0, f0) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        let mut acc = f0.scale(*w0);
        for (w, f) in &terms[1..] {
            acc = acc.axpy(*w, f)?;
        }
        Ok(acc)
    }

    /// Samples of the trigonometric interpolant on a grid of `size` points
    /// per axis. Only the band-limited part is carried over.
    pub fn refine_to(&self, size: usize) -> Vec<f64> {
        let fine = self.geom.embed(&self.coeffs, size);
        self.geom.synthesize(size, &fine)
    }

    /// Samples on the 2x refined grid used for nonlinear terms.
    pub fn refined(&self) -> Vec<f64> {
        self.refine_to(self.geom.refined_size())
    }

    /// Truncation of fine-grid values back to the band-limited space.
    /// This is the adjoint of [`refine_to`] with respect to the two
    /// quadrature inner products.
    pub fn truncate_from(geom: &Arc<TorusGeometry>, size: usize, values: &[f64]) -> SpectralField {
        let fine = geom.analyze(size, values);
        let coeffs = geom.truncate(&fine, size);
        Self::from_coeffs_unchecked(geom, coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }
}
