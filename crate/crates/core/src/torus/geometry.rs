use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Unit-volume flat torus `T^n` on which fields vary along the first
/// `d_eff` coordinates only. The remaining `n - d_eff` directions are
/// trivial, so integrals over them contribute a factor of one.
pub struct TorusGeometry {
    n_ambient: usize,
    d_eff: usize,
    grid: usize,
    plans: Vec<Plans>,
    xi_sq: Vec<f64>,
    xi_axis: Vec<Vec<f64>>,
    nyquist: Vec<bool>,
}

struct Plans {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGeometry")
            .field("n_ambient", &self.n_ambient)
            .field("d_eff", &self.d_eff)
            .field("grid", &self.grid)
            .finish()
    }
}

impl PartialEq for TorusGeometry {
    fn eq(&self, other: &Self) -> bool {
        self.n_ambient == other.n_ambient && self.d_eff == other.d_eff && self.grid == other.grid
    }
}

/// Signed frequency of FFT index `k` on a grid of `size` points.
/// The Nyquist index maps to `+size/2`.
pub fn freq(k: usize, size: usize) -> i64 {
    if k <= size / 2 {
        k as i64
    } else {
        k as i64 - size as i64
    }
}

impl TorusGeometry {
    pub fn new(n_ambient: usize, d_eff: usize, grid: usize) -> Result<Arc<Self>> {
        if n_ambient < 5 {
            return Err(Error::InvalidGeometry(format!(
                "ambient dimension must be at least 5, got {n_ambient}"
            )));
        }
        if !(1..=2).contains(&d_eff) || d_eff > n_ambient {
            return Err(Error::InvalidGeometry(format!(
                "effective dimension must be 1 or 2, got {d_eff}"
            )));
        }
        if grid < 4 || !grid.is_power_of_two() {
            return Err(Error::InvalidGeometry(format!(
                "grid size must be a power of two, at least 4, got {grid}"
            )));
        }
        if grid > 4096 {
            return Err(Error::InvalidGeometry(format!("grid size {grid} too large")));
        }
        let mut planner = FftPlanner::<f64>::new();
        let plans = [grid, 3 * grid / 2, 2 * grid]
            .iter()
            .map(|&size| Plans {
                size,
                forward: planner.plan_fft_forward(size),
                inverse: planner.plan_fft_inverse(size),
            })
            .collect();

        let len = grid.pow(d_eff as u32);
        let mut xi_sq = vec![0.0; len];
        let mut xi_axis = vec![vec![0.0; len]; d_eff];
        let mut nyquist = vec![false; len];
        for idx in 0..len {
            let mut s = 0.0;
            for axis in 0..d_eff {
                let k = (idx / grid.pow(axis as u32)) % grid;
                let m = freq(k, grid);
                let xi = 2.0 * PI * m as f64;
                s += xi * xi;
                if k == grid / 2 {
                    nyquist[idx] = true;
                } else {
                    xi_axis[axis][idx] = xi;
                }
            }
            xi_sq[idx] = s;
        }
        Ok(Arc::new(TorusGeometry {
            n_ambient,
            d_eff,
            grid,
            plans,
            xi_sq,
            xi_axis,
            nyquist,
        }))
    }

    pub fn n_ambient(&self) -> usize {
        self.n_ambient
    }

    pub fn d_eff(&self) -> usize {
        self.d_eff
    }

    /// Points per resolved axis.
    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.pow(self.d_eff as u32)
    }

    /// Quadrature weight of a single node.
    pub fn weight(&self) -> f64 {
        1.0 / self.num_nodes() as f64
    }

    /// Critical Sobolev exponent `2n/(n-4)` of the ambient torus.
    pub fn critical_exponent(&self) -> f64 {
        2.0 * self.n_ambient as f64 / (self.n_ambient as f64 - 4.0)
    }

    /// Coordinates of node `idx` on a grid of `size` points per axis.
    /// Unresolved coordinates are reported as zero.
    pub fn node_on(&self, idx: usize, size: usize) -> [f64; 2] {
        let mut x = [0.0; 2];
        for (axis, xa) in x.iter_mut().enumerate().take(self.d_eff) {
            let k = (idx / size.pow(axis as u32)) % size;
            *xa = k as f64 / size as f64;
        }
        x
    }

    pub fn node(&self, idx: usize) -> [f64; 2] {
        self.node_on(idx, self.grid)
    }

    /// Integer frequency vector of coefficient `idx`.
    pub fn frequency(&self, idx: usize) -> [i64; 2] {
        let mut m = [0; 2];
        for (axis, ma) in m.iter_mut().enumerate().take(self.d_eff) {
            let k = (idx / self.grid.pow(axis as u32)) % self.grid;
            *ma = freq(k, self.grid);
        }
        m
    }

    /// `|2 pi m|^2` for every coefficient, Nyquist included.
    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    /// `2 pi m_axis` with the Nyquist index of that axis set to zero.
    pub(crate) fn xi_axis(&self, axis: usize) -> &[f64] {
        &self.xi_axis[axis]
    }

    /// True where some axis sits at the Nyquist index.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        self.nyquist[idx]
    }

    pub fn same_as(&self, other: &TorusGeometry) -> bool {
        self == other
    }

    fn plans(&self, size: usize) -> &Plans {
        self.plans
            .iter()
            .find(|p| p.size == size)
            .expect("transform size is one of grid, 3grid/2, 2grid")
    }

    pub(crate) fn refined_size(&self) -> usize {
        2 * self.grid
    }

    pub(crate) fn padded_size(&self) -> usize {
        3 * self.grid / 2
    }

    fn transform(&self, size: usize, data: &mut [Complex64], inverse: bool) {
        let plans = self.plans(size);
        let fft = if inverse { &plans.inverse } else { &plans.forward };
        // x1 is the fastest index, so rows along x1 are contiguous
        fft.process(data);
        if self.d_eff == 2 {
            transpose(data, size);
            fft.process(data);
            transpose(data, size);
        }
    }

    /// Normalized coefficients `c_m = size^-d sum_j u_j e^{-2 pi i m x_j}`.
    pub(crate) fn analyze(&self, size: usize, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(size, &mut buf, false);
        let scale = 1.0 / buf.len() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }

    /// Inverse of [`analyze`]; returns the real part.
    pub(crate) fn synthesize(&self, size: usize, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.transform(size, &mut buf, true);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Embed base-grid coefficients into a finer grid, dropping Nyquist modes.
    pub(crate) fn embed(&self, coeffs: &[Complex64], size: usize) -> Vec<Complex64> {
        let m = self.grid;
        let len = size.pow(self.d_eff as u32);
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (idx, c) in coeffs.iter().enumerate() {
            if self.nyquist[idx] {
                continue;
            }
            let mut target = 0;
            for axis in 0..self.d_eff {
                let k = (idx / m.pow(axis as u32)) % m;
                let f = freq(k, m);
                let kk = if f < 0 { (size as i64 + f) as usize } else { f as usize };
                target += kk * size.pow(axis as u32);
            }
            out[target] = *c;
        }
        out
    }

    /// Samples of the band-limited interpolant on an arbitrary grid.
    pub fn interpolate_any(&self, coeffs: &[Complex64], size: usize) -> Vec<f64> {
        let mut buf = self.embed(coeffs, size);
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(size);
        fft.process(&mut buf);
        if self.d_eff == 2 {
            transpose(&mut buf, size);
            fft.process(&mut buf);
            transpose(&mut buf, size);
        }
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Keep the modes `|m_i| < grid/2` of fine-grid coefficients.
    pub(crate) fn truncate(&self, fine: &[Complex64], size: usize) -> Vec<Complex64> {
        let m = self.grid;
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_nodes()];
        for (idx, c) in out.iter_mut().enumerate() {
            if self.nyquist[idx] {
                continue;
            }
            let mut source = 0;
            for axis in 0..self.d_eff {
                let k = (idx / m.pow(axis as u32)) % m;
                let f = freq(k, m);
                let kk = if f < 0 { (size as i64 + f) as usize } else { f as usize };
                source += kk * size.pow(axis as u32);
            }
            *c = fine[source];
        }
        out
    }

    /// Index of the coefficient with frequency `-m`.
    pub(crate) fn conjugate_index(&self, idx: usize) -> usize {
        let m = self.grid;
        let mut out = 0;
        for axis in 0..self.d_eff {
            let p = m.pow(axis as u32);
            let k = (idx / p) % m;
            out += ((m - k) % m) * p;
        }
        out
    }
}

fn transpose(data: &mut [Complex64], size: usize) {
    for i in 0..size {
        for j in (i + 1)..size {
            data.swap(i * size + j, j * size + i);
        }
    }
}
