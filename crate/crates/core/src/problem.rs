//! Problem instances `(a, h, f)` and the energy functional
//! `F_q(u) = ||Delta u||^2 - int a|grad u|^2 + int h u^2 - int f |u|^q`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Coefficient;
use crate::torus::{
    a_grad_sq_integral, bilaplacian, div_a_grad, laplacian_sq_integral, SpectralField, TorusGeometry,
};

/// Subcritical or critical exponent together with `N = 2n/(n-4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub q: f64,
    pub critical: f64,
}

impl ExponentPair {
    pub fn new(q: f64, n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidArgument(format!("n must be at least 5, got {n}")));
        }
        let critical = sobolev_exponent(n);
        if !(q > 2.0 && q <= critical) {
            return Err(Error::InvalidArgument(format!(
                "q must lie in (2, {critical}], got {q}"
            )));
        }
        Ok(ExponentPair { q, critical })
    }

    pub fn is_subcritical(&self) -> bool {
        self.q < self.critical
    }
}

/// Critical Sobolev exponent `N = 2n/(n-4)`.
pub fn sobolev_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 4.0)
}

/// Which form of the Euler-Lagrange equation a field satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `L v = (lambda + q/2 f) |v|^{q-2} v`, the constrained minimizer form.
    Variational,
    /// `L u = f |u|^{q-2} u`, obtained by `u = (q/2)^{1/(q-2)} v`.
    Equation,
}

/// `sign(u) |u|^{q-1}`, zero at zero.
#[inline]
pub fn signed_pow(u: f64, q: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(q - 1.0)
    }
}

/// Coefficients of `Delta^2 u + div(a grad u) + h u = f |u|^{q-2} u`.
#[derive(Debug, Clone)]
pub struct ProblemData {
    geom: Arc<TorusGeometry>,
    pub a: SpectralField,
    pub h: SpectralField,
    pub f: SpectralField,
    pub f_plus: SpectralField,
    pub f_minus: SpectralField,
    pub int_f_minus: f64,
    pub sup_f_plus: f64,
    pub a_plus_sup: f64,
    pub h_sup: f64,
    h_fine: Vec<f64>,
    f_fine: Vec<f64>,
    f_minus_fine: Vec<f64>,
    sources: Option<[String; 3]>,
}

/// Parse a coefficient expression and sample it at the grid nodes.
pub fn parse_coefficient(src: &str, geom: &Arc<TorusGeometry>) -> Result<SpectralField> {
    let c = Coefficient::parse(src)?;
    check_axes(&c, geom)?;
    let samples = sample_expr(&c, geom, geom.grid_size())?;
    SpectralField::from_samples(geom, samples)
}

fn check_axes(c: &Coefficient, geom: &TorusGeometry) -> Result<()> {
    if geom.d_eff() < 2 && c.expr.uses_x2() {
        return Err(Error::InvalidArgument(format!(
            "'{}' depends on x2 but only x1 is resolved",
            c.source
        )));
    }
    Ok(())
}

fn sample_expr(c: &Coefficient, geom: &TorusGeometry, size: usize) -> Result<Vec<f64>> {
    let len = size.pow(geom.d_eff() as u32);
    (0..len)
        .map(|i| {
            let x = geom.node_on(i, size);
            c.expr.eval(x[0], x[1])
        })
        .collect()
}

impl ProblemData {
    /// Build from expression strings. Coefficients are sampled both at the
    /// grid nodes and on the 2x refined grid used by nonlinear quadrature.
    pub fn from_expressions(geom: &Arc<TorusGeometry>, a: &str, h: &str, f: &str) -> Result<Self> {
        let parse = |s: &str| -> Result<Coefficient> {
            let c = Coefficient::parse(s)?;
            check_axes(&c, geom)?;
            Ok(c)
        };
        let (ca, ch, cf) = (parse(a)?, parse(h)?, parse(f)?);
        let base = |c: &Coefficient| -> Result<SpectralField> {
            SpectralField::from_samples(geom, sample_expr(c, geom, geom.grid_size())?)
        };
        let fine = geom.refined_size();
        let h_fine = sample_expr(&ch, geom, fine)?;
        let f_fine = sample_expr(&cf, geom, fine)?;
        let mut p = Self::assemble(geom, base(&ca)?, base(&ch)?, base(&cf)?, h_fine, f_fine)?;
        p.sources = Some([a.to_string(), h.to_string(), f.to_string()]);
        Ok(p)
    }

    /// Build from sampled fields; refined-grid values come from the
    /// trigonometric interpolants.
    pub fn from_fields(a: SpectralField, h: SpectralField, f: SpectralField) -> Result<Self> {
        a.check_same(&h)?;
        a.check_same(&f)?;
        let geom = a.geometry().clone();
        let h_fine = h.refined();
        let f_fine = f.refined();
        Self::assemble(&geom, a, h, f, h_fine, f_fine)
    }

    fn assemble(
        geom: &Arc<TorusGeometry>,
        a: SpectralField,
        h: SpectralField,
        f: SpectralField,
        h_fine: Vec<f64>,
        f_fine: Vec<f64>,
    ) -> Result<Self> {
        let f_plus =
            SpectralField::from_samples(geom, f.samples().iter().map(|v| v.max(0.0)).collect())?;
        let f_minus =
            SpectralField::from_samples(geom, f.samples().iter().map(|v| (-v).max(0.0)).collect())?;
        let f_minus_fine: Vec<f64> = f_fine.iter().map(|v| (-v).max(0.0)).collect();
        let sup_f_plus = f_fine.iter().chain(f.samples()).fold(0.0f64, |m, v| m.max(*v));
        let h_sup = h_fine.iter().chain(h.samples()).fold(0.0f64, |m, v| m.max(v.abs()));
        let a_plus_sup = a.samples().iter().fold(0.0f64, |m, v| m.max(*v));
        let int_f_minus = integrate_negative_part(&f);
        Ok(ProblemData {
            geom: geom.clone(),
            a,
            h,
            f,
            f_plus,
            f_minus,
            int_f_minus,
            sup_f_plus,
            a_plus_sup,
            h_sup,
            h_fine,
            f_fine,
            f_minus_fine,
            sources: None,
        })
    }

    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        &self.geom
    }

    /// Expression sources `[a, h, f]` when built from text.
    pub fn sources(&self) -> Option<&[String; 3]> {
        self.sources.as_ref()
    }

    pub fn f_fine(&self) -> &[f64] {
        &self.f_fine
    }

    pub fn f_minus_fine(&self) -> &[f64] {
        &self.f_minus_fine
    }

    pub fn h_fine(&self) -> &[f64] {
        &self.h_fine
    }

    pub fn min_h(&self) -> f64 {
        self.h_fine.iter().chain(self.h.samples()).fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn max_h(&self) -> f64 {
        self.h_fine.iter().chain(self.h.samples()).fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    pub fn sup_f(&self) -> f64 {
        self.f_fine.iter().chain(self.f.samples()).fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    pub fn f_sup_abs(&self) -> f64 {
        self.f_fine.iter().chain(self.f.samples()).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn a_sup_abs(&self) -> f64 {
        self.a.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn int_f(&self) -> f64 {
        self.f_fine.iter().sum::<f64>() / self.f_fine.len() as f64
    }

    pub fn int_h(&self) -> f64 {
        self.h_fine.iter().sum::<f64>() / self.h_fine.len() as f64
    }

    /// Hypotheses of the existence theorems that fail for this instance.
    pub fn hypothesis_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_h() >= 0.0 {
            out.push(format!("h must be negative everywhere (max h = {})", self.max_h()));
        }
        if !(self.int_f_minus > 0.0) {
            out.push("integral of f^- must be positive".to_string());
        }
        out
    }

    fn check_field(&self, u: &SpectralField) -> Result<()> {
        if u.geometry().same_as(&self.geom) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }

    /// `Q(u) = ||Delta u||^2 - int a|grad u|^2 + int h u^2`.
    pub fn quadratic(&self, u: &SpectralField) -> Result<f64> {
        self.check_field(u)?;
        let u = u.band_limited();
        let fine = u.refined();
        self.quadratic_with(&u, &fine)
    }

    fn quadratic_with(&self, u: &SpectralField, fine: &[f64]) -> Result<f64> {
        let bil = laplacian_sq_integral(u);
        let agrad = a_grad_sq_integral(&self.a, u)?;
        let hterm = fine.iter().zip(&self.h_fine).map(|(v, h)| h * v * v).sum::<f64>()
            / fine.len() as f64;
        Ok(bil - agrad + hterm)
    }

    /// `L u = Delta^2 u + div(a grad u) + h u` projected on the band-limited space.
    pub fn apply_l(&self, u: &SpectralField) -> Result<SpectralField> {
        self.check_field(u)?;
        let u = u.band_limited();
        let fine = u.refined();
        self.apply_l_with(&u, &fine)
    }

    fn apply_l_with(&self, u: &SpectralField, fine: &[f64]) -> Result<SpectralField> {
        let hu: Vec<f64> = fine.iter().zip(&self.h_fine).map(|(v, h)| h * v).collect();
        let hu = SpectralField::truncate_from(&self.geom, self.geom.refined_size(), &hu);
        bilaplacian(u).add(&div_a_grad(&self.a, u)?)?.add(&hu)
    }

    /// Full evaluation of `F_q` and the pieces solvers reuse.
    pub fn evaluate(&self, u: &SpectralField, q: f64) -> Result<Evaluation> {
        self.check_field(u)?;
        let fine = u.refined();
        let quad = self.quadratic_with(u, &fine)?;
        let npts = fine.len() as f64;
        let mut mass = 0.0;
        let mut f_mass = 0.0;
        let mut fm_mass = 0.0;
        let mut psi = Vec::with_capacity(fine.len());
        let mut fpsi = Vec::with_capacity(fine.len());
        for (i, &v) in fine.iter().enumerate() {
            let p = v.abs().powf(q);
            mass += p;
            f_mass += self.f_fine[i] * p;
            fm_mass += self.f_minus_fine[i] * p;
            let s = signed_pow(v, q);
            psi.push(s);
            fpsi.push(self.f_fine[i] * s);
        }
        let ev = Evaluation {
            quadratic: quad,
            mass: mass / npts,
            f_mass: f_mass / npts,
            f_minus_mass: fm_mass / npts,
            energy: quad - f_mass / npts,
            fine,
            psi_fine: psi,
            fpsi_fine: fpsi,
        };
        if !ev.energy.is_finite() {
            return Err(Error::NonFinite("energy".into()));
        }
        Ok(ev)
    }

    /// L2 gradient `2 L u - q T(f |Iu|^{q-2} Iu)` given an evaluation at `u`.
    pub fn gradient_from(&self, u: &SpectralField, ev: &Evaluation, q: f64) -> Result<SpectralField> {
        let lu = self.apply_l_with(u, &ev.fine)?;
        let fpsi = SpectralField::truncate_from(&self.geom, self.geom.refined_size(), &ev.fpsi_fine);
        lu.scale(2.0).axpy(-q, &fpsi)
    }

    /// `T(|Iu|^{q-2} Iu)`, the gradient of the constraint up to the factor `q`.
    pub fn psi_from(&self, ev: &Evaluation) -> SpectralField {
        SpectralField::truncate_from(&self.geom, self.geom.refined_size(), &ev.psi_fine)
    }
}

/// Values of one energy evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub quadratic: f64,
    /// `int |u|^q`
    pub mass: f64,
    /// `int f |u|^q`
    pub f_mass: f64,
    /// `int f^- |u|^q`
    pub f_minus_mass: f64,
    pub energy: f64,
    pub(crate) fine: Vec<f64>,
    pub(crate) psi_fine: Vec<f64>,
    pub(crate) fpsi_fine: Vec<f64>,
}

/// `F_q(u)`.
pub fn eval_f(u: &SpectralField, problem: &ProblemData, q: f64) -> Result<f64> {
    Ok(problem.evaluate(&u.band_limited(), q)?.energy)
}

/// `G_q(u) = Q(u) + int f^- |u|^q`.
pub fn eval_g(u: &SpectralField, problem: &ProblemData, q: f64) -> Result<f64> {
    let ev = problem.evaluate(&u.band_limited(), q)?;
    let g = ev.quadratic + ev.f_minus_mass;
    if !g.is_finite() {
        return Err(Error::NonFinite("G energy".into()));
    }
    Ok(g)
}

/// L2 gradient of `F_q` on the band-limited space.
pub fn grad_f(u: &SpectralField, problem: &ProblemData, q: f64) -> Result<SpectralField> {
    let u = u.band_limited();
    let ev = problem.evaluate(&u, q)?;
    problem.gradient_from(&u, &ev, q)
}

/// `|| L u - (lambda + c f) |u|^{q-2} u ||_2` with `c = q/2` for the
/// variational normalization and `c = 1` for the equation normalization.
pub fn el_residual(
    u: &SpectralField,
    problem: &ProblemData,
    q: f64,
    lambda: f64,
    norm: Normalization,
) -> Result<f64> {
    let u = u.band_limited();
    let ev = problem.evaluate(&u, q)?;
    let c = match norm {
        Normalization::Variational => q / 2.0,
        Normalization::Equation => 1.0,
    };
    let lu = problem.apply_l_with(&u, &ev.fine)?;
    let rhs: Vec<f64> = ev
        .psi_fine
        .iter()
        .zip(problem.f_fine())
        .map(|(p, f)| (lambda + c * f) * p)
        .collect();
    let rhs = SpectralField::truncate_from(problem.geometry(), problem.geometry().refined_size(), &rhs);
    Ok(crate::torus::l2_norm(&lu.sub(&rhs)?))
}

/// Paneitz-Branson constants `(alpha, a0)` of an Einstein manifold with
/// scalar curvature `r`. Use `a = -alpha` and `h = a0` to reproduce
/// `Delta^2 + alpha Delta + a0` under `Delta = -div grad`.
pub fn einstein_preset(n: usize, r: f64) -> Result<(f64, f64)> {
    if n < 5 {
        return Err(Error::InvalidArgument(format!("n must be at least 5, got {n}")));
    }
    let nf = n as f64;
    let alpha = (nf * nf - 2.0 * nf - 4.0) / (2.0 * nf * (nf - 1.0)) * r;
    let a0 = (nf - 4.0) * (nf * nf - 4.0) / (16.0 * nf * (nf - 1.0) * (nf - 1.0)) * r * r;
    Ok((alpha, a0))
}

/// `int f^-` of the trigonometric interpolant of `f`.
///
/// In one dimension the interpolant is split at its roots and each negative
/// piece is integrated in closed form. In two dimensions a 8x refined
/// quadrature is used.
pub fn integrate_negative_part(f: &SpectralField) -> f64 {
    let geom = f.geometry();
    if geom.d_eff() == 1 {
        negative_part_1d(f)
    } else {
        let size = 8 * geom.grid_size();
        let fine = geom.interpolate_any(f.coeffs(), size);
        fine.iter().map(|v| (-v).max(0.0)).sum::<f64>() / fine.len() as f64
    }
}

fn negative_part_1d(f: &SpectralField) -> f64 {
    use std::f64::consts::PI;
    let geom = f.geometry();
    let m = geom.grid_size();
    let modes: Vec<(f64, f64, f64)> = f
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(i, _)| !geom.is_nyquist(*i))
        .map(|(i, c)| (crate::torus::freq(i, m) as f64, c.re, c.im))
        .collect();
    let eval = |x: f64| -> f64 {
        modes
            .iter()
            .map(|&(k, re, im)| {
                let t = 2.0 * PI * k * x;
                re * t.cos() - im * t.sin()
            })
            .sum()
    };
    // antiderivative of the interpolant, without the linear term
    let mean = modes.iter().find(|m| m.0 == 0.0).map(|m| m.1).unwrap_or(0.0);
    let anti = |x: f64| -> f64 {
        mean * x
            + modes
                .iter()
                .filter(|m| m.0 != 0.0)
                .map(|&(k, re, im)| {
                    let w = 2.0 * PI * k;
                    let t = w * x;
                    (re * t.sin() + im * t.cos()) / w
                })
                .sum::<f64>()
    };
    let samples = 16 * m;
    let xs: Vec<f64> = (0..=samples).map(|j| j as f64 / samples as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| eval(x)).collect();
    let mut roots = Vec::new();
    for j in 0..samples {
        let (fa, fb) = (vals[j], vals[j + 1]);
        if fa == 0.0 {
            roots.push(xs[j]);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (xs[j], xs[j + 1], fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = eval(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    if roots.is_empty() {
        return if eval(0.0) < 0.0 { -mean } else { 0.0 };
    }
    let mut total = 0.0;
    for i in 0..roots.len() {
        let a = roots[i];
        let b = if i + 1 < roots.len() { roots[i + 1] } else { roots[0] + 1.0 };
        if b <= a {
            continue;
        }
        if eval(0.5 * (a + b)) < 0.0 {
            total -= anti(b) - anti(a);
        }
    }
    total
}
