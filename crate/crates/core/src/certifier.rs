//! Explicit constants of the existence theory and the hypothesis report.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::io::ext_f64;
use crate::minimizer::random_smooth;
use crate::problem::ProblemData;
use crate::torus::{
    a_grad_sq_integral, bilaplacian, div_a_grad, inner_spectral, laplacian_sq_integral, lp_norm_refined,
    SpectralField, TorusGeometry,
};

/// Sharp constant `K_2` of `||u||_N^2 <= K_2^2 ||Delta u||_2^2 + ...` in dimension `n`.
pub fn sobolev_k2(n: usize) -> Result<f64> {
    if n < 5 {
        return Err(Error::InvalidArgument(format!("n must be at least 5, got {n}")));
    }
    let nf = n as f64;
    let ln_inv_sq = 2.0 * std::f64::consts::PI.ln() + (nf * (nf - 4.0) * (nf * nf - 4.0)).ln()
        + 4.0 / nf * (ln_gamma(nf / 2.0) - ln_gamma(nf));
    Ok((-0.5 * ln_inv_sq).exp())
}

/// Smallest `C` with `||grad u||^2 <= 2 sigma ||Delta u||^2 + 2 C ||u||^2` on
/// the grid: the maximum of `(l - 2 sigma l^2) / 2` over the lattice
/// eigenvalues `l`, and never below zero.
pub fn interp_constant(sigma: f64, geom: &TorusGeometry) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::BadSigma(format!("sigma must be positive, got {sigma}")));
    }
    Ok(geom
        .xi_sq()
        .iter()
        .map(|&l| 0.5 * (l - 2.0 * sigma * l * l))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyOptions {
    pub etas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Overrides the default `sigma` with `2 sigma ||a+|| = 0.5`.
    #[serde(with = "crate::io::ext_f64_opt")]
    pub sigma: Option<f64>,
    pub seed: u64,
    /// Random probes for the Sobolev remainder surrogate.
    pub probes: usize,
    pub max_iter: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            etas: vec![0.5, 0.1, 0.02],
            epsilons: vec![0.1, 0.01],
            sigma: None,
            seed: 7,
            probes: 1000,
            max_iter: 20_000,
        }
    }
}

// ---------------------------------------------------------------------------
// Sobolev remainder surrogate

fn remainder_ratio(u: &SpectralField, crit: f64, k2sq: f64) -> f64 {
    let l2 = inner_spectral(u, u).unwrap_or(0.0);
    if l2 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let ln = lp_norm_refined(u, crit);
    (ln * ln - k2sq * laplacian_sq_integral(u)) / l2
}

fn remainder_gradient(u: &SpectralField, crit: f64, k2sq: f64) -> (f64, SpectralField) {
    let g = u.geometry();
    let l2 = inner_spectral(u, u).unwrap_or(0.0);
    let fine = u.refined();
    let mass = fine.iter().map(|v| v.abs().powf(crit)).sum::<f64>() / fine.len() as f64;
    let norm = mass.powf(1.0 / crit);
    let r = (norm * norm - k2sq * laplacian_sq_integral(u)) / l2;
    // d ||u||_N^2 = 2 ||u||_N^{2-N} |u|^{N-2} u
    let psi: Vec<f64> = fine.iter().map(|&v| crate::problem::signed_pow(v, crit)).collect();
    let psi = SpectralField::truncate_from(g, g.refined_size(), &psi);
    let num = psi
        .scale(2.0 * norm.powf(2.0 - crit))
        .axpy(-2.0 * k2sq, &bilaplacian(u))
        .expect("same geometry")
        .axpy(-2.0 * r, u)
        .expect("same geometry");
    (r, num.scale(1.0 / l2).band_limited())
}

/// Discrete lower bound for `A(eps)`: the largest value of
/// `(||u||_N^2 - K_2^2 (1+eps) ||Delta u||^2) / ||u||^2` over random smooth
/// fields, bumps and single modes, then improved by gradient ascent from
/// the four best probes. Constants give the ratio 1, so the result is at
/// least 1.
pub fn sobolev_remainder(geom: &Arc<TorusGeometry>, eps: f64, opts: &CertifyOptions) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let crit = geom.critical_exponent();
    let k2sq = sobolev_k2(geom.n_ambient())?.powi(2) * (1.0 + eps);
    let mut probes: Vec<SpectralField> = vec![SpectralField::constant(geom, 1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    for _ in 0..opts.probes {
        let s: u64 = rng.gen();
        let base = random_smooth(geom, s);
        let shift: f64 = rng.gen_range(-2.0..2.0);
        probes.push(base.axpy(shift, &SpectralField::constant(geom, 1.0))?);
    }
    for kappa in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        let b = SpectralField::from_fn(geom, |x1, x2| {
            let mut s = kappa * ((2.0 * std::f64::consts::PI * x1).cos() - 1.0);
            if geom.d_eff() == 2 {
                s += kappa * ((2.0 * std::f64::consts::PI * x2).cos() - 1.0);
            }
            s.exp()
        })?;
        probes.push(b.band_limited());
    }
    for idx in 0..geom.num_nodes() {
        let m = geom.frequency(idx);
        if geom.is_nyquist(idx) || m[0] < 0 || (m[0] == 0 && m[1] < 0) || (m[0] == 0 && m[1] == 0) {
            continue;
        }
        let tau = 2.0 * std::f64::consts::PI;
        probes.push(SpectralField::from_fn(geom, |x1, x2| {
            (tau * (m[0] as f64 * x1 + m[1] as f64 * x2)).cos()
        })?);
    }
    let mut scored: Vec<(f64, usize)> = probes
        .iter()
        .enumerate()
        .map(|(i, u)| (remainder_ratio(u, crit, k2sq), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = scored[0].0;
    for &(_, i) in scored.iter().take(4) {
        best = best.max(ascend_remainder(&probes[i], crit, k2sq, 200));
    }
    Ok(best.max(1.0))
}

fn ascend_remainder(u0: &SpectralField, crit: f64, k2sq: f64, iters: usize) -> f64 {
    let scale = (inner_spectral(u0, u0).unwrap_or(1.0)).sqrt();
    let mut u = u0.scale(1.0 / scale);
    let (mut r, mut g) = remainder_gradient(&u, crit, k2sq);
    let xi = u.geometry().xi_sq().to_vec();
    let pre = |v: &SpectralField| v.map_coeffs(|i, c| c / (1.0 + k2sq * xi[i] * xi[i]));
    let mut t = 1.0;
    for _ in 0..iters {
        let d = pre(&g);
        let slope = inner_spectral(&g, &d).unwrap_or(0.0);
        if slope <= 1e-28 {
            break;
        }
        let mut moved = false;
        for _ in 0..40 {
            let cand = u.axpy(t, &d).expect("same geometry");
            let n = inner_spectral(&cand, &cand).unwrap_or(0.0).sqrt();
            if n > 0.0 {
                let cand = cand.scale(1.0 / n);
                let rc = remainder_ratio(&cand, crit, k2sq);
                if rc >= r + 1e-4 * t * slope {
                    u = cand;
                    moved = true;
                    t *= 2.0;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
        let next = remainder_gradient(&u, crit, k2sq);
        r = next.0;
        g = next.1;
    }
    r
}

// ---------------------------------------------------------------------------
// lambda_{a,f}

/// Masked Rayleigh quotient infimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaAf {
    /// Infimum over nonnegative fields vanishing on `supp f^-`.
    #[serde(with = "ext_f64")]
    pub value: f64,
    /// Same infimum without the sign constraint.
    #[serde(with = "ext_f64")]
    pub unsigned: f64,
    #[serde(with = "ext_f64")]
    pub sign_gap: f64,
    pub mask_nodes: usize,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub minimizer: Option<Vec<f64>>,
}

/// Nodal quadratic form `<A x, x>` with `A = Delta^2 + div(a grad .)`.
struct NodalForm<'a> {
    geom: &'a Arc<TorusGeometry>,
    a: &'a SpectralField,
    inv: Vec<f64>,
}

impl<'a> NodalForm<'a> {
    fn new(problem: &'a ProblemData) -> Self {
        let geom = problem.geometry();
        let asup = problem.a_sup_abs();
        NodalForm {
            geom,
            a: &problem.a,
            inv: geom.xi_sq().iter().map(|&x| x * x + asup * x).collect(),
        }
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let u = SpectralField::from_samples(self.geom, x.to_vec())?;
        Ok(bilaplacian(&u).add(&div_a_grad(self.a, &u)?)?.samples().to_vec())
    }

    fn precondition(&self, r: &[f64], shift: f64) -> Result<Vec<f64>> {
        let u = SpectralField::from_samples(self.geom, r.to_vec())?;
        Ok(u.map_coeffs(|i, c| c / (self.inv[i] + shift)).samples().to_vec())
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64
}

fn normalize(x: &mut [f64]) -> bool {
    let n = dot(x, x).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= n);
    true
}

/// Block Rayleigh-Ritz (LOBPCG with block size one) for the smallest
/// eigenpair of `A` restricted to `mask`. With `signed`, iterates are
/// clamped to be nonnegative and the residual is frozen on active nodes.
fn masked_lobpcg(
    form: &NodalForm,
    mask: &[bool],
    seed: Vec<f64>,
    signed: bool,
    max_iter: usize,
) -> Result<(f64, Vec<f64>, usize, bool)> {
    let project = |v: &mut Vec<f64>| {
        for (x, &m) in v.iter_mut().zip(mask) {
            if !m {
                *x = 0.0;
            }
        }
    };
    let mut x = seed;
    project(&mut x);
    if signed {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    if !normalize(&mut x) {
        return Err(Error::InvalidArgument("seed vanishes on the mask".into()));
    }
    let mut p: Option<Vec<f64>> = None;
    let mut best = (f64::INFINITY, x.clone());
    let mut stall_ref = (f64::INFINITY, 0usize);
    for it in 0..max_iter {
        let ax = form.apply(&x)?;
        let rho = dot(&ax, &x);
        if rho < best.0 {
            best = (rho, x.clone());
        }
        let mut r: Vec<f64> = ax.iter().zip(&x).map(|(a, v)| a - rho * v).collect();
        project(&mut r);
        if signed {
            for (rj, &xj) in r.iter_mut().zip(&x) {
                if xj <= 0.0 && *rj > 0.0 {
                    *rj = 0.0;
                }
            }
        }
        let rn = dot(&r, &r).sqrt();
        // the eigenvalue error is quadratic in the residual
        if rn <= 1e-7 * rho.abs().max(1.0) {
            return Ok((rho, x, it, true));
        }
        if rho < stall_ref.0 * (1.0 - 1e-14) {
            stall_ref = (rho, it);
        } else if it - stall_ref.1 >= 50 {
            return Ok((best.0, best.1, it, true));
        }
        let mut w = form.precondition(&r, rho.max(1.0))?;
        project(&mut w);
        if signed {
            for (wj, &xj) in w.iter_mut().zip(&x) {
                if xj <= 0.0 && *wj > 0.0 {
                    *wj = 0.0;
                }
            }
        }
        let mut basis = vec![x.clone(), w];
        if let Some(pp) = &p {
            basis.push(pp.clone());
        }
        // modified Gram-Schmidt, twice for stability
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        for mut v in basis {
            let n0 = dot(&v, &v).sqrt();
            for _ in 0..2 {
                for o in &ortho {
                    let c = dot(&v, o);
                    v.iter_mut().zip(o).for_each(|(a, b)| *a -= c * b);
                }
            }
            let n = dot(&v, &v).sqrt();
            if n > 1e-8 * n0 {
                v.iter_mut().for_each(|a| *a /= n);
                ortho.push(v);
            }
        }
        let av: Vec<Vec<f64>> = ortho.iter().map(|v| form.apply(v)).collect::<Result<_>>()?;
        let k = ortho.len();
        let gram = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&ortho[i], &av[j]) + dot(&ortho[j], &av[i])));
        let eig = SymmetricEigen::new(gram);
        let mut imin = 0;
        for i in 1..k {
            if eig.eigenvalues[i] < eig.eigenvalues[imin] {
                imin = i;
            }
        }
        let y = eig.eigenvectors.column(imin);
        let sgn = if y[0] < 0.0 { -1.0 } else { 1.0 };
        let mut xn = vec![0.0; x.len()];
        let mut pn = vec![0.0; x.len()];
        for (i, v) in ortho.iter().enumerate() {
            let c = sgn * y[i];
            xn.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
            if i > 0 {
                pn.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
            }
        }
        if signed {
            xn.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        if !normalize(&mut xn) {
            break;
        }
        p = Some(pn);
        x = xn;
    }
    let ax = form.apply(&best.1)?;
    Ok((dot(&ax, &best.1), best.1, max_iter, false))
}

/// Nodes where `f^-` vanishes, up to `1e-12 ||f||_inf`.
pub fn lambda_mask(problem: &ProblemData) -> Vec<bool> {
    let tau = 1e-12 * problem.f.max_abs();
    problem.f_minus.samples().iter().map(|&v| v <= tau).collect()
}

fn lambda_seeds(geom: &TorusGeometry, mask: &[bool], seed: u64) -> Vec<Vec<f64>> {
    let indicator: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    // squared index distance to the nearest excluded node
    let m = geom.grid_size() as i64;
    let d = geom.d_eff();
    let outside: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
    let coords = |i: usize| -> [i64; 2] { [(i as i64) % m, (i as i64) / m] };
    let wrap = |a: i64| {
        let t = a.rem_euclid(m);
        t.min(m - t)
    };
    let bump: Vec<f64> = (0..mask.len())
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            if outside.is_empty() {
                return 1.0;
            }
            let ci = coords(i);
            outside
                .iter()
                .map(|&j| {
                    let cj = coords(j);
                    let mut s = wrap(ci[0] - cj[0]).pow(2);
                    if d == 2 {
                        s += wrap(ci[1] - cj[1]).pow(2);
                    }
                    s as f64
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random: Vec<f64> = mask.iter().map(|&m| if m { rng.gen::<f64>() } else { 0.0 }).collect();
    vec![indicator, bump, random]
}

/// `lambda_{a,f}`: infimum of `(||Delta u||^2 - int a |grad u|^2) / ||u||^2`
/// over nonnegative fields vanishing on `supp f^-`, computed on the nodal
/// space. `+inf` when the mask is empty.
pub fn lambda_af(problem: &ProblemData, opts: &CertifyOptions) -> Result<LambdaAf> {
    let mask = lambda_mask(problem);
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Ok(LambdaAf {
            value: f64::INFINITY,
            unsigned: f64::INFINITY,
            sign_gap: 0.0,
            mask_nodes: 0,
            iterations: 0,
            converged: true,
            minimizer: None,
        });
    }
    let form = NodalForm::new(problem);
    let seeds = lambda_seeds(problem.geometry(), &mask, opts.seed);
    let runs = crate::parallel::map(&seeds, |_, s| masked_lobpcg(&form, &mask, s.clone(), true, opts.max_iter));
    let mut best: Option<(f64, Vec<f64>, usize, bool)> = None;
    let mut iterations = 0;
    for r in runs {
        let r = r?;
        iterations += r.2;
        if best.as_ref().is_none_or(|b| r.0 < b.0) {
            best = Some(r);
        }
    }
    let (value, x, _, converged) = best.expect("at least one seed");
    let (unsigned, _, it_u, _) = masked_lobpcg(&form, &mask, x.clone(), false, opts.max_iter)?;
    let unsigned = unsigned.min(value);
    Ok(LambdaAf {
        value,
        unsigned,
        sign_gap: value - unsigned,
        mask_nodes: count,
        iterations: iterations + it_u,
        converged,
        minimizer: Some(x),
    })
}

// ---------------------------------------------------------------------------
// lambda_{a,f,eta,q}

/// Constrained Rayleigh quotient for one `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEta {
    pub eta: f64,
    /// Inequality variant `int f^- |u|^q <= eta int f^-` at `||u||_q = 1`.
    #[serde(with = "ext_f64")]
    pub value: f64,
    /// Equality variant.
    #[serde(with = "ext_f64")]
    pub equality: f64,
    #[serde(with = "ext_f64")]
    pub gap: f64,
    pub feasible: bool,
    pub converged: bool,
}

struct EtaProblem<'a> {
    problem: &'a ProblemData,
    q: f64,
    target: f64,
    pre: Vec<f64>,
}

struct EtaState {
    u: SpectralField,
    r: f64,
    gr: SpectralField,
    c: f64,
    gc: SpectralField,
}

impl<'a> EtaProblem<'a> {
    fn quotient(&self, u: &SpectralField) -> Result<(f64, SpectralField)> {
        let l2 = inner_spectral(u, u)?;
        let num = laplacian_sq_integral(u) - a_grad_sq_integral(&self.problem.a, u)?;
        let r = num / l2;
        let au = bilaplacian(u).add(&div_a_grad(&self.problem.a, u)?)?;
        let g = au.axpy(-r, u)?.scale(2.0 / l2).band_limited();
        Ok((r, g))
    }

    /// Ratio `int f^- |u|^q / int |u|^q` and its gradient.
    fn ratio(&self, u: &SpectralField) -> (f64, SpectralField) {
        let g = u.geometry();
        let fine = u.refined();
        let fm = self.problem.f_minus_fine();
        let mut mass = 0.0;
        let mut fmass = 0.0;
        for (v, w) in fine.iter().zip(fm) {
            let p = v.abs().powf(self.q);
            mass += p;
            fmass += w * p;
        }
        let c = fmass / mass;
        let q = self.q;
        let npts = fine.len() as f64;
        let grad: Vec<f64> = fine
            .iter()
            .zip(fm)
            .map(|(&v, w)| q * (w - c) * crate::problem::signed_pow(v, q) / (mass / npts))
            .collect();
        (c, SpectralField::truncate_from(g, g.refined_size(), &grad))
    }

    fn state(&self, u: SpectralField) -> Result<EtaState> {
        let n = inner_spectral(&u, &u)?.sqrt();
        let u = u.scale(1.0 / n);
        let (r, gr) = self.quotient(&u)?;
        let (c, gc) = self.ratio(&u);
        Ok(EtaState { u, r, gr, c, gc })
    }

    fn precondition(&self, v: &SpectralField, shift: f64) -> SpectralField {
        v.map_coeffs(|i, c| c / (self.pre[i] + shift))
    }

    /// Move along `-grad c` until the ratio reaches the target (or below,
    /// for the inequality variant). `None` if the target is out of reach.
    fn restore(&self, st: EtaState, equality: bool) -> Result<Option<EtaState>> {
        let mut st = st;
        for _ in 0..60 {
            let err = st.c - self.target;
            let tol = 1e-12 * self.target.max(1e-300);
            if err.abs() <= tol || (!equality && err <= 0.0) {
                return Ok(Some(st));
            }
            let gg = inner_spectral(&st.gc, &st.gc)?;
            if !(gg > 0.0) {
                return Ok(None);
            }
            // Newton step on c along its gradient, halved until it helps
            let mut s = err / gg;
            let mut improved = None;
            for _ in 0..40 {
                let cand = self.state(st.u.axpy(-s, &st.gc)?)?;
                if (cand.c - self.target).abs() < err.abs() {
                    improved = Some(cand);
                    break;
                }
                s *= 0.5;
            }
            match improved {
                Some(c) => st = c,
                None => return Ok(None),
            }
        }
        Ok(None)
    }

    fn minimize(&self, start: EtaState, equality: bool, max_iter: usize) -> Result<(EtaState, bool)> {
        let mut st = start;
        let mut t = 1.0;
        for _ in 0..max_iter {
            let shift = st.r.max(1.0);
            let pg = self.precondition(&st.gr, shift);
            let pc = self.precondition(&st.gc, shift);
            let active = equality || st.c >= self.target * (1.0 - 1e-9);
            let cpg = inner_spectral(&st.gc, &pg)?;
            let mut d = pg.scale(-1.0);
            if active && (equality || cpg < 0.0) {
                let den = inner_spectral(&st.gc, &pc)?;
                if den > 0.0 {
                    d = d.axpy(cpg / den, &pc)?;
                }
            }
            let slope = inner_spectral(&st.gr, &d)?;
            if -slope <= 1e-24 * st.r.abs().max(1.0) {
                return Ok((st, true));
            }
            let mut accepted = None;
            let mut trial = t;
            for _ in 0..50 {
                let cand = self.state(st.u.axpy(trial, &d)?)?;
                if let Some(c) = self.restore(cand, equality)? {
                    if c.r <= st.r + 1e-4 * trial * slope {
                        accepted = Some(c);
                        break;
                    }
                }
                trial *= 0.25;
            }
            let Some(ns) = accepted else {
                return Ok((st, false));
            };
            let rel = (st.r - ns.r) / st.r.abs().max(1.0);
            let s = ns.u.sub(&st.u)?;
            let y = ns.gr.sub(&st.gr)?;
            let sy = inner_spectral(&s, &y)?;
            t = if sy > 0.0 {
                let inv: f64 = s
                    .coeffs()
                    .iter()
                    .zip(&self.pre)
                    .map(|(c, p)| c.norm_sqr() * (p + shift))
                    .sum();
                (inv / sy).clamp(1e-6, 1e6)
            } else {
                (trial * 4.0).min(1e6)
            };
            st = ns;
            if rel.abs() < 1e-15 {
                return Ok((st, true));
            }
        }
        Ok((st, false))
    }

    /// Drive the ratio below the target starting from `u`.
    fn feasibility(&self, u: SpectralField, max_iter: usize) -> Result<Option<EtaState>> {
        let mut st = self.state(u)?;
        for _ in 0..max_iter {
            if st.c <= self.target {
                return Ok(Some(st));
            }
            let d = self.precondition(&st.gc, 1.0).scale(-1.0);
            let slope = inner_spectral(&st.gc, &d)?;
            if -slope <= 1e-30 {
                return Ok(None);
            }
            let mut t = 1.0 / (-slope).sqrt().max(1e-300) * 1e-2;
            let mut moved = false;
            for _ in 0..60 {
                let cand = self.state(st.u.axpy(t, &d)?)?;
                if cand.c < st.c + 1e-4 * t * slope {
                    st = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                return Ok(None);
            }
        }
        Ok(None)
    }
}

/// `lambda_{a,f,eta,q}` for increasing `eta`, warm-started along the list
/// from the projected `lambda_{a,f}` minimizer. Returned in input order.
pub fn lambda_af_eta_q(
    problem: &ProblemData,
    etas: &[f64],
    q: f64,
    laf: &LambdaAf,
    opts: &CertifyOptions,
) -> Result<Vec<LambdaEta>> {
    if etas.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    if !(q > 2.0) {
        return Err(Error::InvalidArgument(format!("q must exceed 2, got {q}")));
    }
    let geom = problem.geometry();
    let asup = problem.a_sup_abs();
    let pre: Vec<f64> = geom.xi_sq().iter().map(|&x| x * x + asup * x).collect();
    let start = match &laf.minimizer {
        Some(x) => SpectralField::from_samples(geom, x.clone())?.band_limited(),
        None => {
            let seeds = crate::minimizer::seed_fields(problem, opts.seed, 0);
            seeds[1].1.clone()
        }
    };
    let mut order: Vec<usize> = (0..etas.len()).collect();
    order.sort_by(|&a, &b| etas[a].total_cmp(&etas[b]));
    let mut out: Vec<Option<LambdaEta>> = vec![None; etas.len()];
    let mut warm = start;
    for &i in &order {
        let eta = etas[i];
        let ep = EtaProblem {
            problem,
            q,
            target: eta * problem.int_f_minus,
            pre: pre.clone(),
        };
        let Some(st0) = ep.feasibility(warm.clone(), opts.max_iter.min(2000))? else {
            out[i] = Some(LambdaEta {
                eta,
                value: f64::INFINITY,
                equality: f64::INFINITY,
                gap: 0.0,
                feasible: false,
                converged: true,
            });
            continue;
        };
        let (ineq, conv1) = ep.minimize(st0, false, opts.max_iter)?;
        let eq_start = ep.restore(ep.state(ineq.u.clone())?, true)?;
        let (eq_val, conv2) = match eq_start {
            Some(s) => {
                let (e, c) = ep.minimize(s, true, opts.max_iter)?;
                (e.r, c)
            }
            None => (f64::INFINITY, false),
        };
        warm = ineq.u.clone();
        out[i] = Some(LambdaEta {
            eta,
            value: ineq.r,
            equality: eq_val,
            gap: (eq_val - ineq.r).abs(),
            feasible: true,
            converged: conv1 && conv2,
        });
    }
    Ok(out.into_iter().map(|o| o.expect("every eta visited")).collect())
}

// ---------------------------------------------------------------------------
// Ball constants and the report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallConstants {
    #[serde(with = "ext_f64")]
    pub eps0: f64,
    pub b: f64,
    pub mu: f64,
    pub k1q: f64,
    pub k2q: f64,
    /// `||h|| + 2 ||a+|| C(sigma)`
    pub h_bar: f64,
    pub c_sigma: f64,
}

/// Constants of the interval estimate for one `(eta, sigma, eps)`.
/// `lambda_eta` is `lambda_{a,f,eta,q}` and `a_eps` the Sobolev remainder.
pub fn ball_constants(
    problem: &ProblemData,
    q: f64,
    eta: f64,
    sigma: f64,
    eps: f64,
    lambda_eta: f64,
    a_eps: f64,
) -> Result<BallConstants> {
    let slack = 1.0 - 2.0 * sigma * problem.a_plus_sup;
    if !(slack > 0.0) {
        return Err(Error::BadSigma(format!(
            "1 - 2 sigma ||a+|| = {slack} is not positive"
        )));
    }
    let c_sigma = interp_constant(sigma, problem.geometry())?;
    let eps0 = lambda_eta - problem.h_sup;
    if !(eps0 > 0.0) {
        return Err(Error::NonPositiveEps0(eps0));
    }
    let k2sq = sobolev_k2(problem.geometry().n_ambient())?.powi(2);
    let h_bar = problem.h_sup + 2.0 * problem.a_plus_sup * c_sigma;
    let b = if eps0.is_infinite() {
        slack / (k2sq * (1.0 + eps))
    } else {
        slack * eps0 / ((eps0 + h_bar) * k2sq * (1.0 + eps) + slack * a_eps)
    };
    let mu = b.min(h_bar);
    let expo = q / (q - 2.0);
    let k1q = (2.0 * h_bar / (eta * problem.int_f_minus)).powf(expo);
    let k2q = 2f64.powf(expo) * k1q;
    Ok(BallConstants {
        eps0,
        b,
        mu,
        k1q,
        k2q,
        h_bar,
        c_sigma,
    })
}

/// `sigma` with `2 sigma ||a+|| = 1/2`, or 1 when `a+` vanishes.
pub fn default_sigma(problem: &ProblemData) -> f64 {
    if problem.a_plus_sup > 0.0 {
        0.25 / problem.a_plus_sup
    } else {
        1.0
    }
}

/// One point of the `(eta, sigma, eps)` search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub eta: f64,
    pub sigma: f64,
    pub eps: f64,
    #[serde(with = "ext_f64")]
    pub lambda_eta_q: f64,
    #[serde(with = "ext_f64")]
    pub lambda_eta_q_equality: f64,
    pub a_eps_lower_bound: f64,
    pub constants: Option<BallConstants>,
    pub c_thm: f64,
    pub error: Option<String>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub schema_version: u32,
    pub n_ambient: usize,
    pub d_eff: usize,
    pub grid_size: usize,
    pub q: f64,
    pub critical_exponent: f64,
    pub sources: Option<[String; 3]>,
    pub h_sup: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub sup_f: f64,
    pub sup_f_plus: f64,
    pub int_f_minus: f64,
    pub a_plus_sup: f64,
    pub k2: f64,
    pub lambda_af: LambdaAf,
    pub lambda_eta: Vec<LambdaEta>,
    pub cond1_holds: bool,
    #[serde(with = "ext_f64")]
    pub cond1_margin: f64,
    #[serde(with = "ext_f64")]
    pub ratio: f64,
    pub c_thm: f64,
    pub cond2_holds: bool,
    #[serde(with = "ext_f64")]
    pub cond2_margin: f64,
    pub cond3_holds: bool,
    pub chosen: Option<Configuration>,
    pub configurations: Vec<Configuration>,
    /// `l_q = k_{1,q}` of the chosen configuration.
    pub l_q: Option<f64>,
    /// `q -> N` limit of `l_q`, exponent `n/4`.
    pub l_n: Option<f64>,
    pub hypothesis_violations: Vec<String>,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    /// Conditions (1) and (2), needed by every solve command.
    pub fn required_hold(&self) -> bool {
        self.cond1_holds && self.cond2_holds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

/// Evaluate the three theorem conditions, choosing the `(eta, sigma, eps)`
/// that makes the constant of condition (2) largest.
pub fn certify(problem: &ProblemData, q: f64, opts: &CertifyOptions) -> Result<HypothesisReport> {
    let geom = problem.geometry();
    let crit = geom.critical_exponent();
    if !(q > 2.0 && q <= crit) {
        return Err(Error::InvalidArgument(format!("q must lie in (2, {crit}], got {q}")));
    }
    let k2 = sobolev_k2(geom.n_ambient())?;
    let laf = lambda_af(problem, opts)?;
    let lambda_eta = if problem.int_f_minus > 0.0 {
        lambda_af_eta_q(problem, &opts.etas, q, &laf, opts)?
    } else {
        Vec::new()
    };
    let sigma = opts.sigma.unwrap_or_else(|| default_sigma(problem));
    let mut a_eps = Vec::new();
    for &e in &opts.epsilons {
        a_eps.push(sobolev_remainder(geom, e, opts)?);
    }
    let mut configurations = Vec::new();
    for le in &lambda_eta {
        for (&eps, &ae) in opts.epsilons.iter().zip(&a_eps) {
            let (constants, c_thm, error) =
                match ball_constants(problem, q, le.eta, sigma, eps, le.value, ae) {
                    Ok(c) => {
                        let c_thm = c.mu * le.eta / (8.0 * c.h_bar);
                        (Some(c), c_thm, None)
                    }
                    Err(e) => (None, 0.0, Some(e.to_string())),
                };
            configurations.push(Configuration {
                eta: le.eta,
                sigma,
                eps,
                lambda_eta_q: le.value,
                lambda_eta_q_equality: le.equality,
                a_eps_lower_bound: ae,
                constants,
                c_thm,
                error,
            });
        }
    }
    let mut chosen: Option<Configuration> = None;
    for c in &configurations {
        if c.constants.is_some() && chosen.as_ref().is_none_or(|b| c.c_thm > b.c_thm) {
            chosen = Some(c.clone());
        }
    }
    let c_thm = chosen.as_ref().map_or(0.0, |c| c.c_thm);
    let ratio = if problem.int_f_minus > 0.0 {
        problem.sup_f_plus / problem.int_f_minus
    } else {
        f64::INFINITY
    };
    let cond1_margin = laf.value - problem.h_sup;
    let cond2_margin = c_thm - ratio;
    let picked = chosen.as_ref().and_then(|c| c.constants.as_ref().map(|k| (c.eta, k)));
    let l_q = picked.map(|(_, k)| k.k1q);
    let l_n = picked.map(|(eta, k)| {
        (2.0 * k.h_bar / (eta * problem.int_f_minus)).powf(geom.n_ambient() as f64 / 4.0)
    });
    let mut notes = vec!["a_eps is a discrete lower bound for the Sobolev remainder constant".to_string()];
    if laf.sign_gap > 1e-6 * laf.value.abs().max(1.0) {
        notes.push(format!("sign constraint raises lambda_af by {}", laf.sign_gap));
    }
    Ok(HypothesisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n_ambient: geom.n_ambient(),
        d_eff: geom.d_eff(),
        grid_size: geom.grid_size(),
        q,
        critical_exponent: crit,
        sources: problem.sources().cloned(),
        h_sup: problem.h_sup,
        min_h: problem.min_h(),
        max_h: problem.max_h(),
        sup_f: problem.sup_f(),
        sup_f_plus: problem.sup_f_plus,
        int_f_minus: problem.int_f_minus,
        a_plus_sup: problem.a_plus_sup,
        k2,
        lambda_af: laf,
        lambda_eta,
        cond1_holds: cond1_margin > 0.0,
        cond1_margin,
        ratio,
        c_thm,
        cond2_holds: cond2_margin > 0.0,
        cond2_margin,
        cond3_holds: problem.sup_f() > 0.0,
        chosen,
        configurations,
        l_q,
        l_n,
        hypothesis_violations: problem.hypothesis_violations(),
        notes,
    })
}
