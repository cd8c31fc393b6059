//! Minimization of `F_q` on the spheres `||u||_q^q = k`, the mu-curve
//! `k -> mu_{k,q}`, and the negative-energy solution.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{el_residual, Evaluation, Normalization, ProblemData};
use crate::torus::{
    inner_spectral, l2_norm, laplacian_sq_integral, refined_power_integral, Complex64, SpectralField,
};
use crate::{parallel, scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Constrained-gradient tolerance, scaled by `1 + |F|`.
    pub grad_tol: f64,
    /// Target for the L2 tangent residual, scaled by `1 + |F|`. Iteration
    /// continues past `grad_tol` until this is met or the decrement drops
    /// another thousandfold.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Iterations without a new best energy before giving up.
    pub stall_window: usize,
    pub seed: u64,
    pub random_seeds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grad_tol: 1e-8,
            residual_tol: 1e-7,
            max_iter: 20_000,
            stall_window: 400,
            seed: 7,
            random_seeds: 3,
        }
    }
}

/// Diagonal Fourier preconditioner `(2|xi|^4 + 2|a| |xi|^2 + s)^{-1}`,
/// an approximate inverse Hessian of `F_q` at mass `k`.
#[derive(Debug, Clone)]
pub(crate) struct Precond {
    p: Vec<f64>,
    subspace: Option<Subspace>,
}

/// Finite-dimensional trial space with an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Vec<SpectralField>,
}

impl Subspace {
    /// Orthonormalize `fields` (band-limited parts); dependent ones are dropped.
    pub fn new(fields: &[SpectralField]) -> Result<Self> {
        let mut basis: Vec<SpectralField> = Vec::new();
        for f in fields {
            let mut v = f.band_limited();
            let n0 = l2_norm(&v);
            for _ in 0..2 {
                for e in &basis {
                    v = v.axpy(-inner_spectral(&v, e)?, e)?;
                }
            }
            let n = l2_norm(&v);
            if n > 1e-10 * n0 {
                basis.push(v.scale(1.0 / n));
            }
        }
        if basis.is_empty() {
            return Err(Error::InvalidArgument("empty subspace".into()));
        }
        Ok(Subspace { basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[SpectralField] {
        &self.basis
    }

    pub fn coordinates(&self, v: &SpectralField) -> Vec<f64> {
        self.basis.iter().map(|e| inner_spectral(v, e).unwrap_or(0.0)).collect()
    }

    pub fn project(&self, v: &SpectralField) -> SpectralField {
        let mut out = SpectralField::zeros(v.geometry());
        for e in &self.basis {
            out = out.axpy(inner_spectral(v, e).unwrap_or(0.0), e).expect("same geometry");
        }
        out
    }
}

impl Precond {
    pub(crate) fn new(problem: &ProblemData, q: f64, k: f64) -> Self {
        let shift = 2.0 * problem.h_sup
            + q * (q - 1.0) * problem.f_sup_abs() * k.max(0.0).powf(1.0 - 2.0 / q)
            + 1.0;
        let a = problem.a_sup_abs();
        let p = problem
            .geometry()
            .xi_sq()
            .iter()
            .map(|&x| 1.0 / (2.0 * x * x + 2.0 * a * x + shift))
            .collect();
        Precond { p, subspace: None }
    }

    pub(crate) fn restricted(mut self, sub: Option<&Subspace>) -> Self {
        self.subspace = sub.cloned();
        self
    }

    pub(crate) fn apply(&self, v: &SpectralField) -> SpectralField {
        let pv = v.map_coeffs(|i, c| c * self.p[i]);
        match &self.subspace {
            Some(s) => s.project(&pv),
            None => pv,
        }
    }

    /// `<s, P^{-1} s>`
    pub(crate) fn inv_norm_sq(&self, s: &SpectralField) -> f64 {
        s.coeffs().iter().zip(&self.p).map(|(c, p)| c.norm_sqr() / p).sum()
    }
}

/// Energy, gradient and constraint direction at one point.
pub(crate) struct State {
    pub u: SpectralField,
    pub ev: Evaluation,
    pub g: SpectralField,
    pub psi: SpectralField,
}

impl State {
    pub(crate) fn new(problem: &ProblemData, q: f64, u: SpectralField) -> Result<Self> {
        let ev = problem.evaluate(&u, q)?;
        let g = problem.gradient_from(&u, &ev, q)?;
        let psi = problem.psi_from(&ev);
        Ok(State { u, ev, g, psi })
    }

    pub(crate) fn energy(&self) -> f64 {
        self.ev.energy
    }

    /// `lambda = <g, psi> / (2 <psi, psi>)`.
    pub(crate) fn lagrange(&self) -> f64 {
        let pp = inner_spectral(&self.psi, &self.psi).unwrap_or(0.0);
        if pp > 0.0 {
            inner_spectral(&self.g, &self.psi).unwrap_or(0.0) / (2.0 * pp)
        } else {
            0.0
        }
    }

    /// L2 norm of the gradient with the constraint direction removed.
    pub(crate) fn tangent_residual(&self) -> f64 {
        let lam = self.lagrange();
        l2_norm(&self.g.axpy(-2.0 * lam, &self.psi).expect("same geometry"))
    }
}

/// Scale `u` so that `int |u|^q = k` on the refined grid.
pub fn rescale_to_mass(u: &SpectralField, q: f64, k: f64) -> Result<SpectralField> {
    let m = refined_power_integral(u, q);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidArgument("cannot rescale a zero field".into()));
    }
    Ok(u.scale((k / m).powf(1.0 / q)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Constraint {
    Sphere(f64),
    Ball(f64),
}

/// Result of one local minimization.
#[derive(Debug, Clone)]
pub struct SphereMinimum {
    pub v: SpectralField,
    pub mu: f64,
    pub lambda: f64,
    /// `el_residual` in the variational normalization.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn retract(u: &SpectralField, q: f64, c: Constraint) -> Result<SpectralField> {
    match c {
        Constraint::Sphere(k) => rescale_to_mass(u, q, k),
        Constraint::Ball(l) => {
            let m = refined_power_integral(u, q);
            if m > l {
                Ok(u.scale((l / m).powf(1.0 / q)))
            } else {
                Ok(u.clone())
            }
        }
    }
}

fn on_boundary(st: &State, c: Constraint) -> bool {
    match c {
        Constraint::Sphere(_) => true,
        Constraint::Ball(l) => st.ev.mass >= l * (1.0 - 1e-9),
    }
}

/// Descent direction in the preconditioned metric and the dual gradient
/// it was built from.
fn direction(st: &State, pc: &Precond, c: Constraint) -> (SpectralField, SpectralField) {
    let pg = pc.apply(&st.g);
    let tangent = match c {
        Constraint::Sphere(_) => true,
        // on the ball boundary only outward-pushing descent is clipped
        Constraint::Ball(_) => on_boundary(st, c) && st.lagrange() < 0.0,
    };
    if !tangent {
        return (pg.scale(-1.0), st.g.clone());
    }
    let ppsi = pc.apply(&st.psi);
    let den = inner_spectral(&ppsi, &st.psi).unwrap_or(0.0);
    let theta = if den > 0.0 { inner_spectral(&pg, &st.psi).unwrap_or(0.0) / den } else { 0.0 };
    let d = ppsi.scale(theta).sub(&pg).expect("same geometry");
    let gt = st.g.axpy(-theta, &st.psi).expect("same geometry");
    (d, gt)
}

fn descend(
    problem: &ProblemData,
    q: f64,
    init: &SpectralField,
    c: Constraint,
    opts: &SolverOptions,
    sub: Option<&Subspace>,
) -> Result<(State, usize, bool)> {
    let scale_k = match c {
        Constraint::Sphere(k) | Constraint::Ball(k) => k,
    };
    let pc = Precond::new(problem, q, scale_k).restricted(sub);
    let start = match sub {
        Some(s) => s.project(init),
        None => init.band_limited(),
    };
    let mut st = State::new(problem, q, retract(&start, q, c)?)?;
    let mut best_f = st.energy();
    let mut since_best = 0usize;
    let mut recent: Vec<f64> = vec![st.energy()];
    let mut t = 1.0f64;
    let (mut d, mut gt) = direction(&st, &pc, c);
    let mut use_bb1 = true;
    for it in 0..opts.max_iter {
        // Newton decrement in the preconditioned metric: sqrt(<r, P r>)
        let slope = inner_spectral(&st.g, &d)?;
        let dec = slope.min(0.0).abs().sqrt();
        let scale = (1.0 + st.energy().abs()).sqrt();
        if dec <= opts.grad_tol * scale
            && (dec <= 1e-3 * opts.grad_tol * scale
                || st.tangent_residual() <= opts.residual_tol * (1.0 + st.energy().abs()))
        {
            return Ok((st, it, true));
        }
        if !(slope < 0.0) {
            return Ok((st, it, false));
        }
        let f_ref = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = None;
        let mut trial = t;
        for _ in 0..60 {
            let cand = retract(&st.u.axpy(trial, &d)?, q, c);
            if let Ok(cand) = cand {
                if let Ok(ns) = State::new(problem, q, cand) {
                    if ns.energy() <= f_ref + 1e-4 * trial * slope {
                        accepted = Some(ns);
                        break;
                    }
                }
            }
            trial *= 0.25;
        }
        let Some(ns) = accepted else {
            return Ok((st, it, false));
        };
        let (nd, ngt) = direction(&ns, &pc, c);
        let s = ns.u.sub(&st.u)?;
        let y = ngt.sub(&gt)?;
        let sy = inner_spectral(&s, &y)?;
        t = if sy > 0.0 {
            let bb = if use_bb1 {
                pc.inv_norm_sq(&s) / sy
            } else {
                sy / inner_spectral(&y, &pc.apply(&y))?
            };
            use_bb1 = !use_bb1;
            bb
        } else {
            (trial * 4.0).min(1e8)
        };
        t = if t.is_finite() { t.clamp(1e-10, 1e10) } else { 1.0 };
        st = ns;
        d = nd;
        gt = ngt;
        recent.push(st.energy());
        if recent.len() > 8 {
            recent.remove(0);
        }
        if st.energy() < best_f - 1e-15 * best_f.abs() {
            best_f = st.energy();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > opts.stall_window {
                return Ok((st, it + 1, false));
            }
        }
    }
    Ok((st, opts.max_iter, false))
}

/// Minimize `F_q` on `{ ||u||_q^q = k }` starting from `init`.
pub fn minimize_on_sphere(
    problem: &ProblemData,
    q: f64,
    k: f64,
    init: &SpectralField,
    opts: &SolverOptions,
) -> Result<SphereMinimum> {
    minimize_on_sphere_in(problem, q, k, init, opts, None)
}

/// [`minimize_on_sphere`] restricted to a trial subspace.
pub fn minimize_on_sphere_in(
    problem: &ProblemData,
    q: f64,
    k: f64,
    init: &SpectralField,
    opts: &SolverOptions,
    sub: Option<&Subspace>,
) -> Result<SphereMinimum> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
    }
    if !init.geometry().same_as(problem.geometry()) {
        return Err(Error::GeometryMismatch);
    }
    let start = match sub {
        Some(s) => s.project(init),
        None => init.band_limited(),
    };
    if l2_norm(&start) == 0.0 {
        return Err(Error::InvalidArgument("initial field is zero".into()));
    }
    let (st, iterations, converged) = descend(problem, q, &start, Constraint::Sphere(k), opts, sub)?;
    let lambda = st.lagrange();
    Ok(SphereMinimum {
        mu: st.energy(),
        lambda,
        residual: 0.5 * st.tangent_residual(),
        v: st.u,
        iterations,
        converged,
    })
}

/// Deterministic multistart shapes: constant, +/- bump centred at the
/// maximum of `f`, +/- lowest mode through that point, random smooth fields.
pub fn seed_fields(problem: &ProblemData, seed: u64, n_random: usize) -> Vec<(String, SpectralField)> {
    let g = problem.geometry();
    let fs = problem.f.samples();
    let mut imax = 0;
    for (i, v) in fs.iter().enumerate() {
        if *v > fs[imax] {
            imax = i;
        }
    }
    let c = g.node(imax);
    let d = g.d_eff();
    let bump = SpectralField::from_fn(g, |x1, x2| {
        let mut s = (4.0 * ((2.0 * PI * (x1 - c[0])).cos() - 1.0)).exp();
        if d == 2 {
            s *= (4.0 * ((2.0 * PI * (x2 - c[1])).cos() - 1.0)).exp();
        }
        s
    })
    .expect("finite samples")
    .band_limited();
    let mode = SpectralField::from_fn(g, |x1, _| (2.0 * PI * (x1 - c[0])).cos())
        .expect("finite samples")
        .band_limited();
    let mut out = vec![
        ("constant".to_string(), SpectralField::constant(g, 1.0)),
        ("bump+".to_string(), bump.clone()),
        ("bump-".to_string(), bump.scale(-1.0)),
        ("mode+".to_string(), mode.clone()),
        ("mode-".to_string(), mode.scale(-1.0)),
    ];
    for r in 0..n_random {
        out.push((format!("random{r}"), random_smooth(g, seed.wrapping_add(r as u64))));
    }
    out
}

/// Random band-limited field with coefficients decaying like `exp(-|m|/2)`.
pub fn random_smooth(g: &std::sync::Arc<crate::torus::TorusGeometry>, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..g.num_nodes())
        .map(|i| {
            let m = g.frequency(i);
            let r = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
            let amp = if r <= 8.0 { (-r / 2.0).exp() } else { 0.0 };
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(amp * a, amp * b)
        })
        .collect();
    SpectralField::from_coeffs(g, coeffs).expect("finite coefficients").band_limited()
}

/// Best of several local minimizations; ties go to the earliest start.
fn best_of(
    problem: &ProblemData,
    q: f64,
    k: f64,
    starts: &[(String, SpectralField)],
    opts: &SolverOptions,
    sub: Option<&Subspace>,
) -> Result<(SphereMinimum, String)> {
    let results = parallel::map(starts, |_, (_, u)| minimize_on_sphere_in(problem, q, k, u, opts, sub));
    let mut best: Option<(SphereMinimum, String)> = None;
    let mut first_err = None;
    for (r, (name, _)) in results.into_iter().zip(starts) {
        match r {
            Ok(m) => {
                let better = match &best {
                    None => true,
                    Some((b, _)) => m.mu < b.mu,
                };
                if better {
                    best = Some((m, name.clone()));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(Error::InvalidArgument("no starting points".into())))
}

/// `mu_{k,q}` at one `k` from the full multistart seed set.
pub fn mu_multistart(problem: &ProblemData, q: f64, k: f64, opts: &SolverOptions) -> Result<(SphereMinimum, String)> {
    let starts = seed_fields(problem, opts.seed, opts.random_seeds);
    best_of(problem, q, k, &starts, opts, None)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuPoint {
    pub k: f64,
    pub mu: f64,
    pub lagrange: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub winner: String,
}

/// Sampled `k -> mu_{k,q}` with the minimizers that realize it.
#[derive(Debug, Clone)]
pub struct MuCurve {
    pub q: f64,
    pub points: Vec<MuPoint>,
    pub minimizers: Vec<SpectralField>,
}

impl MuCurve {
    pub fn k_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.k).collect()
    }

    pub fn mu_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mu).collect()
    }
}

/// Geometric grid of `n` points on `[k_min, k_max]`.
pub fn geometric_grid(k_min: f64, k_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![k_min];
    }
    let (a, b) = (k_min.ln(), k_max.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                k_min
            } else if i == n - 1 {
                k_max
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Sweep the geometric `k` grid forward with seeds plus warm starts, then
/// backward with warm starts, keeping the pointwise minimum.
pub fn trace_mu_curve(
    problem: &ProblemData,
    q: f64,
    k_min: f64,
    k_max: f64,
    n_points: usize,
    opts: &SolverOptions,
) -> Result<MuCurve> {
    if !(k_min > 0.0 && k_max > k_min && k_max.is_finite()) || n_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < k_min < k_max and at least 2 points, got [{k_min}, {k_max}] x {n_points}"
        )));
    }
    let ks = geometric_grid(k_min, k_max, n_points);
    let seeds = seed_fields(problem, opts.seed, opts.random_seeds);
    let mut fwd: Vec<Option<(SphereMinimum, String)>> = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let mut starts = seeds.clone();
        if let Some(Some((prev, _))) = i.checked_sub(1).map(|j| &fwd[j]) {
            starts.push(("warm-forward".to_string(), prev.v.clone()));
        }
        fwd.push(best_of(problem, q, k, &starts, opts, None).ok());
    }
    let mut out: Vec<Option<(SphereMinimum, String)>> = fwd.clone();
    for i in (0..ks.len().saturating_sub(1)).rev() {
        let Some((next, _)) = &out[i + 1] else { continue };
        let starts = vec![("warm-backward".to_string(), next.v.clone())];
        if let Ok(cand) = best_of(problem, q, ks[i], &starts, opts, None) {
            let replace = match &out[i] {
                None => true,
                Some((cur, _)) => cand.0.mu < cur.mu,
            };
            if replace {
                out[i] = Some(cand);
            }
        }
    }
    let mut points = Vec::with_capacity(ks.len());
    let mut minimizers = Vec::with_capacity(ks.len());
    for (k, r) in ks.iter().zip(out) {
        match r {
            Some((m, winner)) => {
                points.push(MuPoint {
                    k: *k,
                    mu: m.mu,
                    lagrange: m.lambda,
                    residual: m.residual,
                    iterations: m.iterations,
                    converged: m.converged,
                    winner,
                });
                minimizers.push(m.v);
            }
            None => {
                points.push(MuPoint {
                    k: *k,
                    mu: f64::NAN,
                    lagrange: f64::NAN,
                    residual: f64::NAN,
                    iterations: 0,
                    converged: false,
                    winner: String::new(),
                });
                minimizers.push(SpectralField::zeros(problem.geometry()));
            }
        }
    }
    Ok(MuCurve { q, points, minimizers })
}

/// Cache of sphere minimizers used to refine features of the mu-curve.
/// New points are warm-started from the nearest cached minimizers on each side.
pub struct MuEvaluator<'a> {
    pub problem: &'a ProblemData,
    pub q: f64,
    pub opts: SolverOptions,
    pub subspace: Option<Subspace>,
    cache: Vec<(f64, SphereMinimum)>,
}

impl<'a> MuEvaluator<'a> {
    pub fn new(problem: &'a ProblemData, q: f64, opts: SolverOptions) -> Self {
        MuEvaluator {
            problem,
            q,
            opts,
            subspace: None,
            cache: Vec::new(),
        }
    }

    pub fn from_curve(problem: &'a ProblemData, curve: &MuCurve, opts: SolverOptions) -> Self {
        let mut e = Self::new(problem, curve.q, opts);
        for (p, v) in curve.points.iter().zip(&curve.minimizers) {
            if p.mu.is_finite() {
                e.insert(
                    p.k,
                    SphereMinimum {
                        v: v.clone(),
                        mu: p.mu,
                        lambda: p.lagrange,
                        residual: p.residual,
                        iterations: p.iterations,
                        converged: p.converged,
                    },
                );
            }
        }
        e
    }

    fn insert(&mut self, k: f64, m: SphereMinimum) {
        let pos = self.cache.partition_point(|(kk, _)| *kk < k);
        if pos < self.cache.len() && self.cache[pos].0 == k {
            if m.mu < self.cache[pos].1.mu {
                self.cache[pos].1 = m;
            }
        } else {
            self.cache.insert(pos, (k, m));
        }
    }

    /// Record an externally computed minimizer.
    pub fn seed_cache(&mut self, k: f64, m: SphereMinimum) {
        self.insert(k, m);
    }

    pub fn get(&self, k: f64) -> Option<&SphereMinimum> {
        self.cache.iter().find(|(kk, _)| *kk == k).map(|(_, m)| m)
    }

    /// Minimizer at `k`, computed (and cached) on first request.
    pub fn minimum(&mut self, k: f64) -> Result<SphereMinimum> {
        if let Some(m) = self.get(k) {
            return Ok(m.clone());
        }
        let pos = self.cache.partition_point(|(kk, _)| *kk < k);
        let mut starts = Vec::new();
        if pos > 0 {
            starts.push(("warm-below".to_string(), self.cache[pos - 1].1.v.clone()));
        }
        if pos < self.cache.len() {
            starts.push(("warm-above".to_string(), self.cache[pos].1.v.clone()));
        }
        if starts.is_empty() {
            starts = seed_fields(self.problem, self.opts.seed, self.opts.random_seeds);
        }
        let (m, _) = best_of(self.problem, self.q, k, &starts, &self.opts, self.subspace.as_ref())?;
        self.insert(k, m.clone());
        Ok(m)
    }

    pub fn mu(&mut self, k: f64) -> Result<f64> {
        Ok(self.minimum(k)?.mu)
    }
}

/// Interior negative minimum `k_q` of the mu-curve, refined by golden section.
pub fn refine_negative_minimum(ev: &mut MuEvaluator, ks: &[f64], mus: &[f64], upto: usize) -> Result<(f64, f64)> {
    let mut j = None;
    for i in 0..upto.min(ks.len()) {
        if mus[i].is_finite() && j.is_none_or(|jj: usize| mus[i] < mus[jj]) {
            j = Some(i);
        }
    }
    let j = j.ok_or_else(|| Error::ShapeNotFound("no finite mu values".into()))?;
    if j == 0 || j + 1 >= ks.len() {
        return Ok((ks[j], mus[j]));
    }
    let mut f = |k: f64| ev.mu(k);
    scalar::golden_min(&mut f, ks[j - 1], ks[j + 1], 1e-4, true)
}

/// Critical point in both normalizations. Fields are left out of the
/// JSON form; they are dumped separately.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    pub q: f64,
    /// Equation-normalized field `u = (q/2)^{1/(q-2)} v`.
    #[serde(skip)]
    pub u: SpectralField,
    /// Variational representative.
    #[serde(skip)]
    pub v: SpectralField,
    pub energy: f64,
    pub residual: f64,
    pub int_f_v_q: f64,
    pub mass_v: f64,
    pub mass_u: f64,
    pub h2_norm_u: f64,
    pub lq_norm_u: f64,
    pub laplacian_sq_v: f64,
    pub identity_gap: f64,
    pub identity_gap_rel: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed_winner: String,
    pub degenerate: bool,
}

impl CriticalPointReport {
    /// Assemble a report for a free critical point `v` of `F_q`.
    pub fn from_critical(
        problem: &ProblemData,
        q: f64,
        v: SpectralField,
        iterations: usize,
        converged: bool,
        seed_winner: String,
    ) -> Result<Self> {
        let st = State::new(problem, q, v.band_limited())?;
        let v = st.u.clone();
        let scale = (q / 2.0).powf(1.0 / (q - 2.0));
        let u = v.scale(scale);
        let energy = st.energy();
        let residual = el_residual(&u, problem, q, 0.0, Normalization::Equation)?;
        let identity = (q / 2.0 - 1.0) * st.ev.f_mass;
        let gap = (energy - identity).abs();
        let mass_u = refined_power_integral(&u, q);
        let h2 = (laplacian_sq_integral(&u)
            + crate::torus::grad_sq_integral(&u)
            + inner_spectral(&u, &u)?)
        .sqrt();
        Ok(CriticalPointReport {
            q,
            energy,
            residual,
            int_f_v_q: st.ev.f_mass,
            mass_v: st.ev.mass,
            mass_u,
            h2_norm_u: h2,
            lq_norm_u: mass_u.powf(1.0 / q),
            laplacian_sq_v: laplacian_sq_integral(&v),
            identity_gap: gap,
            identity_gap_rel: gap / energy.abs().max(identity.abs()).max(1e-300),
            gradient_norm: l2_norm(&st.g),
            iterations,
            converged,
            seed_winner,
            degenerate: problem.f_sup_abs() == 0.0,
            u,
            v,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirstSolutionOptions {
    pub solver: SolverOptions,
    /// Ball radius used when `int f^- = 0` leaves `l_q` undefined.
    pub degenerate_radius: f64,
}

impl Default for FirstSolutionOptions {
    fn default() -> Self {
        FirstSolutionOptions {
            solver: SolverOptions::default(),
            degenerate_radius: 1.0,
        }
    }
}

/// Minimize `F_q` over the ball `||u||_q^q <= l_q` and return the
/// equation-normalized negative-energy solution.
pub fn first_solution(
    problem: &ProblemData,
    q: f64,
    l_q: f64,
    warm: Option<&SpectralField>,
    opts: &FirstSolutionOptions,
) -> Result<CriticalPointReport> {
    // l_q is infinite when int f^- = 0
    let l_q = if l_q == f64::INFINITY && problem.int_f_minus == 0.0 {
        opts.degenerate_radius
    } else {
        l_q
    };
    if !(l_q > 0.0) || !l_q.is_finite() {
        return Err(Error::InvalidArgument(format!("ball radius must be positive, got {l_q}")));
    }
    let sopts = &opts.solver;
    let mut starts: Vec<(String, SpectralField)> = Vec::new();
    if let Some(w) = warm {
        starts.push(("warm".to_string(), w.band_limited()));
    }
    // best constant inside the ball
    let int_h = problem.int_h();
    let int_f = problem.int_f();
    let mut fc = |k: f64| Ok(k.powf(2.0 / q) * int_h - k * int_f);
    let (kc, _) = scalar::golden_min(&mut fc, l_q * 1e-12, l_q, 1e-6, true)?;
    starts.push(("constant".to_string(), SpectralField::constant(problem.geometry(), kc.powf(1.0 / q))));
    for (name, s) in seed_fields(problem, sopts.seed, sopts.random_seeds) {
        for frac in [0.1, 0.5] {
            starts.push((format!("{name}@{frac}"), rescale_to_mass(&s, q, frac * l_q)?));
        }
    }
    let results = parallel::map(&starts, |_, (_, u)| descend(problem, q, u, Constraint::Ball(l_q), sopts, None));
    let mut best: Option<(State, usize, bool, String)> = None;
    for (r, (name, _)) in results.into_iter().zip(&starts) {
        if let Ok((st, it, conv)) = r {
            let interior = st.ev.mass < l_q * (1.0 - 1e-9);
            let cand_key = (conv && interior, -st.energy());
            let better = match &best {
                None => true,
                Some((b, _, bconv, _)) => {
                    let bi = b.ev.mass < l_q * (1.0 - 1e-9);
                    let bkey = (*bconv && bi, -b.energy());
                    st.energy() < b.energy() - 1e-12 * b.energy().abs() || (cand_key.0 && !bkey.0 && st.energy() <= b.energy() + 1e-9 * b.energy().abs())
                }
            };
            if better {
                best = Some((st, it, conv, name.clone()));
            }
        }
    }
    let (st, it, conv, name) =
        best.ok_or_else(|| Error::NonConvergence { context: "first_solution".into(), iterations: 0 })?;
    let interior = st.ev.mass < l_q * (1.0 - 1e-9);
    // with f = 0 the minimum sits on the boundary; report it flagged
    let degenerate = problem.f_sup_abs() == 0.0;
    let report = CriticalPointReport::from_critical(problem, q, st.u, it, conv && (interior || degenerate), name)?;
    if !(report.energy < 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "ball minimum has energy {} >= 0",
            report.energy
        )));
    }
    if !interior && !degenerate {
        return Err(Error::HypothesisViolated(format!(
            "minimizer sits on the ball boundary (mass {} vs l_q {l_q})",
            report.mass_v
        )));
    }
    if !conv {
        return Err(Error::NonConvergence { context: "first_solution".into(), iterations: it });
    }
    Ok(report)
}
