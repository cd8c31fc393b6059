//! Zeros of the mu-curve and the mountain-pass critical point between them.
//!
//! The path algorithm deforms a discrete string joining the two sphere
//! minimizers with zero energy (a Choi-McKenna style descent of the
//! interior nodes, orthogonal to the path). The string maximum gives an
//! upper estimate of the minimax level and a starting point. The critical
//! point itself is then located as the sphere minimizer whose Lagrange
//! multiplier vanishes, found by a root search on `k -> lambda_{k,q}`.
//! When the sphere minimizers switch branches at the top of the curve that
//! point is not critical, and a Newton iteration on the gradient started
//! from the string maximum takes over.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimizer::{
    minimize_on_sphere_in, rescale_to_mass, CriticalPointReport, MuEvaluator, Precond, SolverOptions,
    SphereMinimum, State, Subspace,
};
use crate::problem::ProblemData;
use crate::scalar::{bracket_root, brent_max, golden_max};
use crate::torus::{inner_spectral, l2_norm, refined_power_integral, SpectralField};

/// Zero crossings around the positive hump of a sampled curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuZeros {
    pub l1: f64,
    pub l2: f64,
    pub l_o: f64,
    pub mu_l_o: f64,
    /// Bracket ends on the negative side, used as path endpoints.
    pub k_left: f64,
    pub k_right: f64,
    pub mu_left: f64,
    pub mu_right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeroOptions {
    /// Stop when the bracket satisfies `b/a - 1 <= rel_tol`.
    pub rel_tol: f64,
    /// ... or when `|mu| <= abs_tol`.
    pub abs_tol: f64,
    /// Relative width for the maximum search.
    pub max_rel_tol: f64,
    /// Work in `log k` (positive grids).
    pub log_scale: bool,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        ZeroOptions {
            rel_tol: 1e-4,
            abs_tol: 1e-8,
            max_rel_tol: 1e-5,
            log_scale: true,
        }
    }
}

/// Locate `l1 < l_o < l2` around the largest positive sample of `mus`,
/// refining with `eval`. Fails with `ShapeNotFound` when the samples do not
/// go negative on both sides of a positive maximum.
pub fn find_mu_zeros(
    ks: &[f64],
    mus: &[f64],
    eval: &mut dyn FnMut(f64) -> Result<f64>,
    opts: &ZeroOptions,
) -> Result<MuZeros> {
    if ks.len() != mus.len() || ks.len() < 3 {
        return Err(Error::InvalidArgument("need at least three samples".into()));
    }
    if ks.windows(2).any(|w| !(w[1] > w[0])) || (opts.log_scale && !(ks[0] > 0.0)) {
        return Err(Error::InvalidArgument("k samples must be increasing (and positive on a log scale)".into()));
    }
    let mut j = None;
    for (i, &m) in mus.iter().enumerate() {
        if m.is_finite() && m > 0.0 && j.is_none_or(|jj: usize| m > mus[jj]) {
            j = Some(i);
        }
    }
    let j = j.ok_or_else(|| Error::ShapeNotFound("no positive values on the curve".into()))?;
    let left = (0..j).rev().find(|&i| mus[i].is_finite() && mus[i] < 0.0);
    let right = (j + 1..ks.len()).find(|&i| mus[i].is_finite() && mus[i] < 0.0);
    let (Some(il), Some(ir)) = (left, right) else {
        return Err(Error::ShapeNotFound(format!(
            "positive hump at k = {} is not enclosed by negative values",
            ks[j]
        )));
    };
    // innermost sign changes next to the negative samples
    let il_pos = (il + 1..=j).find(|&i| mus[i].is_finite() && mus[i] >= 0.0).unwrap_or(j);
    let ir_pos = (j..ir).rev().find(|&i| mus[i].is_finite() && mus[i] >= 0.0).unwrap_or(j);
    let b1 = bracket_root(eval, ks[il], ks[il_pos], mus[il], mus[il_pos], opts.rel_tol, opts.abs_tol, opts.log_scale)?;
    let b2 = bracket_root(eval, ks[ir_pos], ks[ir], mus[ir_pos], mus[ir], opts.rel_tol, opts.abs_tol, opts.log_scale)?;
    let l1 = b1.estimate(opts.log_scale);
    let l2 = b2.estimate(opts.log_scale);
    let lo_a = if j > 0 { ks[j - 1].max(b1.b.min(ks[j])) } else { ks[j] };
    let lo_b = if j + 1 < ks.len() { ks[j + 1].min(b2.a.max(ks[j])) } else { ks[j] };
    let (mut l_o, mut mu_l_o) = (ks[j], mus[j]);
    if lo_b > lo_a {
        let (x, v) = golden_max(eval, lo_a.max(l1), lo_b.min(l2), opts.max_rel_tol, opts.log_scale)?;
        if v >= mu_l_o {
            l_o = x;
            mu_l_o = v;
        }
    }
    let (k_left, mu_left) = if b1.ga < 0.0 { (b1.a, b1.ga) } else { (b1.b, b1.gb) };
    let (k_right, mu_right) = if b2.gb < 0.0 { (b2.b, b2.gb) } else { (b2.a, b2.ga) };
    Ok(MuZeros {
        l1,
        l2,
        l_o,
        mu_l_o,
        k_left,
        k_right,
        mu_left,
        mu_right,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MountainPassOptions {
    /// Number of path segments.
    pub segments: usize,
    pub max_iter: usize,
    /// Reparametrize by arc length every this many iterations.
    pub reparam_every: usize,
    pub stall_window: usize,
    pub stall_rel: f64,
    /// Gradient tolerance at the critical point, scaled by `1 + nu`.
    pub grad_tol: f64,
    /// Path-maximum collapse threshold.
    pub collapse_tol: f64,
    pub solver: SolverOptions,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        MountainPassOptions {
            segments: 40,
            max_iter: 2000,
            reparam_every: 10,
            stall_window: 25,
            stall_rel: 1e-10,
            grad_tol: 1e-6,
            collapse_tol: 1e-8,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub iteration: usize,
    pub node: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MountainPassResult {
    /// Critical point, variational normalization.
    #[serde(skip)]
    pub v: SpectralField,
    pub nu: f64,
    /// Final maximum of the deformed path (an upper estimate of `nu`).
    pub path_max: f64,
    /// Path maximum after each accepted deformation.
    pub max_history: Vec<f64>,
    #[serde(skip)]
    pub profile: Vec<ProfileRow>,
    /// `L^q` mass of the critical point.
    pub mass: f64,
    pub lagrange: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub report: CriticalPointReport,
}

struct Path<'a> {
    problem: &'a ProblemData,
    q: f64,
    nodes: Vec<State>,
}

impl<'a> Path<'a> {
    fn energies(&self) -> Vec<f64> {
        self.nodes.iter().map(|s| s.energy()).collect()
    }

    fn energy_at(&self, u: &SpectralField) -> Result<f64> {
        Ok(self.problem.evaluate(u, self.q)?.energy)
    }

    /// Maximum of the energy over the polyline and a field attaining it.
    /// Every segment is probed at interior points, and the best segment
    /// and those next to the highest node are refined.
    fn polyline_max(&self) -> Result<(f64, SpectralField)> {
        let e = self.energies();
        let n = e.len();
        let mut j = 0;
        for i in 1..n {
            if e[i] > e[j] {
                j = i;
            }
        }
        let seg = |a: usize, s: f64| -> Result<SpectralField> {
            self.nodes[a].u.scale(1.0 - s).add(&self.nodes[a + 1].u.scale(s))
        };
        let mut probe_best = (f64::NEG_INFINITY, 0usize);
        for a in 0..n - 1 {
            for s in [0.25, 0.5, 0.75] {
                let v = self.energy_at(&seg(a, s)?).unwrap_or(f64::INFINITY);
                if v > probe_best.0 {
                    probe_best = (v, a);
                }
            }
        }
        let mut candidates = vec![probe_best.1];
        if j > 0 {
            candidates.push(j - 1);
        }
        if j + 1 < n {
            candidates.push(j);
        }
        candidates.sort_unstable();
        candidates.dedup();
        let (mut best, mut top) = (e[j], self.nodes[j].u.clone());
        for a in candidates {
            let mut g = |s: f64| -> Result<f64> { self.energy_at(&seg(a, s)?) };
            let (s, v) = brent_max(&mut g, 0.0, 1.0, 1e-8, 100)?;
            if v > best {
                best = v;
                top = seg(a, s)?;
            }
        }
        Ok((best, top))
    }

    fn arc_lengths(&self) -> Vec<f64> {
        let mut s = vec![0.0];
        for w in self.nodes.windows(2) {
            let d = l2_norm(&w[1].u.sub(&w[0].u).expect("same geometry"));
            s.push(s.last().unwrap() + d);
        }
        s
    }

    /// Redistribute interior nodes uniformly in arc length.
    fn reparametrized(&self) -> Result<Vec<State>> {
        let s = self.arc_lengths();
        let total = *s.last().unwrap();
        let n = self.nodes.len();
        let mut out = Vec::with_capacity(n);
        out.push(self.nodes[0].clone_state(self.problem, self.q)?);
        let mut seg = 0;
        for i in 1..n - 1 {
            let target = total * i as f64 / (n - 1) as f64;
            while seg + 1 < n - 1 && s[seg + 1] < target {
                seg += 1;
            }
            let len = s[seg + 1] - s[seg];
            let t = if len > 0.0 { (target - s[seg]) / len } else { 0.0 };
            let u = self.nodes[seg].u.scale(1.0 - t).add(&self.nodes[seg + 1].u.scale(t))?;
            out.push(State::new(self.problem, self.q, u)?);
        }
        out.push(self.nodes[n - 1].clone_state(self.problem, self.q)?);
        Ok(out)
    }
}

impl State {
    fn clone_state(&self, problem: &ProblemData, q: f64) -> Result<State> {
        State::new(problem, q, self.u.clone())
    }
}

/// Deform the path from `u1` to `u2`, then locate the critical point at the
/// top. `u1` and `u2` should have non-positive energy.
pub fn mountain_pass(
    problem: &ProblemData,
    q: f64,
    u1: &SpectralField,
    u2: &SpectralField,
    opts: &MountainPassOptions,
) -> Result<MountainPassResult> {
    mountain_pass_in(problem, q, u1, u2, opts, None)
}

/// [`mountain_pass`] restricted to a trial subspace.
pub fn mountain_pass_in(
    problem: &ProblemData,
    q: f64,
    u1: &SpectralField,
    u2: &SpectralField,
    opts: &MountainPassOptions,
    sub: Option<&Subspace>,
) -> Result<MountainPassResult> {
    if opts.segments < 2 {
        return Err(Error::InvalidArgument("need at least two path segments".into()));
    }
    let proj = |u: &SpectralField| match sub {
        Some(s) => s.project(u),
        None => u.band_limited(),
    };
    let (u1, u2) = (proj(u1), proj(u2));
    let m1 = refined_power_integral(&u1, q).powf(1.0 / q);
    let m2 = refined_power_integral(&u2, q).powf(1.0 / q);
    let n = opts.segments;
    let mut nodes = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = j as f64 / n as f64;
        let u = if j == 0 {
            u1.clone()
        } else if j == n {
            u2.clone()
        } else {
            // straight segment with the L^q norm interpolated linearly
            let lin = u1.scale(1.0 - t).add(&u2.scale(t))?;
            let target = ((1.0 - t) * m1 + t * m2).powf(q);
            rescale_to_mass(&lin, q, target).unwrap_or(lin)
        };
        nodes.push(State::new(problem, q, u)?);
    }
    let mut path = Path { problem, q, nodes };
    let end_level = path.nodes[0].energy().max(path.nodes[n].energy());
    let pcs: Vec<Precond> = (0..=n)
        .map(|j| {
            let k = path.nodes[j].ev.mass;
            Precond::new(problem, q, k).restricted(sub)
        })
        .collect();
    let mut profile = Vec::new();
    let record = |profile: &mut Vec<ProfileRow>, it: usize, e: &[f64]| {
        for (node, &energy) in e.iter().enumerate() {
            profile.push(ProfileRow { iteration: it, node, energy });
        }
    };
    record(&mut profile, 0, &path.energies());
    let (mut cur_max, _) = path.polyline_max()?;
    let mut history = vec![cur_max];
    let mut steps = vec![1.0f64; n + 1];
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        // perpendicular preconditioned descent directions
        let mut dirs = Vec::with_capacity(n + 1);
        for j in 1..n {
            let tau = path.nodes[j + 1].u.sub(&path.nodes[j - 1].u)?;
            let tn = l2_norm(&tau);
            let mut g = path.nodes[j].g.clone();
            if tn > 0.0 {
                let tau = tau.scale(1.0 / tn);
                g = g.axpy(-inner_spectral(&g, &tau)?, &tau)?;
            }
            dirs.push(pcs[j].apply(&g).scale(-1.0));
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand = Vec::with_capacity(n + 1);
            cand.push(path.nodes[0].clone_state(problem, q)?);
            for j in 1..n {
                // nodes already below the endpoints would only run off to
                // where F is unbounded below and stretch the segments
                if path.nodes[j].energy() < end_level {
                    cand.push(path.nodes[j].clone_state(problem, q)?);
                    continue;
                }
                let u = path.nodes[j].u.axpy(steps[j], &dirs[j - 1])?;
                // an overflowing trial is just a step that is too long
                let ns = match State::new(problem, q, u) {
                    Ok(ns) => Some(ns),
                    Err(Error::NonFinite(_)) => None,
                    Err(e) => return Err(e),
                };
                if let Some(ns) = ns.filter(|ns| ns.energy() <= path.nodes[j].energy()) {
                    cand.push(ns);
                } else {
                    steps[j] *= 0.5;
                    cand.push(path.nodes[j].clone_state(problem, q)?);
                }
            }
            cand.push(path.nodes[n].clone_state(problem, q)?);
            let trial = Path { problem, q, nodes: cand };
            let (m, _) = trial.polyline_max()?;
            if m <= cur_max {
                path = trial;
                cur_max = m;
                accepted = true;
                for s in steps.iter_mut() {
                    *s = (*s * 1.5).min(1e6);
                }
                break;
            }
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
        }
        if !accepted {
            break;
        }
        if it % opts.reparam_every == 0 {
            let re = Path { problem, q, nodes: path.reparametrized()? };
            let (m, _) = re.polyline_max()?;
            if m <= cur_max {
                path = re;
                cur_max = m;
            }
        }
        history.push(cur_max);
        record(&mut profile, it, &path.energies());
        if cur_max < end_level + opts.collapse_tol {
            return Err(Error::Collapse {
                q,
                detail: format!("path maximum {cur_max} fell to the endpoint level {end_level}"),
            });
        }
        if history.len() > opts.stall_window {
            let old = history[history.len() - 1 - opts.stall_window];
            if (old - cur_max) <= opts.stall_rel * old.abs().max(1e-300) {
                break;
            }
        }
    }
    let (path_max, top) = path.polyline_max()?;
    if !(path_max > end_level + opts.collapse_tol) {
        return Err(Error::Collapse {
            q,
            detail: format!("path maximum {path_max} does not exceed the endpoints ({end_level})"),
        });
    }
    let (polished, mut iters) = polish_on_spheres(problem, q, &top, &opts.solver, sub)?;
    let sub_norm = |g: &SpectralField| match sub {
        Some(s) => l2_norm(&s.project(g)),
        None => l2_norm(g),
    };
    let tol = |st: &State| opts.grad_tol * (1.0 + st.energy().abs());
    let mut st = State::new(problem, q, polished.v.clone())?;
    let mut lagrange = polished.lambda;
    if sub_norm(&st.g) > tol(&st) {
        for start in [&top, &polished.v] {
            let (cand, its) = newton_saddle(problem, q, start, sub, opts.grad_tol)?;
            iters += its;
            let better = sub_norm(&cand.g) < sub_norm(&st.g);
            if better && cand.energy() > end_level + opts.collapse_tol {
                lagrange = cand.lagrange();
                st = cand;
            }
            if sub_norm(&st.g) <= tol(&st) {
                break;
            }
        }
    }
    let gradient_norm = sub_norm(&st.g);
    let nu = st.energy();
    if !(nu > end_level + opts.collapse_tol) {
        return Err(Error::Collapse {
            q,
            detail: format!("critical level {nu} does not exceed the endpoints ({end_level})"),
        });
    }
    let converged = gradient_norm <= opts.grad_tol * (1.0 + nu.abs());
    let report = CriticalPointReport::from_critical(
        problem,
        q,
        st.u.clone(),
        iterations + iters,
        converged,
        "mountain-pass".to_string(),
    )?;
    if !converged {
        return Err(Error::NonConvergence {
            context: format!("mountain pass gradient {gradient_norm} at level {nu}"),
            iterations: iterations + iters,
        });
    }
    Ok(MountainPassResult {
        v: st.u.clone(),
        nu,
        path_max,
        max_history: history,
        profile,
        mass: st.ev.mass,
        lagrange,
        gradient_norm,
        iterations,
        report,
    })
}

/// Sphere minimizer with vanishing multiplier near the mass of `top`:
/// a root of `k -> lambda_{k,q}`, where `lambda` is positive on the rising
/// side of the mu-curve and negative past its maximum.
fn polish_on_spheres(
    problem: &ProblemData,
    q: f64,
    top: &SpectralField,
    opts: &SolverOptions,
    sub: Option<&Subspace>,
) -> Result<(SphereMinimum, usize)> {
    let k0 = refined_power_integral(top, q);
    let mut ev = MuEvaluator::new(problem, q, opts.clone());
    ev.subspace = sub.cloned();
    let first = minimize_on_sphere_in(problem, q, k0, top, opts, sub)?;
    let mut iters = first.iterations;
    ev.seed_cache(k0, first.clone());
    let lam = |ev: &mut MuEvaluator, k: f64| -> Result<f64> { Ok(ev.minimum(k)?.lambda) };
    // expand geometrically until the multiplier changes sign
    let l0 = first.lambda;
    if l0 == 0.0 {
        return Ok((first, iters));
    }
    let dir = if l0 > 0.0 { 2.0 } else { 0.5 };
    let (mut ka, mut la) = (k0, l0);
    let mut bracket = None;
    for _ in 0..60 {
        let kb = ka * dir;
        let lb = lam(&mut ev, kb)?;
        if lb == 0.0 || (lb < 0.0) != (la < 0.0) {
            bracket = Some(if kb > ka { (ka, kb, la, lb) } else { (kb, ka, lb, la) });
            break;
        }
        ka = kb;
        la = lb;
    }
    let (a, b, ga, gb) = bracket.ok_or_else(|| {
        Error::ShapeNotFound("Lagrange multiplier does not change sign near the path maximum".into())
    })?;
    let mut g = |k: f64| -> Result<f64> { lam(&mut ev, k) };
    let br = bracket_root(&mut g, a, b, ga, gb, 1e-14, 0.0, true)?;
    // choose the bracket end with the smaller multiplier
    let (ka, kb) = (br.a, br.b);
    let ma = ev.minimum(ka)?;
    let mb = ev.minimum(kb)?;
    iters += ma.iterations + mb.iterations;
    let best = if ma.lambda.abs() * ka <= mb.lambda.abs() * kb { ma } else { mb };
    Ok((best, iters))
}

/// Newton's method for `grad F = 0` from `u0`, with MINRES inner solves on
/// finite-difference Hessian products and a backtracking search on the
/// gradient norm. Converges to nearby saddles as readily as to minima.
fn newton_saddle(
    problem: &ProblemData,
    q: f64,
    u0: &SpectralField,
    sub: Option<&Subspace>,
    grad_tol: f64,
) -> Result<(State, usize)> {
    let proj = |u: &SpectralField| match sub {
        Some(s) => s.project(u),
        None => u.band_limited(),
    };
    let mut st = State::new(problem, q, proj(u0))?;
    let mut iters = 0;
    for _ in 0..40 {
        let g = proj(&st.g);
        let gn = l2_norm(&g);
        if gn <= grad_tol * (1.0 + st.energy().abs()) {
            break;
        }
        let pc = Precond::new(problem, q, st.ev.mass).restricted(sub);
        let un = l2_norm(&st.u).max(1e-300);
        let hess = |v: &SpectralField| -> Result<SpectralField> {
            let vn = l2_norm(v);
            if vn == 0.0 {
                return Ok(v.clone());
            }
            let eps = 6e-6 * un / vn;
            let gp = State::new(problem, q, st.u.axpy(eps, v)?)?.g;
            let gm = State::new(problem, q, st.u.axpy(-eps, v)?)?.g;
            Ok(proj(&gp.sub(&gm)?.scale(0.5 / eps)))
        };
        let Ok((delta, its)) = minres(&hess, &g.scale(-1.0), &pc, 300, 1e-10) else {
            break;
        };
        iters += its;
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..30 {
            if let Ok(ns) = State::new(problem, q, proj(&st.u.axpy(t, &delta)?)) {
                if l2_norm(&proj(&ns.g)) < (1.0 - 1e-4 * t) * gn {
                    next = Some(ns);
                    break;
                }
            }
            t *= 0.5;
        }
        match next {
            Some(ns) => st = ns,
            None => break,
        }
    }
    Ok((st, iters))
}

/// Preconditioned MINRES for the symmetric, possibly indefinite system
/// `A x = b`. Stops early if `pc` turns out not to be positive.
fn minres(
    a: &dyn Fn(&SpectralField) -> Result<SpectralField>,
    b: &SpectralField,
    pc: &Precond,
    max_iter: usize,
    rtol: f64,
) -> Result<(SpectralField, usize)> {
    let mut x = SpectralField::zeros(b.geometry());
    let mut r1 = b.clone();
    let mut y = pc.apply(&r1);
    let beta1 = inner_spectral(&r1, &y)?;
    if !(beta1 > 0.0) {
        return Ok((x, 0));
    }
    let beta1 = beta1.sqrt();
    let (mut oldb, mut beta, mut dbar, mut epsln, mut phibar) = (0.0, beta1, 0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = SpectralField::zeros(b.geometry());
    let mut w2 = w.clone();
    let mut r2 = r1.clone();
    for it in 1..=max_iter {
        let v = y.scale(1.0 / beta);
        y = a(&v)?;
        if it >= 2 {
            y = y.axpy(-beta / oldb, &r1)?;
        }
        let alfa = inner_spectral(&v, &y)?;
        y = y.axpy(-alfa / beta, &r2)?;
        r1 = r2;
        r2 = y;
        y = pc.apply(&r2);
        oldb = beta;
        let bb = inner_spectral(&r2, &y)?;
        if !(bb >= 0.0) {
            return Ok((x, it));
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = w2;
        w2 = w;
        w = v.axpy(-oldeps, &w1)?.axpy(-delta, &w2)?.scale(1.0 / gamma);
        x = x.axpy(phi, &w)?;
        if phibar <= rtol * beta1 || beta == 0.0 {
            return Ok((x, it));
        }
    }
    Ok((x, max_iter))
}
