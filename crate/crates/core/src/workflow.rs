//! Stages behind the command-line tools. Each stage returns plain data so
//! callers can write outputs as soon as a stage finishes.

use serde::Serialize;

use crate::certifier::{certify, HypothesisReport, BallConstants};
use crate::config::{KRange, RunConfig};
use crate::error::{Error, Result};
use crate::io::{ext_f64_opt, MuRow};
use crate::minimizer::{first_solution, refine_negative_minimum, trace_mu_curve, CriticalPointReport, MuCurve, MuEvaluator, SolverOptions};
use crate::mountainpass::{find_mu_zeros, mountain_pass, MountainPassResult, MuZeros, ZeroOptions};
use crate::problem::ProblemData;
use crate::torus::l2_norm;

pub const ANNOTATIONS_SCHEMA_VERSION: u32 = 1;

/// Slack for the interval lower bound on the curve.
pub const LOWER_BOUND_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct CurveAnnotations {
    pub schema_version: u32,
    pub q: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_steps: usize,
    /// Sample indices whose minimization did not converge.
    pub gaps: Vec<usize>,
    pub negative_at_start: bool,
    /// `mu <= k^{2/q} int h / 2` at the smallest `k`.
    pub small_k_bound_holds: bool,
    #[serde(with = "ext_f64_opt")]
    pub k_q: Option<f64>,
    #[serde(with = "ext_f64_opt")]
    pub mu_k_q: Option<f64>,
    pub interior_negative_minimum: bool,
    /// Sign changes between consecutive samples.
    pub sign_changes: usize,
    pub zeros: Option<MuZeros>,
    pub zeros_error: Option<String>,
    /// `[k_{1,q}, k_{2,q}]` of the certificate.
    pub interval: Option<[f64; 2]>,
    #[serde(with = "ext_f64_opt")]
    pub mu_hat: Option<f64>,
    /// Samples inside the interval.
    pub interval_samples: usize,
    /// `min (mu - mu_hat k^{2/q} / 2)` over those samples.
    #[serde(with = "ext_f64_opt")]
    pub interval_margin: Option<f64>,
    pub interval_bound_holds: Option<bool>,
    pub mu_at_k_max: f64,
    pub decreasing_at_k_max: bool,
}

pub fn mu_rows(curve: &MuCurve) -> Vec<MuRow> {
    curve
        .points
        .iter()
        .map(|p| MuRow {
            k: p.k,
            mu: p.mu,
            lagrange: p.lagrange,
            residual: p.residual,
            iterations: p.iterations,
            flags: if p.converged {
                p.winner.clone()
            } else {
                format!("{};nonconverged", p.winner)
            },
        })
        .collect()
}

/// Certificate for the configured problem and exponent.
pub fn certify_stage(cfg: &RunConfig, problem: &ProblemData, q: f64) -> Result<HypothesisReport> {
    certify(problem, q, &cfg.certify)
}

/// Interval constants of the configuration the certificate chose.
pub fn chosen_constants(report: &HypothesisReport) -> Result<&BallConstants> {
    report
        .chosen
        .as_ref()
        .and_then(|c| c.constants.as_ref())
        .ok_or_else(|| Error::HypothesisViolated("the certificate found no admissible (eta, sigma, eps)".into()))
}

/// Trace the curve, then annotate it. The evaluator keeps the minimizers
/// computed during refinement for later stages.
pub fn curve_stage<'a>(
    problem: &'a ProblemData,
    q: f64,
    range: &KRange,
    solver: &SolverOptions,
    zero_opts: &ZeroOptions,
    constants: Option<&BallConstants>,
) -> Result<(MuCurve, CurveAnnotations, MuEvaluator<'a>)> {
    let curve = trace_mu_curve(problem, q, range.k_min, range.k_max, range.k_steps, solver)?;
    let ks = curve.k_grid();
    let mus = curve.mu_values();
    let mut ev = MuEvaluator::from_curve(problem, &curve, solver.clone());
    let gaps = curve
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.converged)
        .map(|(i, _)| i)
        .collect();
    let negative_at_start = mus.iter().take(3).all(|m| *m < 0.0);
    let small_k_bound_holds = mus[0] <= 0.5 * ks[0].powf(2.0 / q) * problem.int_h();
    let first_nonneg = mus.iter().position(|m| *m >= 0.0).unwrap_or(mus.len());
    let (k_q, mu_k_q, interior) = if first_nonneg >= 3 {
        let (k, m) = refine_negative_minimum(&mut ev, &ks, &mus, first_nonneg)?;
        (Some(k), Some(m), k > ks[0] && k < ks[first_nonneg - 1] && m < 0.0)
    } else {
        (None, None, false)
    };
    let sign_changes = mus
        .windows(2)
        .filter(|w| w[0].is_finite() && w[1].is_finite() && (w[0] < 0.0) != (w[1] < 0.0))
        .count();
    let (zeros, zeros_error) = {
        let mut eval = |k: f64| ev.mu(k);
        match find_mu_zeros(&ks, &mus, &mut eval, zero_opts) {
            Ok(z) => (Some(z), None),
            Err(e @ Error::ShapeNotFound(_)) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        }
    };
    let mut interval_samples = 0;
    let mut margin: Option<f64> = None;
    if let Some(c) = constants {
        for (&k, &m) in ks.iter().zip(&mus) {
            if k >= c.k1q && k <= c.k2q {
                interval_samples += 1;
                let d = m - 0.5 * c.mu * k.powf(2.0 / q);
                margin = Some(margin.map_or(d, |x: f64| x.min(d)));
            }
        }
    }
    let n = mus.len();
    let ann = CurveAnnotations {
        schema_version: ANNOTATIONS_SCHEMA_VERSION,
        q,
        k_min: range.k_min,
        k_max: range.k_max,
        k_steps: range.k_steps,
        gaps,
        negative_at_start,
        small_k_bound_holds,
        k_q,
        mu_k_q,
        interior_negative_minimum: interior,
        sign_changes,
        zeros,
        zeros_error,
        interval: constants.map(|c| [c.k1q, c.k2q]),
        mu_hat: constants.map(|c| c.mu),
        interval_samples,
        interval_margin: margin,
        interval_bound_holds: margin.map(|m| m >= -LOWER_BOUND_TOL),
        mu_at_k_max: mus[n - 1],
        decreasing_at_k_max: mus[n - 1] < mus[n - 2],
    };
    Ok((curve, ann, ev))
}

/// Mountain pass between the sphere minimizers at the negative ends of
/// the zero brackets.
pub fn mountain_stage(
    problem: &ProblemData,
    q: f64,
    ev: &mut MuEvaluator,
    zeros: &MuZeros,
    cfg: &RunConfig,
) -> Result<MountainPassResult> {
    let u1 = ev.minimum(zeros.k_left)?.v;
    let u2 = ev.minimum(zeros.k_right)?.v;
    mountain_pass(problem, q, &u1, &u2, &cfg.mountain_pass)
}

pub const SUB_SCHEMA_VERSION: u32 = 1;

/// Both subcritical solutions side by side.
#[derive(Debug, Clone, Serialize)]
pub struct SubReport {
    pub schema_version: u32,
    pub q: f64,
    pub l_q: f64,
    pub first: CriticalPointReport,
    pub second: MountainPassResult,
    pub zeros: MuZeros,
    /// `F(first) < 0 < F(second)`
    pub ordering_holds: bool,
    /// `nu >= mu(l_o) - tol`
    pub level_above_hump: bool,
    /// `||u_first - u_second||_2`
    pub separation: f64,
}

impl SubReport {
    pub fn new(q: f64, l_q: f64, first: CriticalPointReport, second: MountainPassResult, zeros: MuZeros) -> Self {
        let ordering_holds = first.energy < 0.0 && second.nu > 0.0;
        let level_above_hump = second.nu >= zeros.mu_l_o - LOWER_BOUND_TOL;
        let separation = first.u.sub(&second.report.u).map(|d| l2_norm(&d)).unwrap_or(f64::NAN);
        SubReport {
            schema_version: SUB_SCHEMA_VERSION,
            q,
            l_q,
            first,
            second,
            zeros,
            ordering_holds,
            level_above_hump,
            separation,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

/// First (negative-energy) solution in the ball of radius `l_q`.
pub fn first_stage(problem: &ProblemData, q: f64, l_q: f64, cfg: &RunConfig) -> Result<CriticalPointReport> {
    first_solution(problem, q, l_q, None, &cfg.continuation.first)
}
