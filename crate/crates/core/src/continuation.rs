//! Continuation of the negative-energy solution from subcritical `q` up to
//! the critical exponent, with the a priori bounds checked at each step.

use serde::{Deserialize, Serialize};

use crate::certifier::{interp_constant, HypothesisReport};
use crate::error::{Error, Result};
use crate::io::ext_f64;
use crate::minimizer::{first_solution, CriticalPointReport, FirstSolutionOptions};
use crate::problem::{el_residual, Normalization, ProblemData};
use crate::torus::{l2_norm, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationOptions {
    /// Subcritical steps before the final solve at `q = N`.
    pub steps: usize,
    /// First exponent; `(2 + N) / 2` when absent.
    pub q0: Option<f64>,
    pub first: FirstSolutionOptions,
    /// Slack for the ball and norm bounds.
    pub bound_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            steps: 8,
            q0: None,
            first: FirstSolutionOptions::default(),
            bound_tol: 1e-8,
        }
    }
}

/// `eta` and `sigma`, frozen along the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrozenConstants {
    pub eta: f64,
    pub sigma: f64,
    pub c_sigma: f64,
    /// `||h|| + 2 ||a+|| C(sigma)`
    pub h_bar: f64,
}

impl FrozenConstants {
    pub fn new(problem: &ProblemData, eta: f64, sigma: f64) -> Result<Self> {
        let c_sigma = interp_constant(sigma, problem.geometry())?;
        Ok(FrozenConstants {
            eta,
            sigma,
            c_sigma,
            h_bar: problem.h_sup + 2.0 * problem.a_plus_sup * c_sigma,
        })
    }

    /// Taken from the configuration a certificate settled on.
    pub fn from_report(problem: &ProblemData, report: &HypothesisReport) -> Result<Self> {
        let c = report.chosen.as_ref().ok_or_else(|| {
            Error::HypothesisViolated("the certificate found no admissible (eta, sigma, eps)".into())
        })?;
        Self::new(problem, c.eta, c.sigma)
    }

    /// Ball radius `l_q = [2 h_bar / (eta int f^-)]^{q/(q-2)}`.
    pub fn l_q(&self, problem: &ProblemData, q: f64) -> f64 {
        (2.0 * self.h_bar / (self.eta * problem.int_f_minus)).powf(q / (q - 2.0))
    }
}

/// `q_j = N - (N - q0) 2^{-j}` for `j < steps`, then `N`.
pub fn schedule(critical: f64, q0: f64, steps: usize) -> Result<Vec<f64>> {
    if !(q0 > 2.0 && q0 < critical) {
        return Err(Error::InvalidArgument(format!("q0 must lie in (2, {critical}), got {q0}")));
    }
    let mut out: Vec<f64> = (0..steps).map(|j| critical - (critical - q0) * 0.5f64.powi(j as i32)).collect();
    out.push(critical);
    Ok(out)
}

/// Checks recorded at one exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub q: f64,
    pub l_q: f64,
    pub energy: f64,
    /// `||v||_q^q`, the ball coordinate.
    pub mass_v: f64,
    /// `||u||_q^q` of the equation-normalized field.
    pub mass_u: f64,
    pub mass_u_bound: f64,
    pub int_f_v_q: f64,
    pub residual: f64,
    pub identity_gap_rel: f64,
    pub h2_norm_u: f64,
    /// `(1 - 2 sigma ||a+||) ||Delta v||^2`
    pub laplacian_lhs: f64,
    /// `(2 ||a+|| C(sigma) + ||h||) l_q^{2/q} + ||f|| l_q`
    pub laplacian_rhs: f64,
    pub within_ball: bool,
    pub laplacian_bound_holds: bool,
    /// `(min h - 2 ||a+|| C(sigma) - max f+) max(l_q, 1)`
    pub energy_floor: f64,
    pub energy_floor_holds: bool,
    pub retried: bool,
    #[serde(skip)]
    pub v: Option<SpectralField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationTrace {
    pub schema_version: u32,
    pub constants: FrozenConstants,
    pub schedule: Vec<f64>,
    pub steps: Vec<ContinuationStep>,
    /// `q -> N` limit of `l_q` (exponent `n/4`).
    pub l_n: f64,
    pub final_int_f_negative: Option<bool>,
    /// `F_N(v_N) <= k^{2/N} int h / 2` at `k = ||v_N||_N^N`.
    pub level_bound_holds: Option<bool>,
    #[serde(with = "ext_f64")]
    pub level_bound: f64,
    pub critical_residual: Option<f64>,
    /// `||v_{q_j} - v_N||_2` along the schedule.
    pub distances_to_final: Vec<f64>,
    pub distances_decrease: Option<bool>,
    pub failure: Option<(String, String)>,
}

pub const TRACE_SCHEMA_VERSION: u32 = 1;

impl ContinuationTrace {
    pub fn completed(&self) -> bool {
        self.failure.is_none() && self.steps.len() == self.schedule.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

/// Equation residual at the critical exponent, `u` equation-normalized.
pub fn critical_residual(u: &SpectralField, problem: &ProblemData) -> Result<f64> {
    let n = problem.geometry().critical_exponent();
    el_residual(u, problem, n, 0.0, Normalization::Equation)
}

fn step_checks(
    problem: &ProblemData,
    k: &FrozenConstants,
    q: f64,
    l_q: f64,
    rep: &CriticalPointReport,
    tol: f64,
    retried: bool,
) -> ContinuationStep {
    let slack = 1.0 - 2.0 * k.sigma * problem.a_plus_sup;
    let lhs = slack * rep.laplacian_sq_v;
    let rhs = (2.0 * problem.a_plus_sup * k.c_sigma + problem.h_sup) * l_q.powf(2.0 / q)
        + problem.f_sup_abs() * l_q;
    let floor = (problem.min_h() - 2.0 * problem.a_plus_sup * k.c_sigma - problem.sup_f_plus) * l_q.max(1.0);
    ContinuationStep {
        q,
        l_q,
        energy: rep.energy,
        mass_v: rep.mass_v,
        mass_u: rep.mass_u,
        mass_u_bound: (q / 2.0).powf(q / (q - 2.0)) * l_q,
        int_f_v_q: rep.int_f_v_q,
        residual: rep.residual,
        identity_gap_rel: rep.identity_gap_rel,
        h2_norm_u: rep.h2_norm_u,
        laplacian_lhs: lhs,
        laplacian_rhs: rhs,
        within_ball: rep.mass_v <= l_q + tol,
        laplacian_bound_holds: lhs <= rhs * (1.0 + tol),
        energy_floor: floor,
        energy_floor_holds: rep.energy >= floor,
        retried,
        v: Some(rep.v.clone()),
    }
}

/// Follow the negative-energy solution along the exponent schedule and
/// verify the limiting identities at `q = N`. Failures are recorded in the
/// trace; the trace so far is always returned.
pub fn continue_to_critical(
    problem: &ProblemData,
    constants: FrozenConstants,
    opts: &ContinuationOptions,
) -> Result<ContinuationTrace> {
    let geom = problem.geometry();
    let crit = geom.critical_exponent();
    if !(problem.int_f_minus > 0.0) {
        return Err(Error::HypothesisViolated("integral of f^- must be positive".into()));
    }
    let q0 = opts.q0.unwrap_or(0.5 * (2.0 + crit));
    let sched = schedule(crit, q0, opts.steps)?;
    let l_n = (2.0 * constants.h_bar / (constants.eta * problem.int_f_minus))
        .powf(geom.n_ambient() as f64 / 4.0);
    let mut trace = ContinuationTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        constants,
        schedule: sched.clone(),
        steps: Vec::new(),
        l_n,
        final_int_f_negative: None,
        level_bound_holds: None,
        level_bound: f64::NAN,
        critical_residual: None,
        distances_to_final: Vec::new(),
        distances_decrease: None,
        failure: None,
    };
    let mut warm: Option<SpectralField> = None;
    for &q in &sched {
        let l_q = constants.l_q(problem, q);
        let mut retried = false;
        let rep = match first_solution(problem, q, l_q, warm.as_ref(), &opts.first) {
            Ok(r) => r,
            Err(Error::NonConvergence { .. }) if warm.is_some() => {
                retried = true;
                match first_solution(problem, q, l_q, None, &opts.first) {
                    Ok(r) => r,
                    Err(e) => {
                        trace.failure = Some((e.kind().to_string(), e.to_string()));
                        return Ok(trace);
                    }
                }
            }
            Err(e) => {
                trace.failure = Some((e.kind().to_string(), e.to_string()));
                return Ok(trace);
            }
        };
        let step = step_checks(problem, &constants, q, l_q, &rep, opts.bound_tol, retried);
        let bad_bound = !step.laplacian_bound_holds;
        warm = Some(rep.v.clone());
        trace.steps.push(step);
        if bad_bound {
            let e = Error::DivergingNorms {
                q,
                detail: "second-order norm exceeds its a priori bound".into(),
            };
            trace.failure = Some((e.kind().to_string(), e.to_string()));
            return Ok(trace);
        }
        if q == crit {
            let k_n = rep.mass_v;
            trace.level_bound = 0.5 * k_n.powf(2.0 / crit) * problem.int_h();
            trace.level_bound_holds = Some(rep.energy <= trace.level_bound);
            trace.final_int_f_negative = Some(rep.int_f_v_q < 0.0);
            trace.critical_residual = Some(critical_residual(&rep.u, problem)?);
        }
    }
    let last = trace.steps.last().and_then(|s| s.v.clone());
    if let Some(vn) = last {
        trace.distances_to_final = trace
            .steps
            .iter()
            .map(|s| l2_norm(&s.v.as_ref().expect("kept").sub(&vn).expect("same geometry")))
            .collect();
        let d = &trace.distances_to_final;
        if d.len() >= 4 {
            let tail = &d[d.len() - 4..d.len() - 1];
            trace.distances_decrease = Some(tail.windows(2).all(|w| w[1] <= w[0]));
        }
    }
    Ok(trace)
}
