//! JSON run configuration shared by every command.
//!
//! ```json
//! {
//!   "geometry": { "n_ambient": 6, "d_eff": 1, "grid_size": 128 },
//!   "a": "0.2", "h": "-1", "f": "cos(2*pi*x1) - 0.25",
//!   "q": 2.5,
//!   "k_range": { "k_min": 0.01, "k_max": 1e16, "k_steps": 48 },
//!   "seed": 7
//! }
//! ```
//!
//! Option blocks (`solver`, `certify`, `zeros`, `mountain_pass`,
//! `continuation`) are optional and default field by field. Solver options
//! are set once at the top level; the nested `solver` blocks of the
//! mountain-pass and continuation options are filled from it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::certifier::CertifyOptions;
use crate::continuation::ContinuationOptions;
use crate::error::{Error, Result};
use crate::minimizer::SolverOptions;
use crate::mountainpass::{MountainPassOptions, ZeroOptions};
use crate::problem::ProblemData;
use crate::torus::TorusGeometry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n_ambient: usize,
    pub d_eff: usize,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KRange {
    pub k_min: f64,
    pub k_max: f64,
    pub k_steps: usize,
}

impl Default for KRange {
    fn default() -> Self {
        KRange {
            k_min: 1e-2,
            k_max: 1e16,
            k_steps: 48,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub a: String,
    pub h: String,
    pub f: String,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub k_range: KRange,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub certify: CertifyOptions,
    #[serde(default)]
    pub zeros: ZeroOptions,
    #[serde(default)]
    pub mountain_pass: MountainPassOptions,
    #[serde(default)]
    pub continuation: ContinuationOptions,
}

impl RunConfig {
    /// Parse and normalize: the seed and solver options are propagated to
    /// every nested block.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: e.column().max(1),
            message: format!("line {}: {e}", e.line()),
        })?;
        // nested blocks may only hold the defaults or an already propagated copy
        let default_solver = SolverOptions::default();
        let inherited = |s: &SolverOptions| *s == default_solver || *s == c.solver;
        if !inherited(&c.mountain_pass.solver) || !inherited(&c.continuation.first.solver) {
            return Err(Error::Config("set solver options in the top-level 'solver' block".into()));
        }
        if let Some(s) = c.seed {
            c.set_seed(s);
        } else {
            c.set_seed(c.solver.seed);
        }
        c.validate_shape()?;
        Ok(c)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.solver.seed = seed;
        self.certify.seed = seed;
        self.mountain_pass.solver = self.solver.clone();
        self.continuation.first.solver = self.solver.clone();
    }

    fn validate_shape(&self) -> Result<()> {
        if let Some(q) = self.q {
            if !q.is_finite() || q <= 2.0 {
                return Err(Error::Config(format!("q must be a finite number above 2, got {q}")));
            }
        }
        let k = &self.k_range;
        if !(k.k_min > 0.0 && k.k_max > k.k_min && k.k_max.is_finite()) || k.k_steps < 3 {
            return Err(Error::Config(format!(
                "k_range needs 0 < k_min < k_max and k_steps >= 3, got [{}, {}] x {}",
                k.k_min, k.k_max, k.k_steps
            )));
        }
        if !(self.solver.grad_tol > 0.0) || !(self.solver.residual_tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config("solver needs grad_tol > 0, residual_tol > 0 and max_iter > 0".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Arc<TorusGeometry>> {
        let g = &self.geometry;
        TorusGeometry::new(g.n_ambient, g.d_eff, g.grid_size)
    }

    /// Sample the coefficients and check that `h` is negative.
    pub fn problem(&self) -> Result<ProblemData> {
        let g = self.geometry()?;
        let p = ProblemData::from_expressions(&g, &self.a, &self.h, &self.f)?;
        if p.max_h() >= 0.0 {
            return Err(Error::Config(format!(
                "h must be negative at every node, max h = {}",
                p.max_h()
            )));
        }
        Ok(p)
    }

    /// Exponent for subcritical commands.
    pub fn subcritical_q(&self) -> Result<f64> {
        let q = self.q.ok_or_else(|| Error::Config("no exponent q given".into()))?;
        let n = crate::problem::sobolev_exponent(self.geometry.n_ambient);
        if !(q < n) {
            return Err(Error::Config(format!("q = {q} is not below the critical exponent {n}")));
        }
        Ok(q)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}
