//! Spectral variational solver for
//! `Delta^2 u + div(a grad u) + h u = f |u|^{q-2} u` on flat tori.

pub mod certifier;
pub mod config;
pub mod continuation;
pub mod error;
pub mod expr;
pub mod io;
pub mod minimizer;
pub mod mountainpass;
pub mod parallel;
pub mod problem;
pub mod scalar;
pub mod torus;
pub mod workflow;

pub use error::{Error, Result};
