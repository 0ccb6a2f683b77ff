//! Numerical laboratory for two exactly solvable linear shell models.
//!
//! Model A couples neighbouring shells with `c_n = n`, model B with
//! `c_n = n(n + 1/2)`. Both are formally energy conserving yet can move
//! energy to arbitrarily high shells in finite time. The crate provides
//! exact solvers (generating functions for model A, a Sturm–Liouville
//! expansion for model B), truncated time integrators used as independent
//! oracles, closed-form and quadrature steady states, and a small
//! singularity calculus for coefficient asymptotics.

pub mod asymptotics;
pub mod error;
pub mod exact_gf;
pub mod integrate;
pub mod model_b_spectral;
pub mod model_core;
pub mod numerics;
pub mod stationary;

pub use error::{CascadeError, Result};
pub use model_core::{CouplingFamily, Provenance, RegimeLabel, ShellSequence};
