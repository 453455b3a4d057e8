//! Simulation and verification toolkit for the singularly perturbed forced
//! Duffing oscillator
//!
//! ```text
//! eps^2 (a(t)^2 y')' + f(y) = m(t),   t in [t_B, t_E].
//! ```
//!
//! The crate extracts the critical manifold `f(y) = m(t)` (folds, branches,
//! charts), checks the structural assumptions on it, integrates trajectories
//! in the fast time `tau = t / eps`, and certifies the oscillation
//! properties: monotone polar angle around the reference branch, a spacing
//! bound `s <= eps * pi / c` between successive zeros of `y - u_i`, growth
//! of the zero count as `eps` shrinks, and convergence of the amplitude
//! envelopes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod energy;
pub mod error;
pub mod function;
pub mod manifold;
pub mod ode;
pub mod output;
pub mod polar;
pub mod problem;
pub mod quadrature;
pub mod roots;
pub mod simulate;

pub use error::{Error, Result};
pub use function::{FunctionKind, FunctionSpec, TrigTerm};
pub use manifold::{BranchId, Chart, ChartId, ChartPartition, CriticalManifold, Fold, Geometry};
pub use problem::{builtin, OscillatorProblem, ValidationReport};
