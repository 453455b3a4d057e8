use crate::manifold::{BranchId, ChartId};

/// Errors raised by the toolkit.
///
/// Assumption failures that are part of a check (as opposed to a
/// precondition of an operation) are reported through
/// [`ValidationReport`](crate::problem::ValidationReport) instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid function description: {0}")]
    InvalidFunction(String),

    #[error("non-finite result evaluating derivative order {order} at x = {x}")]
    EvaluationOverflow { x: f64, order: u8 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown builtin instance `{0}` (expected D0, D1 or D2)")]
    UnknownInstance(String),

    #[error("assumption A1 violated: {0}")]
    AssumptionA1Violated(String),

    #[error("t = {t} is outside the domain [{lo}, {hi}] of branch {branch}")]
    BranchDomain {
        branch: BranchId,
        t: f64,
        lo: f64,
        hi: f64,
    },

    #[error("chart {0} is empty for the requested margin")]
    ChartMarginTooLarge(ChartId),

    #[error("energy offset must be positive, got {0}")]
    InvalidDelta(f64),

    #[error("no turning points for level {level} at t = {t}")]
    NoTurningPoints { t: f64, level: f64 },

    #[error("level {level} at t = {t} lies on the separatrix through y = {barrier}")]
    SeparatrixLevel { t: f64, level: f64, barrier: f64 },

    #[error("step size underflow at t = {t} (fast-time step {step:e})")]
    StiffnessFailure { t: f64, step: f64 },

    #[error("state diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("polar transform undefined at zero radius")]
    PolarSingularity,

    #[error("branch derivative unavailable near a fold at t = {t}")]
    BranchDerivativeUnavailable { t: f64 },

    #[error("epsilon too large for chart {chart}: rate bound {value} <= 0 at t = {t}, y = {y}")]
    EpsilonTooLarge {
        chart: ChartId,
        t: f64,
        y: f64,
        value: f64,
    },

    #[error("operation needs a trajectory with dense output")]
    DenseOutputRequired,

    #[error("envelope convergence needs at least two epsilon values")]
    NeedsSweep,

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
