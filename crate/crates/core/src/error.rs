use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },

    /// The point sits on a branch boundary where one-sided values differ.
    #[error("point {x} is a branch boundary; the value is two-sided (caller must pick a side)")]
    BranchBoundary { x: f64 },

    #[error("orbit hit a critical point at step {step} (x = {x})")]
    CriticalOrbit { step: usize, x: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("malformed map: {0}")]
    MalformedMap(String),

    #[error("tower construction failed: {0}")]
    TowerConstruction(String),

    #[error("lifted orbit reached domain {domain}, whose successors were pruned by truncation")]
    Truncated { domain: usize },

    #[error("scaled neighbourhood [{lo}, {hi}] is not contained in the domain")]
    NeighbourhoodOutsideDomain { lo: f64, hi: f64 },

    #[error("target was never visited in {steps} steps")]
    NoVisits { steps: u64 },

    #[error("power iteration did not converge in {iterations} iterations (last residuals {residuals:?})")]
    NoConvergence { iterations: usize, residuals: Vec<f64> },

    #[error("sigma = {sigma} is not positive; the observable is (numerically) a coboundary, see the variance diagnostics")]
    DegenerateVariance { sigma: f64 },

    #[error("no invariant density is available for this map")]
    DensityUnavailable,

    #[error("empty sample")]
    EmptySample,

    #[error("normalising constant is zero")]
    ZeroNormalisation,

    #[error("truncation remainder {remainder} exceeds tolerance {tol}")]
    TruncationRemainder { remainder: f64, tol: f64 },

    #[error("map spec: {0}")]
    MapSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
