use thiserror::Error;

/// Errors reported by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no unique solution: singular lifted system (pivot ratio {pivot_ratio:e})")]
    SingularLift { pivot_ratio: f64 },

    #[error("eigenvalue computation did not converge")]
    EigenNoConvergence,

    #[error("pole on grid: i*omega = i*{omega} is within {distance:e} of eigenvalue {eigenvalue}")]
    PoleOnGrid {
        omega: f64,
        eigenvalue: num_complex::Complex64,
        distance: f64,
    },

    #[error("plant is not stabilizable")]
    NotStabilizable,

    #[error("stabilization failed after {retries} retries (closed-loop abscissa {abscissa})")]
    StabilizationFailed { retries: usize, abscissa: f64 },

    #[error("initial feedback is not stabilizing (closed-loop measure {measure})")]
    NotStabilizingStart { measure: f64 },

    #[error("iteration left stabilizing set at step {iteration} (closed-loop measure {measure})")]
    LeftStabilizingSet { iteration: usize, measure: f64 },

    #[error("subspace not graph: X1 is singular (rcond {rcond:e})")]
    SubspaceNotGraph { rcond: f64 },

    #[error("target outside controllable subspace (projection residual {residual:e})")]
    TargetUnreachable { residual: f64 },

    #[error("eta not violating: eta* Phi(omega) eta = {value} >= 0")]
    EtaNotViolating { value: f64 },

    #[error("cycle cap exceeded: cost still {cost} at {cycles} cycles")]
    CycleCapExceeded { cycles: usize, cost: f64 },

    #[error("trajectory not periodic: |x(0) - x(T)| = {gap:e}")]
    NonPeriodic { gap: f64 },

    #[error("stochastic stabilizability not certified")]
    NotCertified,

    #[error("simulation exploded at t = {time}")]
    Exploded { time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
