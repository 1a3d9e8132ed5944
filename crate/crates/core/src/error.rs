use alloc::string::String;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("the map is identically zero")]
    ZeroMap,
    #[error("perturbation term of order {order} is not homogeneous of that degree")]
    NotHomogeneous { order: u32 },
    #[error("curve coefficient of order 0 must vanish")]
    CurveNotCentered,
    #[error("requested truncation {requested} but coefficients are only determined through {determined}")]
    InsufficientTruncation { requested: usize, determined: usize },
    #[error("claimed order {claimed} failed re-verification: {detail}")]
    InconsistentK { claimed: usize, detail: String },
    #[error("the family is not surjective at any order up to {max_k}")]
    NotKSurjective { max_k: usize },
    #[error("shift {shift} is not admissible for order {k}")]
    InvalidShift { shift: usize, k: usize },
    #[error("blown-up limit does not exist: a term of order {order} survives below {expected}")]
    ShiftOrderViolation { order: usize, expected: usize },
    #[error("approximation order {q:?} is below the required {needed}")]
    InsufficientApproximation { q: Option<usize>, needed: usize },
    #[error("route {route} needs shift {needed}, frame has {shift}")]
    RouteShiftMismatch { route: String, needed: usize, shift: usize },
    #[error("no route passed the gate")]
    RouteNotGated,
    #[error("Newton iteration stalled at residual {residual:e} after {iterations} iterations")]
    NewtonDivergence { residual: f64, iterations: usize },
    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },
    #[error("continuation broke down at eps = {eps:e}")]
    ContinuationBreakdown { eps: f64, last_good: Option<f64> },
    #[error("level coordinate norm {norm:e} exceeds the cone radius {radius:e}")]
    OutOfCone { norm: f64, radius: f64 },
    #[error("transversal determinant vanishes through order {t}")]
    DegenerateThroughT { t: usize },
    #[error("Milnor formula gives the non-positive value {value}")]
    NonPositive { value: i64 },
    #[error("cone decomposition invariant violated: {0}")]
    DecompositionViolation(String),
}

pub type Result<T> = core::result::Result<T, Error>;
