use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

/// Errors surfaced by the solver library.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("degenerate grid: need nx >= 3 and ny == 1 (line) or ny >= 3, got {nx}x{ny}")]
    DegenerateGrid { nx: usize, ny: usize },

    #[error("node {node} lies on the boundary; representers exist for interior nodes only")]
    BoundaryNode { node: usize },

    #[error("matrix not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("matrix not positive definite: Cholesky pivot {index} is {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("chi distribution requires t >= 0, got {t}")]
    NegativeChiArgument { t: f64 },

    #[error("sphere sampling requires m >= 1 and n >= 1, got m={m}, n={n}")]
    BadSphereArguments { m: usize, n: usize },

    #[error(
        "mean-state Slater condition violated: max expected state {max_state:e} >= threshold alpha {alpha:e}"
    )]
    SlaterViolation { max_state: f64, alpha: f64 },

    #[error("no strictly feasible control found by probing: best probability {best_phi} <= level {p}")]
    SlaterProbeFailed { best_phi: f64, p: f64 },

    #[error("no robust Slater point found: best worst-case margin {margin:e} >= 0")]
    RobustSlaterFailed { margin: f64 },

    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("iteration cap reached in {what}: best residual {residual:e}")]
    IterationCap { what: String, residual: f64 },

    #[error("probability level must lie in (0,1), got {p}")]
    BadProbabilityLevel { p: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{0}")]
    Invalid(String),
}
