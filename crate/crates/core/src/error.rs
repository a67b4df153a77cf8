use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("subsystem dimensions {dims:?} do not multiply to {dim}")]
    InconsistentDims { dims: Vec<usize>, dim: usize },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("vector of length {0} is not a vectorized square matrix")]
    NotSquareLength(usize),

    #[error("generator is singular on the traceless subspace (singular value ratio {margin:e})")]
    SingularOnSubspace { margin: f64 },

    #[error("right-hand side has trace {trace:e}; a traceless matrix is required")]
    NonTracelessRhs { trace: f64 },

    #[error("steady state is not unique (second-smallest singular value ratio {margin:e})")]
    DegenerateSteadyState { margin: f64 },

    #[error("no steady state found: residual {residual:e}")]
    NoSteadyState { residual: f64 },

    #[error("time evolution not converged at t = {time}: residual {residual:e}")]
    NotConverged { time: f64, residual: f64 },

    #[error("time step {dt} is unstable for a generator of norm {norm}")]
    UnstableStep { dt: f64, norm: f64 },

    #[error("invalid qubit parameters: {0}")]
    InvalidQubit(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("operation requires a {expected} model")]
    WrongModelKind { expected: &'static str },

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
}
