use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("triangle {0} is not a leaf of the mesh")]
    NotALeaf(usize),

    #[error("meshes do not share a root forest")]
    IncompatibleForest,

    #[error("edge {0} does not belong to the leaf skeleton")]
    StaleEdge(usize),

    #[error("point ({x}, {y}) lies outside element {element}")]
    PointOutsideElement { element: usize, x: f64, y: f64 },

    #[error("unsupported quadrature exactness {0} (maximum is 20)")]
    UnsupportedExactness(usize),

    #[error("reaction evaluation failed on element {element}: {reason}")]
    Reaction { element: usize, reason: String },

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("time step underflow: tau = {tau:e} below minimum {tau_min:e}")]
    TimeStepUnderflow { tau: f64, tau_min: f64 },

    #[error("missing exact solution for problem {0}")]
    MissingExactSolution(String),

    #[error("zero true error; effectivity undefined")]
    ZeroError,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 2 for configuration problems, 3 for solver
    /// failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) => 4,
            Error::Reaction { .. }
            | Error::LinearSolver(_)
            | Error::NewtonDivergence { .. }
            | Error::TimeStepUnderflow { .. }
            | Error::ZeroError => 3,
            _ => 2,
        }
    }
}
