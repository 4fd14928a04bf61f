use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {element} is degenerate (local condition number {condition:.3e})")]
    DegenerateElement { element: usize, condition: f64 },

    #[error("point ({x}, {y}) lies outside the element")]
    PointOutsideElement { x: f64, y: f64 },

    #[error("local interpolation system is rank deficient (smallest singular value {sigma_min:.3e})")]
    SingularLocalSystem { sigma_min: f64 },

    #[error("no quadrature rule of degree {0}")]
    UnsupportedDegree(usize),

    #[error("singular quadrature did not converge after {levels} levels (partial value {partial})")]
    QuadratureNotConverged { levels: usize, partial: f64 },

    #[error("point ({x}, {y}) is not a mesh vertex")]
    NotAVertex { x: f64, y: f64 },

    #[error("edge {0} does not lie on the data boundary")]
    EdgeNotOnSigma(usize),

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("factorization failed: zero pivot at index {pivot}")]
    SingularFactorization { pivot: usize },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("linear solve did not reach tolerance (relative residual {residual:.3e})")]
    InaccurateSolve { residual: f64 },

    #[error("dense eigenproblem of dimension {dim} exceeds the limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("every direction lies in the common kernel")]
    AllInKernel,

    #[error("cannot fit a rate: {0}")]
    RateFit(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
