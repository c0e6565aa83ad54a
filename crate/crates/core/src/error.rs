use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("singular point at x = {x}, z = {z}: |{what}| = {magnitude:e} below node threshold")]
    Singular {
        what: &'static str,
        x: f64,
        z: f64,
        magnitude: f64,
    },

    #[error("sampling grid hits a node of the {what} near x = {x}, z = {z}")]
    NodeOnGrid { what: &'static str, x: f64, z: f64 },

    #[error("system is not regular: {0}")]
    NotRegular(String),

    #[error("mode {mode} is not defined for the {system} system")]
    UnsupportedMode { mode: String, system: &'static str },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("derivative resolution too coarse: {0}")]
    DerivativeResolution(String),

    #[error("Gram-Schmidt breakdown at vector {index}: pseudo-norm magnitude {magnitude:e}")]
    GramSchmidtBreakdown { index: usize, magnitude: f64 },

    #[error("overlap matrix is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("monodromy matrix is defective (eigenvector condition number {0:e})")]
    DefectiveMonodromy(f64),

    #[error("step size underflow at z = {z} (step {step:e})")]
    StepUnderflow { z: f64, step: f64 },

    #[error("tridiagonal solve broke down at row {0} (zero pivot)")]
    ZeroPivot(usize),

    #[error("propagation unstable at z = {z}: power grew by {growth:e}")]
    Unstable { z: f64, growth: f64 },

    #[error("all calibration starts failed: {0}")]
    CalibrationFailed(String),

    #[error("no rational approximation within tolerance")]
    Irrational,

    #[error("series is flat; no dominant oscillation")]
    FlatSeries,

    #[error("{0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameters(msg.into())
    }

    /// Wraps an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
