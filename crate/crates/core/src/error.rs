use std::path::PathBuf;

use crate::newton::NewtonStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point is not on the unit sphere (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("zero quaternion has no inverse or logarithm")]
    ZeroQuaternion,

    #[error("cannot project the zero vector onto the sphere")]
    ZeroVector,

    #[error("antipodal points do not determine a unique geodesic (a.b = {dot})")]
    Antipodal { dot: f64 },

    #[error("singular matrix: pivot {pivot:e} below threshold {threshold:e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("newton iteration did not converge after {} iterations (residual {:e})", .stats.iterations, .stats.final_residual_norm)]
    NonConvergence { stats: NewtonStats },

    #[error("step too large: {0}")]
    StepTooLarge(String),

    #[error("field `{field}` is singular at the evaluation point (vortex center {center})")]
    Singularity { field: String, center: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("field `{0}` has no conserved observable")]
    MissingObservable(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("step {index} failed: {source}")]
    StepFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{method} run with h = {h} failed: {source}")]
    RunFailed {
        method: String,
        h: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed csv at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
