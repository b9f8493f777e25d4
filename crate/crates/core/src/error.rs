use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("profile vertex {index} touches the rotation axis (r = {r:e})")]
    AxisCollision { index: usize, r: f64 },
    #[error("operation is not defined for immersed curves")]
    UnsupportedForImmersed,
    #[error("need at least {required} vertices, got {got}")]
    TooFewVertices { required: usize, got: usize },

    #[error("no shrinker in the admissible window: {0}")]
    NoSolutionInWindow(String),
    #[error("shooting bracket failure: {0}")]
    ShootingBracketFailure(String),
    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("geometry is not a self-shrinker (residual {residual:e} > {limit:e})")]
    NotAShrinker { residual: f64, limit: f64 },
    #[error("eigen-solver did not converge after {iterations} iterations")]
    EigenSolveFailure { iterations: usize },
    #[error("perturbation self-intersects: {0}")]
    PerturbationTooLarge(String),

    #[error("numerical blow-up at t = {time}: {detail}")]
    NumericalBlowup { time: f64, detail: String },
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("requested window is outside the stored trajectory: {0}")]
    InsufficientHistory(String),

    #[error("rescaled mean curvature changes sign")]
    MixedSign,
    #[error("initial geometries are not disjoint")]
    NotDisjoint,
    #[error("probe window touches a remesh event at t = {0}")]
    ProbeContaminated(f64),

    #[error("perturbation is neither rescaled mean convex nor concave")]
    AbortNotGeneric,
    #[error("empty input")]
    EmptyInput,
    #[error("regression failure: {0}")]
    RegressionFailure(String),
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
