use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge list does not form a tree on {n_vertices} vertices: {reason}")]
    NotATree { n_vertices: usize, reason: String },

    #[error("vertex index {index} out of range 1..={n_vertices}")]
    BadIndex { index: usize, n_vertices: usize },

    #[error("edge weight {weight} at edge {edge} is not positive")]
    NonPositiveWeight { edge: usize, weight: f64 },

    #[error("squared distance {dist_sq} exceeds the potential domain r^2 = {r_sq}")]
    OutOfDomain { dist_sq: f64, r_sq: f64 },

    #[error("edge ({i}, {j}) has length {length} >= communication radius {r}")]
    EdgeTooLong { i: usize, j: usize, length: f64, r: f64 },

    #[error("inertia matrix is singular at x = {x:?}")]
    SingularInertia { x: [f64; 2] },

    #[error("gain design infeasible: {0}")]
    DesignInfeasible(String),

    #[error("link ({i}, {j}) broke at t = {t:.6} s")]
    LinkBroken { t: f64, i: usize, j: usize },

    #[error("prerequisite check failed: {0}")]
    PrerequisiteFailed(String),

    #[error("check requires a zero user-force trace; max |f| = {max_force}")]
    WrongProfile { max_force: f64 },

    #[error("invalid scenario: {0}")]
    Schema(String),

    #[error("malformed trace: {0}")]
    TraceFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
