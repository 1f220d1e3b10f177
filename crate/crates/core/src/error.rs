use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("projection is ambiguous at this state")]
    AmbiguousProjection,
    #[error("state lies on the manifold; normal is undefined")]
    OnManifold,
    #[error("vector is not tangent to the well at the given point")]
    NotTangent,
    #[error("unsupported well geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("profile integration stalled at t = {0}")]
    StalledProfile(f64),
    #[error("profile too wide: tube {tube} exceeds regular radius {limit}")]
    ProfileTooWide { tube: f64, limit: f64 },
    #[error("linear solve diverged after {0} iterations")]
    LinearSolveDiverged(usize),
    #[error("stability violation: |u| reached {norm} > R_N = {bound}")]
    StabilityViolation { norm: f64, bound: f64 },
    #[error("inner loop stalled after {0} iterations")]
    InnerLoopStalled(usize),
    #[error("dissipation identity residual {residual:e} exceeds {tol:e}")]
    DissipationMismatch { residual: f64, tol: f64 },
    #[error("curve collapsed (length {0})")]
    CurveCollapse(f64),
    #[error("contact-point blend zones overlap")]
    BlendOverlap,
    #[error("no interface: level set is empty")]
    NoInterface,
    #[error("at least three epsilon values are required")]
    Requires3Epsilons,
    #[error("non-positive value {0} in slope fit")]
    NonPositiveValue(f64),
    #[error("missing artifacts: {0}")]
    MissingArtifacts(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Requires3Epsilons
            | Error::UnsupportedGeometry(_)
            | Error::MissingArtifacts(_)
            | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
