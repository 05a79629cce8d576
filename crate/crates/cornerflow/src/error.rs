use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("point ({re}, {im}) is outside the flow domain")]
    PointOutsideDomain { re: f64, im: f64 },
    #[error("mapped point ({re}, {im}) is outside the target region")]
    PointOutsideTarget { re: f64, im: f64 },
    #[error("evaluation at ({re}, {im}) crosses an unresolved branch cut")]
    BranchCutViolation { re: f64, im: f64 },
    #[error("point ({re}, {im}) coincides with a corner")]
    CornerSingularity { re: f64, im: f64 },
    #[error("corner probe needs at least 5 radii, got {0}")]
    InsufficientSamples(usize),
    #[error("least-squares fit is degenerate")]
    FitDegenerate,
    #[error("interior domains have no far field")]
    InteriorDomainHasNoFarField,
    #[error("interior domains have no harmonic field")]
    InteriorDomainHasNoHarmonicField,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("evaluation points coincide")]
    CoincidentPoints,
    #[error("contour leaves the flow domain")]
    ContourLeavesDomain,
    #[error("boundary point is within {distance:e} of a corner")]
    TooCloseToCorner { distance: f64 },
    #[error("particle {index} is on the boundary (mapped gap {gap:e})")]
    ParticleOnBoundary { index: usize, gap: f64 },
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("particle {index} left the flow domain at t = {time}")]
    ParticleEscapedDomain { index: usize, time: f64 },
    #[error("patch comes within {distance:e} of the boundary (needs > {required:e})")]
    PatchTouchesBoundary { distance: f64, required: f64 },
    #[error("evaluation point coincides with particle {0}")]
    CoincidesWithParticle(usize),
    #[error("circulations have mixed signs")]
    SignConditionViolated,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("disk contains vorticity")]
    DiskContainsVorticity,
    #[error("disk leaves the region where the field is defined")]
    DiskLeavesRegion,
    #[error("ensembles carry different total circulation ({a} vs {b})")]
    CirculationMismatch { a: f64, b: f64 },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("invalid configuration, {invariant}: {message}")]
    Validation { invariant: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FlowError {
    fn from(e: std::io::Error) -> Self {
        FlowError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
