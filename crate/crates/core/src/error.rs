use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("division by a series with vanishing constant term")]
    SingularDivision,
    #[error("square root of a series with vanishing constant term")]
    SingularSqrt,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid polydisc bounds: every field must be positive and finite")]
    InvalidBounds,
    #[error("safety factor {0} is outside (0, 1)")]
    InvalidSafety(f64),
    #[error("expansion order must be at least 1")]
    InvalidOrder,
    #[error("vector field is singular at the expansion point t = {0}")]
    SingularExpansion(Complex64),
    #[error("step |dt| = {step} exceeds the admissible {limit}")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("detour radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("a flank needs at least 3 arc points, got {0}")]
    TooFewArcPoints(usize),
    #[error("continuation path has no waypoints")]
    EmptyPath,
    #[error("first waypoint {0} is not real")]
    NonRealStart(Complex64),
    #[error("consecutive waypoints {0} coincide")]
    RepeatedWaypoint(usize),
    #[error("initial state must be nonempty and finite")]
    InvalidState,
    #[error("invalid option: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("point lies on the singular locus u² + v² = 0")]
    SingularLocus,
    #[error("initial velocity is null (xy = 0); use the closed-form null geodesic")]
    NullGeodesic,
    #[error("initial velocity is not null (x and y both nonzero)")]
    NotNull,
    #[error("zero initial velocity gives a stationary curve")]
    Stationary,
    #[error("initial position is the origin")]
    Origin,
    #[error("point lies on a coordinate axis")]
    OnAxis,
    #[error("point does not lie on a coordinate axis")]
    OffAxis,
    #[error("crossing with zero transversal velocity")]
    DegenerateCrossing,
    #[error("A·Ch(ω−η) vanishes")]
    SingularReduction,
    #[error("B ± s vanishes on the selected branch")]
    BranchDegeneracy,
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("continuation failed at t = {t}: {message}")]
    Continuation { t: f64, message: String },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid point {index}: {source}")]
    InvalidGridPoint { index: usize, source: ModelError },
}
