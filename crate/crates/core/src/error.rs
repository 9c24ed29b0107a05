use alloc::string::String;

/// Every failure the library can report. Variant names mirror the error
/// identifiers surfaced by the command line tool.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid plug spec: {0}")]
    InvalidPlugSpec(String),
    #[error("axioms-not-satisfied: {0}")]
    AxiomsNotSatisfied(String),
    #[error("ambient-not-vertical-in-box: deviation {deviation:e} at point {index}")]
    AmbientNotVerticalInBox { index: usize, deviation: f64 },
    #[error("collar-too-thin: vertical collar {collar} is narrower than two cells ({required})")]
    CollarTooThin { collar: f64, required: f64 },
    #[error("placement box does not fit in the torus")]
    PlacementTooLarge,
    #[error("vanishing-field: |X| = {norm:e} at point {index}")]
    VanishingField { index: usize, norm: f64 },
    #[error("missing companion field Y for vorticity-pair mode")]
    MissingY,
    #[error("companion field Y vanishes identically")]
    ZeroY,
    #[error("invalid volume form: coefficient {value} at point {index}")]
    InvalidVolume { index: usize, value: f64 },
    #[error("wrong mode: expected {expected}")]
    WrongMode { expected: &'static str },
    #[error("not-proportional: defect {defect:e} exceeds {limit:e}")]
    NotProportional { defect: f64, limit: f64 },
    #[error("T-zero: |T| = {t:e}")]
    TZero { t: f64 },
    #[error("alpha-degenerate: min alpha(X) = {min:e}")]
    AlphaDegenerate { min: f64 },
    #[error("rank-collapse at point {index}")]
    RankCollapse { index: usize },
    #[error("left-through-side at time {time}")]
    LeftThroughSide { time: f64 },
    #[error("trapped-in-range at parameter {tau}")]
    TrappedInRange { tau: f64 },
    #[error("orbit does not start in the entry region")]
    NotInEntryRegion,
    #[error("boundary-mismatch: filler boundary differs from c1 - c2 by mass {defect:e}")]
    BoundaryMismatch { defect: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
