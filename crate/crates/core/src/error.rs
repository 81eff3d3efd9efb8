use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid spacing {h} does not divide the domain extent {extent}")]
    NonDividingSpacing { h: f64, extent: f64 },

    #[error("domain has no interior cells at spacing {h}")]
    EmptyDomain { h: f64 },

    #[error("exit segment {index} does not lie on the domain boundary")]
    ExitOffBoundary { index: usize },

    #[error("kernel support {support} is under-resolved by spacing {spacing} (need support/spacing >= {min_ratio})")]
    UnderResolvedKernel {
        support: f64,
        spacing: f64,
        min_ratio: f64,
    },

    #[error("normalizer z is not positive at interior cell ({i}, {j})")]
    DegenerateNormalizer { i: usize, j: usize },

    #[error("channel references population {population}, but only {available} are present")]
    MissingPopulation { population: usize, available: usize },

    #[error("channel references kernel {kernel}, but only {available} are present")]
    MissingKernel { kernel: usize, available: usize },

    #[error("characteristic tracing exceeded the cap of {cap} steps")]
    StepCap { cap: usize },

    #[error("point ({x}, {y}) is not inside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("CFL condition violated: courant number {courant} exceeds 1")]
    CflViolation { courant: f64 },

    #[error("no exit is reachable from interior cell ({i}, {j})")]
    UnreachableExit { i: usize, j: usize },

    #[error("non-finite density in population {population} at step {step}")]
    NonFinite { step: usize, population: usize },

    #[error("field shapes do not match")]
    ShapeMismatch,

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed snapshot: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
