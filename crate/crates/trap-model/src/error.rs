use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site:?} lies outside the addressable region (radius {radius})")]
    RegionViolation { site: String, radius: f64 },

    #[error("dimension {0} is not supported here (need d >= {1})")]
    UnsupportedDimension(usize, usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("time {requested} exceeds the available horizon {available}")]
    HorizonExceeded { requested: f64, available: f64 },

    #[error("exact method capacity exceeded: {sites} sites > limit {limit} (use the Monte Carlo method)")]
    Capacity { sites: usize, limit: usize },

    #[error("the free Green's function diverges for d = {0}")]
    Divergent(usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
