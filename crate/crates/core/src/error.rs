use thiserror::Error;

/// Everything that can go wrong inside the solver crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("wavenumber {k} outside the resolved range |k| <= {max}")]
    WavenumberOutOfRange { k: i64, max: i64 },

    #[error("eigendecomposition at wavenumber {k} failed its self-check (residual {residual:e})")]
    Decomposition { k: i64, residual: f64 },

    #[error("kernel argument {0} outside [0, 1]")]
    KernelDomain(f64),

    #[error("numerical blow-up detected at t = {time}")]
    Instability { time: f64 },

    #[error("fine solve on slab {slab} failed: {source}")]
    SlabFailure {
        slab: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("triad table is empty")]
    EmptyTriads,

    #[error("k_max = {k_max} exceeds the dealiased band |k| <= {limit}")]
    BandExceeded { k_max: i64, limit: i64 },

    #[error("shell edges must be positive and strictly ascending")]
    InvalidShellEdges,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
