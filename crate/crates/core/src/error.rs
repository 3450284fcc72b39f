use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("alphabet size mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("symbol {symbol} out of range for alphabet of size {m}")]
    SymbolOutOfRange { symbol: usize, m: usize },
    #[error("point outside domain: {0}")]
    OutsideDomain(String),
    #[error("eigen solver did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("certification failed: {0}")]
    Uncertified(String),
    #[error("unknown example: {0}")]
    UnknownExample(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case tag for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSystem(_) => "invalid_system",
            Error::InvalidPotential(_) => "invalid_potential",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::AlphabetMismatch(..) => "alphabet_mismatch",
            Error::SymbolOutOfRange { .. } => "symbol_out_of_range",
            Error::OutsideDomain(_) => "outside_domain",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Uncertified(_) => "uncertified",
            Error::UnknownExample(_) => "unknown_example",
        }
    }
}
