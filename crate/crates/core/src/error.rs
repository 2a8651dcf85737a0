use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("direction (theta={theta}, phi={phi}) is outside the pattern domain")]
    OutOfDomain { theta: f64, phi: f64 },

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("ill-conditioned quantity: {0}")]
    Conditioning(String),

    #[error("impedance matrix is singular (condition number {condition:.3e})")]
    SingularMatrix { condition: f64 },

    #[error("coupling matrix is singular (condition number {condition:.3e})")]
    SingularCoupling { condition: f64 },

    #[error("quadrature not converged: max change {change:.3e} under refinement exceeds {tolerance:.3e}")]
    Accuracy { change: f64, tolerance: f64 },

    #[error("impedance integral has imaginary residue {residue:.3e}; pattern power is not symmetric about the array axis")]
    NonRealImpedance { residue: f64 },

    #[error("invalid spherical wave index (s={s}, m={m}, n={n})")]
    Index { s: u8, m: i32, n: u32 },

    #[error("insufficient sampling: {rows} equations for {unknowns} unknowns")]
    InsufficientSampling { rows: usize, unknowns: usize },

    #[error("rank-deficient system: effective rank {rank} of {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("degenerate geometry: isolated-element coefficient matrix has rank {rank} of {required}")]
    DegenerateGeometry { rank: usize, required: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by the numbers rather than by the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Conditioning(_)
                | Error::SingularMatrix { .. }
                | Error::SingularCoupling { .. }
                | Error::Accuracy { .. }
                | Error::NonRealImpedance { .. }
                | Error::RankDeficient { .. }
                | Error::DegenerateGeometry { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
