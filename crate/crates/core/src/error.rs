use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dag| = {residual:e})")]
    NonHermitianInput { residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("eigenvector of the dominant eigenvalue is undetermined (|r| sin(theta) = 0 and eps+ = sin^2(theta/2))")]
    DegenerateEigenvector,

    #[error("decoherence factor must equal 1 at t = 0, got {value}")]
    InvalidInitialValue { value: String },

    #[error("phase unwrapping failed: jump of {jump:.3} rad persists at {samples} samples")]
    UnwrapFailure { jump: f64, samples: usize },

    #[error("eigenvalue branches of rho cross at sample {index} (gap {gap:e})")]
    EigenbranchCrossing { index: usize, gap: f64 },

    #[error("dense oracle limited to {max} spins, got {n_spins}")]
    DimensionTooLarge { n_spins: usize, max: usize },

    #[error("elliptic integral argument m = {m} outside the domain")]
    DomainError { m: f64 },

    #[error("second-order coefficient R2 = {value:e} at sample {index} is negative; stencil step is badly conditioned")]
    StencilConditioning { value: f64, index: usize },

    #[error("adaptive quadrature failed to reach tolerance {tolerance:e} (estimate {estimate:e})")]
    QuadratureNonconvergence { tolerance: f64, estimate: f64 },
}
