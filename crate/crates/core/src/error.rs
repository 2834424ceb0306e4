use thiserror::Error;

/// Errors produced by the geometry pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("bilinear form is degenerate")]
    DegenerateForm,

    #[error("matrix is singular")]
    Singular,

    #[error("root iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("vector is not on the Darboux quadric (residual {residual:e})")]
    NotOnQuadric { residual: f64 },

    #[error("zero vector has no projective class")]
    ZeroVector,

    #[error("Jacobian is rank deficient")]
    RankDeficient,

    #[error("not lightlike here: induced signature ({plus}, {minus}, {zero})")]
    NotLightlike {
        plus: usize,
        minus: usize,
        zero: usize,
    },

    #[error("hypersurface is degenerate here (induced form is not definite or Lorentzian)")]
    NotNondegenerate,

    #[error("generator direction is invalid: {0}")]
    BadGenerator(&'static str),

    #[error("frame vectors are linearly dependent")]
    DependentFrame,

    #[error("screen directions are linearly dependent along the parametrization")]
    DegenerateScreen,

    #[error("affinor is not symmetric (defect {defect:e})")]
    AsymmetricAffinor { defect: f64 },

    #[error("complex root {re} + {im}i where a real root was required")]
    ComplexRoot { re: f64, im: f64 },

    #[error("family is not a congruence here (basis forms are dependent)")]
    NotCongruence,

    #[error("distribution is not integrable (defect {defect:e})")]
    NonIntegrable { defect: f64 },

    #[error("parameter point {0:?} is outside the domain")]
    OutOfDomain(Vec<f64>),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
