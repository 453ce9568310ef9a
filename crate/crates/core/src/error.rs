use thiserror::Error;

/// Errors raised by geometric constructions and checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector is not future timelike")]
    NotFutureTimelike,
    #[error("zero vector has no causal direction")]
    ZeroVector,
    #[error("matrix does not preserve the Lorentz form (defect {defect:.3e})")]
    NotLorentzian { defect: f64 },
    #[error("matrix swaps the future and past cones")]
    NotOrthochronous,
    #[error("point {0} is not incident to every hyperplane")]
    NotIncident(usize),
    #[error("{0}")]
    InvalidInput(String),
    #[error("element count exceeded the cap of {0}")]
    ElementCap(usize),
    #[error("half-space count {count} exceeds the cap of {cap}")]
    HalfSpaceCap { count: usize, cap: usize },
    #[error("element fixes the point, so its bisector is undefined")]
    FixedPoint,
    #[error("complex violates axiom {axiom}: {detail}")]
    AxiomViolation { axiom: u8, detail: String },
    #[error("element does not preserve the complex: {0}")]
    NotPreserved(String),
    #[error("not converged after word length {0}")]
    NotConverged(usize),
}

pub type Result<T> = std::result::Result<T, GeomError>;
