use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(String, String),
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("element is not a unit (valuation {0})")]
    NonUnit(u32),
    #[error("matrix is not invertible (determinant valuation {0})")]
    NonInvertible(u32),
    #[error("matrix is not in the congruence ball of level {level} (distance valuation {actual})")]
    NotInBall { level: u32, actual: u32 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("defect valuation {actual} is below the required level {required}")]
    DefectTooLarge { required: u32, actual: u32 },
    #[error("{what} exceeds cap {cap}")]
    CapExceeded { what: String, cap: u64 },
    #[error("hypothesis k > 2l violated: k = {k}, l = {l}")]
    HypothesisViolated { k: u32, l: u32 },
    #[error("linear system unsolvable, obstruction valuation {0}")]
    Unsolvable(u32),
    #[error("equal characteristic repair with p-part {0} > 0 is not supported")]
    CharPUnsupported(u32),
    #[error("Brawley-Gamble reduction failed: {0}")]
    ReductionFailed(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("p = 2 is not supported in mixed characteristic for this bound")]
    P2Unsupported,
    #[error("matrix is not monomial: {0}")]
    NotMonomial(String),
    #[error("criterion not met: {0}")]
    CriterionNotMet(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("parse error: {0}")]
    Parse(String),
}
