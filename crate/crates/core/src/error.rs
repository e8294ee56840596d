use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("non-finite evaluation: {0}")]
    NonFinite(String),

    #[error("basis self-test failed: {0}")]
    BasisSelfTest(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("Fenchel solve did not converge at |y| = {norm_y:e} (residual {residual:e})")]
    FenchelNoConvergence { norm_y: f64, residual: f64 },

    /// φ′ stays positive up to the bracket cap: the functional does not
    /// become negative along the ray.
    #[error("no sign change of the fiber derivative up to s = {s_cap:e}")]
    NoSignChange { s_cap: f64 },

    /// The ratio φ′(s)/s increased between two samples by more than the
    /// slack; witnesses are the two abscissae and the increase.
    #[error("non-monotone fiber ratio between s = {s_a:e} and s = {s_b:e} (increase {increase:e})")]
    NonMonotoneRatio { s_a: f64, s_b: f64, increase: f64 },

    #[error("fiber maximum is a plateau; the envelope has no classical derivative")]
    Plateau,

    #[error("direction is not in the negative cone (a(e,e) = {0:e})")]
    NotNegativeCone(f64),

    #[error("every restart produced an unbounded fiber")]
    AllFibersUnbounded,

    #[error("orbit recovery rejected: {0}")]
    RecoveryRejected(String),

    #[error("singular linear system")]
    Singular,
}
