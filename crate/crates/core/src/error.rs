use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {dim} exceeds the supported cap of {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("non-finite entry in matrix")]
    NonFinite,

    #[error("function undefined at retained eigenvalue {eigenvalue:.6e}")]
    FunctionDomain { eigenvalue: f64 },

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("not a valid channel: {0}")]
    InvalidChannel(String),

    #[error("channel is not idempotent: residual {residual:.3e}")]
    NotIdempotent { residual: f64 },

    #[error("image of the identity is rank-deficient (rank {rank} < {dim}); a full-rank unit image is required")]
    RankDeficientUnit { rank: usize, dim: usize },

    #[error("algebra structure check failed: {0}")]
    AlgebraStructure(String),

    #[error("inclusion of fixed-point algebras fails: im(Q*) is not contained in im(P*), so the divergence is infinite (use the witness routine)")]
    InclusionFails,

    #[error("peripheral spectrum is defective at eigenvalue {re:.6}{im:+.6}i")]
    Defective { re: f64, im: f64 },

    #[error("channel is not GNS-symmetric with respect to the reference state: residual {residual:.3e}")]
    NotGnsSymmetric { residual: f64 },

    #[error("state is not invariant under the channel: residual {residual:.3e}")]
    NotInvariant { residual: f64 },

    #[error("odd iterate power {0} rejected: peripheral eigenvalue -1 makes odd powers oscillate (period-2 cycle); use an even power")]
    OddPower(u32),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
