use thiserror::Error;

/// Errors raised by lattice construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("lattice dimension must be positive")]
    ZeroDimension,
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("generator matrix is singular or ill-conditioned")]
    Singular,
    #[error("generator matrix has {got} entries, expected {expected}")]
    MalformedGenerator { expected: usize, got: usize },
    #[error("closest-point search budget of {budget} nodes exceeded")]
    SearchBudgetExceeded { budget: usize },
    #[error("target second moment must be positive and finite, got {0}")]
    InvalidSecondMoment(f64),
    #[error("nesting factor must be at least 2, got {0}")]
    NestingFactorTooSmall(u64),
    #[error("codebook of {k}^{n} points does not fit in a 128-bit index")]
    CodebookTooLarge { k: u64, n: usize },
    #[error("point is not a codeword of the nested pair")]
    NotInCodebook,
    #[error("index {index} outside codebook of size {size}")]
    IndexOutOfRange { index: u128, size: u128 },
    #[error("{kind} lattice requires dimension {required}, got {got}")]
    UnsupportedDimension {
        kind: &'static str,
        required: usize,
        got: usize,
    },
    #[error("generator file: {0}")]
    Parse(String),
}

/// Errors raised by the Wyner-Ziv codec and the relay simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("parameter {name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("distortion D = {d} outside (0, {bound}] where {bound} = N1 + P*N2/(P+N2)")]
    DistortionOutOfRange { d: f64, bound: f64 },
    #[error("coarse margin gamma must be >= 1, got {0}")]
    InvalidMargin(f64),
    #[error("nested pair mis-scaled: {0}")]
    MisScaledPair(String),
    #[error("compression rate log2(kq) exceeds relay rate log2(k2): kq = {kq} > k2 = {k2} (requires R_hat <= R')")]
    CompressionRateTooHigh { kq: u64, k2: u64 },
    #[error("compression index {index} does not fit the relay codebook of size {size} (requires R_hat <= R')")]
    RelayIndexOutOfRange { index: u128, size: u128 },
    #[error("message index {w} outside codebook of size {size}")]
    MessageOutOfRange { w: u128, size: u128 },
    #[error("block count must be at least 2, got {0}")]
    TooFewBlocks(usize),
    #[error("trial count must be at least 1")]
    NoTrials,
}

/// Errors raised by the closed-form rate evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("parameter {name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("parameter {name} = 0 makes the expression unbounded")]
    Degenerate { name: &'static str },
}
