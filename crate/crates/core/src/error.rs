use thiserror::Error;

use crate::relation::Pair;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for ground set of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("ground set sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("cardinal relation references pair {0:?} which is not in the ordinal relation")]
    ExchangeOutsideOrdinal(Pair),

    #[error("duplicate consequence id `{0}`")]
    DuplicateConsequence(String),

    #[error("preference systems are defined over different consequence sets")]
    IncomparableSystems,

    #[error("consequence {index} is not {role} with respect to the ordinal relation")]
    NotExtreme { index: usize, role: &'static str },

    #[error("no top and bottom consequence available for normalization")]
    MissingNormalization,

    #[error("preference system is not {delta}-consistent (optimal slack {epsilon_star})")]
    NotDeltaConsistent { delta: f64, epsilon_star: f64 },

    #[error("preference system is inconsistent")]
    Inconsistent,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("elapsed time must be positive for a strict verdict, got {0}")]
    NonPositiveTime(f64),

    #[error("time {time} is not below the indifference sentinel {c_inf}")]
    TimeExceedsSentinel { time: f64, c_inf: f64 },

    #[error("pair {0:?} has already been decided")]
    PairAlreadyDecided(Pair),

    #[error("pair {0:?} is not pending in the current round")]
    PairNotActive(Pair),

    #[error("label {label} is outside 1..={r}")]
    LabelOutOfRange { label: u32, r: u32 },

    #[error("round is not complete: {missing} pairs still unlabelled")]
    RoundIncomplete { missing: usize },

    #[error("session has not terminated")]
    NotTerminated,

    #[error("session has already terminated")]
    AlreadyTerminated,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("credal set has no extreme points")]
    EmptyCredalSet,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("relation is not a partial order: {0}")]
    NotPartialOrder(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("no undecided pairs left")]
    NoUndecidedPairs,

    #[error("expected a {expected} answer, got a {got} answer")]
    KindMismatch { expected: &'static str, got: &'static str },

    #[error("session is {0} and accepts no further questions")]
    SessionClosed(&'static str),
}
