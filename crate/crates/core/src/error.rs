use thiserror::Error;

use crate::labels::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("strand count mismatch: B_{left} vs B_{right}")]
    StrandMismatch { left: usize, right: usize },

    #[error("generator index {index} out of range for B_{strands}")]
    GeneratorOutOfRange { index: i64, strands: usize },

    #[error("strand index {index} out of range 1..={strands}")]
    StrandOutOfRange { index: usize, strands: usize },

    #[error("alphabet mismatch: word over {found} generators, expected {expected}")]
    AlphabetMismatch { found: usize, expected: usize },

    #[error("cannot parse braid word: {0}")]
    Parse(String),

    #[error("x_{index}^b = {word} is not a conjugate of a generator")]
    NotConjugateForm { index: usize, word: String },

    #[error("labels are not allowable: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidLabels(Vec<Violation>),

    #[error("{labels} labels given for a closure with {components} components")]
    ComponentMismatch { labels: usize, components: usize },

    #[error("epsilon has {found} entries, expected {expected}")]
    EpsilonLength { found: usize, expected: usize },

    #[error("epsilon exponents are not compatible with the labels")]
    IncompatibleEpsilon,

    #[error("recalibration does not close up around the cycle starting at strand {0}")]
    InconsistentRecalibration(usize),

    #[error("matrix is singular (smallest singular value {0:e})")]
    Singular(f64),

    #[error("tuple is reducible: commutant has dimension {0}")]
    Reducible(usize),

    #[error("product map derivative has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("gauge directions are not fixed by the linearization (defect {0:e})")]
    EquivarianceViolation(f64),

    #[error("lift search over {0} candidates exceeds the enumeration guard")]
    GuardExceeded(u128),

    #[error("tuple has {found} coordinates, expected {expected}")]
    TupleLength { found: usize, expected: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
