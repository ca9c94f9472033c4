use std::fmt;

use thiserror::Error;

/// Which variable of a `(Y, X, Z)` triple a numerical failure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Response,
    Feature,
    Conditional,
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Response => f.write_str("response"),
            Variable::Feature => f.write_str("feature"),
            Variable::Conditional => f.write_str("conditional"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("sample count overflow while merging moments")]
    CountOverflow,

    #[error("degenerate variance in {0}")]
    DegenerateVariance(Variable),

    #[error("feature is collinear with the conditional variable")]
    CollinearWithCondition,

    #[error("too many shards: {shards} shards need at least {needed} rows, got {rows}")]
    TooManyShards { shards: usize, needed: usize, rows: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("summaries mix screening methods or feature counts")]
    MethodMismatch,

    #[error("invalid selection rule: {0}")]
    InvalidRule(String),

    #[error("column {0} is constant")]
    ConstantColumn(usize),

    #[error("insufficient rows for knockoffs: {rows} rows for {cols} columns")]
    InsufficientRows { rows: usize, cols: usize },

    #[error("Gram matrix is numerically singular")]
    NearSingularGram,

    #[error("second split of {n2} rows must exceed 2d = {}", 2 * .d)]
    SplitTooSmall { n2: usize, d: usize },

    #[error("model {model} requires at least {needed} features, got {got}")]
    ModelRequiresMoreFeatures { model: char, needed: usize, got: usize },

    #[error("truth set must leave both classes nonempty")]
    DegenerateTruth,

    #[error("column not found: {0}")]
    ColumnNotFound(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed shard summary record: {0}")]
    WireFormat(String),

    #[error("shard {shard}: {source}")]
    InShard {
        shard: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("shard {shard}, feature {feature}: {source}")]
    InFeature {
        shard: usize,
        feature: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {rep}: {source}")]
    InReplication {
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn in_shard(self, shard: usize) -> Self {
        Error::InShard {
            shard,
            source: Box::new(self),
        }
    }

    pub fn in_feature(self, shard: usize, feature: usize) -> Self {
        Error::InFeature {
            shard,
            feature,
            source: Box::new(self),
        }
    }

    pub fn in_replication(self, rep: usize) -> Self {
        Error::InReplication {
            rep,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
