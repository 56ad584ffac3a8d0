use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building or validating mixture datasets and splits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixtureError {
    #[error("expected {expected} constituents, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("constituent `{0}` appears more than once in an unordered mixture")]
    DuplicateConstituent(String),
    #[error("unordered mixtures must draw every constituent from a single collection")]
    MixedCollections,
    #[error("constituent `{id}` is not a member of collection {collection}")]
    UnknownConstituent { collection: usize, id: String },
    #[error("mixture {0} is already present")]
    DuplicateMixture(String),
    #[error("dataset mixes binary and continuous labels")]
    MixedLabelKinds,
    #[error("collection `{name}` has {members} members, fewer than the arity {arity}")]
    InsufficientMembers {
        name: String,
        members: usize,
        arity: usize,
    },
    #[error("collection `{name}` lists `{id}` twice")]
    DuplicateMember { name: String, id: String },
    #[error("constituent ids must be non-empty")]
    EmptyId,
    #[error("invalid dataset layout: {0}")]
    InvalidLayout(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("cannot build {folds} folds from {items} items")]
    TooManyFolds { folds: usize, items: usize },
    #[error("fold count must be at least 2, got {0}")]
    TooFewFolds(usize),
    #[error("partition does not match the dataset collections: {0}")]
    PartitionMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescriptorError {
    #[error("no descriptor for constituent `{0}`")]
    MissingDescriptor(String),
    #[error("descriptor for `{id}` has length {found}, expected {expected}")]
    LengthMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("descriptor length must be at least 1")]
    EmptyDescriptor,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{labels} labels for {rows} feature rows")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("invalid learner parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported model format: {0}")]
    ModelFormat(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("validation labels contain a single class")]
    SingleClassValidation,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyList,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// Top-level error for ingestion, configuration and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: row {line} has {found} fields, expected {expected}")]
    RaggedRows {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: {source}")]
    Ingest {
        path: PathBuf,
        line: usize,
        source: MixtureError,
    },
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed report: {0}")]
    Report(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, also used to pick the process exit code.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Parse { .. } | Error::RaggedRows { .. } | Error::Ingest { .. } => "ingest",
            Error::Io { .. } | Error::Report(_) => "io",
            _ => "runtime",
        }
    }

    /// 1 for configuration and ingestion problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "ingest" => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
