use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Invariant,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("empty corpus")]
    EmptyCorpus,
    #[error("document {index} has zero tokens")]
    EmptyDocument { index: usize },
    #[error("duplicate document id {id:?} at document {index}")]
    DuplicateDocId { index: usize, id: String },
    #[error("window size must be at least 2, got {0}")]
    WindowTooSmall(usize),

    #[error("topic {topic}: word {word:?} appears more than once")]
    DuplicateWord { topic: usize, word: String },
    #[error("a topic model needs at least 2 topics, got {0}")]
    TooFewTopics(usize),
    #[error("topic {0} is empty")]
    EmptyTopic(usize),
    #[error("topic {topic}: requested {requested} words but the ranking has {available}")]
    RankOutOfRange {
        topic: usize,
        requested: usize,
        available: usize,
    },
    #[error("topic index {index} out of range for a model with {k} topics")]
    TopicOutOfRange { index: usize, k: usize },
    #[error("model {model_id}: topic {topic} ranking has {len} words, below the floor of {floor}")]
    RankingTooShort {
        model_id: String,
        topic: usize,
        len: usize,
        floor: usize,
    },

    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: component {value:?} is not a finite number")]
    NonNumeric { line: usize, value: String },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("no embedding found for {0}")]
    ZeroCoverage(String),

    #[error("word id {0} never occurs in any window")]
    ZeroOccurrence(u32),
    #[error("fewer than 2 usable words")]
    TooFewWords,
    #[error("topic has no context vector with nonzero norm")]
    DegenerateTopic,
    #[error("every topic of model {0} was skipped")]
    AllTopicsSkipped(String),

    #[error("model {model_id}, topic {topic}: no intruder candidate: {reason}")]
    NoCandidate {
        model_id: String,
        topic: usize,
        reason: String,
    },
    #[error("model {model_id}: {message}")]
    InsufficientPairs { model_id: String, message: String },
    #[error("cannot split {tasks} tasks into {tracks} tracks")]
    TooFewTasks { tasks: usize, tracks: usize },

    #[error("annotation record {index}: unknown task id {task_id:?}")]
    UnknownTask { index: usize, task_id: String },
    #[error("annotation record {index}: {message}")]
    InvalidResponse { index: usize, message: String },
    #[error(
        "annotation record {index}: duplicate response from {annotator_id:?} for task {task_id:?}"
    )]
    DuplicateAnnotation {
        index: usize,
        task_id: String,
        annotator_id: String,
    },
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("Fleiss' kappa is undefined: all responses fall in one category")]
    UndefinedKappa,
    #[error("{0}")]
    NoData(String),

    #[error("unknown {kind} {name:?}; available: {available}")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Invariant(_) => ErrorKind::Invariant,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
