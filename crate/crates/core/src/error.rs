use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("self-loop pair on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("judgment value {0} outside the 0..=4 scale")]
    JudgmentOutOfRange(u8),
    #[error("invalid judgment: {0}")]
    InvalidJudgment(String),
    #[error("invalid node: {0}")]
    InvalidNode(String),
    #[error("node `{0}` is missing from the clustering")]
    MissingAssignment(String),
    #[error("graph has no weighted edges")]
    NoWeightedEdges,
    #[error("maximum possible loss is zero")]
    ZeroMaximumLoss,
    #[error("graph is empty")]
    EmptyGraph,
    #[error("brute-force clustering supports at most {limit} nodes, got {got}")]
    NodeLimitExceeded { limit: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {need} nodes, got {got}")]
    TooFewNodes { need: usize, got: usize },
    #[error("node sets of the two clusterings differ")]
    NodeSetMismatch,
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("distributions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("word sets of prediction and gold differ")]
    WordSetMismatch,
    #[error("wrong subtask: expected {expected}, got {got}")]
    WrongSubtask { expected: u8, got: u8 },
    #[error("need at least {need} words, got {got}")]
    TooFewWords { need: usize, got: usize },
    #[error("correlation undefined: {0} vector is constant")]
    ConstantVector(&'static str),
    #[error("metric undefined: {0}")]
    Undefined(&'static str),
    #[error("zero vector for `{0}` after column intersection")]
    ZeroVector(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("target sentences ({targets}) exceed the sentence quota ({quota})")]
    QuotaExceeded { targets: usize, quota: usize },
    #[error("no control candidate found for p <= {0}")]
    NoControlCandidate(f64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
