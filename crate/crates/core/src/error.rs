use thiserror::Error;

/// Errors raised by the propositional logic engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("empty formula")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable `{0}` is not part of the world space")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}` in world space")]
    DuplicateVariable(String),
    #[error("{count} variables exceeds the cap of {cap}")]
    TooManyVariables { count: usize, cap: usize },
}

/// Transport and protocol failures talking to a remote model endpoint.
#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("http transport: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Protocol(String),
    #[error("model output is not a JSON array of strings: {raw}")]
    MalformedOutput { raw: String },
    #[error("missing API key: set {0}")]
    MissingKey(&'static str),
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("scripted backend has no entry for {0:?}")]
    MissingScript(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Error)]
pub enum AtomizeError {
    #[error("cannot atomize empty text")]
    EmptyInput,
    #[error("cap must be at least 1")]
    InvalidCap,
    #[error("backend failed at iteration {iteration} after {backend_calls} calls: {source}")]
    Backend {
        iteration: usize,
        backend_calls: usize,
        /// Atoms proved before the failure.
        partial: Vec<String>,
        #[source]
        source: BackendError,
    },
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("empty text")]
    EmptyText,
    #[error("closed extraction requires a nonempty label vocabulary")]
    EmptyLabels,
    #[error("configuration {0} requires an atomization result")]
    MissingAtoms(&'static str),
    #[error("Comb is only defined for closed extraction")]
    CombRequiresClosed,
    #[error("closed extraction requires an entity pair")]
    MissingEntities,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("gold set is empty")]
    EmptyGold,
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("threshold {0} outside [0, 1]")]
    Threshold(String),
    #[error("paired score vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("bootstrap needs at least {min} iterations, got {got}")]
    TooFewIterations { min: usize, got: usize },
    #[error("embedding backend: {0}")]
    Embedding(String),
}

/// Errors reading or writing the JSONL record formats.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}
