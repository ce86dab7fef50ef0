use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("capacity guard exceeded: {0}")]
    Capacity(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("not a section: {0}")]
    Section(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("instance validity: {0}")]
    Validity(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
