use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("line {line}: invalid UTF-8")]
    Encoding { line: usize },

    #[error("{kind} line {line}: {message}")]
    Format {
        kind: &'static str,
        line: usize,
        message: String,
    },

    #[error("unknown {kind} `{value}`")]
    UnknownLabel { kind: &'static str, value: String },

    #[error("document `{document}`, mention `{mention}`: {message}")]
    Offset {
        document: String,
        mention: String,
        message: String,
    },

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),

    #[error("document `{document}`: overlapping mentions of the same type: {}", ids.join(", "))]
    OverlappingMentions { document: String, ids: Vec<String> },

    #[error("sentence {sentence}: ill-formed tag sequence at token {token}")]
    IllFormedTags { sentence: usize, token: usize },

    #[error("discontinuous span on line {line} is not supported")]
    DiscontinuousSpan { line: usize },

    #[error("corpus `{corpus}`: source type `{source_type}` has no entry in the type map")]
    UnmappedType { corpus: String, source_type: String },

    #[error("ontology cycle through `{0}`")]
    OntologyCycle(String),

    #[error("term `{term}` has is_a parent `{parent}` that is not defined")]
    DanglingParent { term: String, parent: String },

    #[error("unknown term `{0}`")]
    UnknownTerm(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn format(kind: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }
}
