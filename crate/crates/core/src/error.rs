use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single row-level problem found while validating an input file.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Issue {
    /// Where the problem is, e.g. `annotation 17` or `image 3`.
    pub location: String,
    pub message: String,
}

impl Issue {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown inaccessibility class `{0}`")]
    UnknownClass(String),

    #[error("unknown inaccessibility class id {0}")]
    UnknownClassId(u32),

    #[error("unknown AccessMeta category `{0}`")]
    UnknownCategory(String),

    #[error("unknown AccessMeta label `{0}`")]
    UnknownLabel(String),

    #[error("unknown object class `{0}`")]
    UnknownObjectClass(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("validation failed with {} issue(s): {}", .0.len(), summarize(.0))]
    Validation(Vec<Issue>),

    #[error("dataset has no images")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("detector adapter unavailable: {0}")]
    AdapterUnavailable(String),

    #[error("no precomputed detections for image {0}")]
    MissingPrecomputed(String),

    #[error("degenerate box {0:?}: width and height must be positive")]
    DegenerateBox([f64; 4]),

    #[error("no ground-truth instances for this class")]
    NoGroundTruth,

    #[error("inconsistent evaluation input: {0}")]
    InconsistentInput(String),

    #[error("ground truth contains no evaluable classes")]
    NoEvaluableClasses,

    #[error("duplicate design id `{0}`")]
    DuplicateDesignId(String),

    #[error("class `{0}` has no object mapping")]
    UnmappedClass(String),

    #[error("no ground truth for design `{0}`")]
    MissingGroundTruth(String),

    #[error("no accepted submissions to score")]
    NoValidSubmissions,
}

fn summarize(issues: &[Issue]) -> String {
    const SHOWN: usize = 5;
    let mut s = issues
        .iter()
        .take(SHOWN)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    if issues.len() > SHOWN {
        s.push_str(&format!("; ... {} more", issues.len() - SHOWN));
    }
    s
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: impl Into<String>, err: impl fmt::Display) -> Self {
        Error::Parse {
            what: what.into(),
            message: err.to_string(),
        }
    }

    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownClass(_) | Error::UnknownClassId(_) => "UnknownClass",
            Error::UnknownCategory(_) => "UnknownCategory",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::UnknownObjectClass(_) => "UnknownObjectClass",
            Error::Io { .. } => "Io",
            Error::Parse { .. } => "ParseError",
            Error::Validation(_) => "ValidationError",
            Error::EmptyDataset => "EmptyDataset",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::AdapterUnavailable(_) => "AdapterUnavailable",
            Error::MissingPrecomputed(_) => "MissingPrecomputed",
            Error::DegenerateBox(_) => "DegenerateBox",
            Error::NoGroundTruth => "NoGroundTruth",
            Error::InconsistentInput(_) => "InconsistentInput",
            Error::NoEvaluableClasses => "NoEvaluableClasses",
            Error::DuplicateDesignId(_) => "DuplicateDesignId",
            Error::UnmappedClass(_) => "UnmappedClass",
            Error::MissingGroundTruth(_) => "MissingGroundTruth",
            Error::NoValidSubmissions => "NoValidSubmissions",
        }
    }
}
