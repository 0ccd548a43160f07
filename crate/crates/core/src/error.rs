use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{what} index {index} out of range (bound {bound})")]
    Index {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("invalid probability distribution: {0}")]
    Distribution(String),

    /// The op has only a first-order vector-Jacobian product.
    #[error("operation `{0}` cannot be differentiated twice")]
    Capability(&'static str),

    #[error("batch norm in train mode needs at least 2 rows, got {0}")]
    DegenerateBatch(usize),

    #[error("no real embeddings for classes {0:?}")]
    Coverage(Vec<usize>),

    #[error("data error: {0}")]
    Data(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: unknown label {label:?}")]
    Label { line: usize, label: String },

    #[error("class {class} has {available} examples, {required} required")]
    Capacity {
        class: String,
        available: usize,
        required: usize,
    },

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("unlabeled pool shares {0} sentence(s) with the training set")]
    Contamination(usize),

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("training failure: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::Dimension {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Spec(_) => 1,
            Error::Data(_)
            | Error::Parse { .. }
            | Error::Label { .. }
            | Error::Capacity { .. }
            | Error::Contamination(_)
            | Error::Coverage(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            _ => 3,
        }
    }
}
