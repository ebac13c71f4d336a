use thiserror::Error;

/// Errors raised by the simulator, compiler and flow stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid gamma cycle: {0}")]
    InvalidGamma(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("length mismatch: expected {expected}, got {actual} ({context})")]
    LengthMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("{0}")]
    WidthMismatch(WidthDiagnostic),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("{0}")]
    Task(String),

    #[error("{stage}: {message}")]
    Stage { stage: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Feedback produced when a new layer does not fit onto the end of a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidthDiagnostic {
    pub layer_id: String,
    pub expected: usize,
    pub actual: usize,
    pub suggestions: Vec<String>,
}

impl std::fmt::Display for WidthDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "layer {} expects input width {} but the previous layer produces {}",
            self.layer_id, self.actual, self.expected
        )?;
        if !self.suggestions.is_empty() {
            write!(f, "; try: {}", self.suggestions.join("; "))?;
        }
        Ok(())
    }
}
