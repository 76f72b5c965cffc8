use serde_json::json;
use thiserror::Error;

use metastable_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 for invalid input, 3 when every replica was censored, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                CoreError::AllCensored { .. } => 3,
                CoreError::InvalidArgument(_)
                | CoreError::DomainError(_)
                | CoreError::ShapeMismatch(_)
                | CoreError::OutOfRange(_)
                | CoreError::OverlappingSets
                | CoreError::DegeneratePath
                | CoreError::InsufficientData(_) => 2,
                _ => 1,
            },
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => match e {
                CoreError::NoConvergence { .. } => "no_convergence",
                CoreError::DegenerateHessian { .. } => "degenerate_hessian",
                CoreError::WrongKind(_) => "wrong_kind",
                CoreError::ShapeMismatch(_) => "shape_mismatch",
                CoreError::NonFinite { .. } => "non_finite",
                CoreError::AllCensored { .. } => "all_censored",
                CoreError::DomainError(_) => "domain_error",
                CoreError::SingularSystem { .. } => "singular_system",
                CoreError::OverlappingSets => "overlapping_sets",
                CoreError::DegeneratePath => "degenerate_path",
                CoreError::InsufficientData(_) => "insufficient_data",
                CoreError::OutOfRange(_) => "out_of_range",
                CoreError::InvalidArgument(_) => "invalid_argument",
                CoreError::Io(_) => "io",
            },
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}
