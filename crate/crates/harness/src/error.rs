use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] filament_core::Error),

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("manifest input {path} changed: expected sha256 {expected}, found {found}")]
    DigestMismatch {
        path: String,
        expected: String,
        found: String,
    },

    #[error("study failed: {0}")]
    Study(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// 2 for bad input, 3 for failures during computation.
    pub fn exit_code(&self) -> i32 {
        use filament_core::Error as C;
        match self {
            Error::Config { .. } | Error::DigestMismatch { .. } => 2,
            Error::Core(
                C::InvalidInput(_)
                | C::EvenPointCount(_)
                | C::ModeCap { .. }
                | C::ModeOutOfRange { .. }
                | C::Format(_),
            ) => 2,
            _ => 3,
        }
    }
}
