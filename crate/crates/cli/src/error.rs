use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] preqmc::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for invalid input, 3 when φ₀ is not positive, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use preqmc::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Core(E::MonotonicityViolated { .. }) => 3,
            Self::Core(
                E::InvalidParameter(_)
                | E::Parse(_)
                | E::LengthMismatch { .. }
                | E::UnsupportedDimension(_)
                | E::WeightFunctionTooWeak { .. }
                | E::OutsideDomain(_)
                | E::PdfWithoutPreintegration,
            ) => 2,
            _ => 1,
        }
    }
}
