use geocount::density::DensityError;
use geocount::dynlab::DynError;
use geocount::fuchsian::FuchsianError;
use geocount::jacobi::JacobiError;
use geocount::mme::MmeError;
use serde_json::json;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("acceptance failed for criteria {0:?}")]
    Acceptance(Vec<u8>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Acceptance(_) => 1,
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "configuration",
            Self::Numerical(_) => "numerical",
            Self::Io(_) => "io",
            Self::Acceptance(_) => "acceptance",
        }
    }

    /// One-line JSON written to stderr.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

impl From<FuchsianError> for CliError {
    fn from(e: FuchsianError) -> Self {
        match e {
            FuchsianError::BadSurface(_) | FuchsianError::RadiusTooLarge { .. } | FuchsianError::OutOfRange { .. } => {
                Self::Config(e.to_string())
            }
            FuchsianError::Cache(_) => Self::Io(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::Fuchsian(f) => f.into(),
            DensityError::Io(m) => Self::Io(m),
            DensityError::Degenerate(_) => Self::Numerical(e.to_string()),
        }
    }
}

impl From<MmeError> for CliError {
    fn from(e: MmeError) -> Self {
        match e {
            MmeError::Density(d) => d.into(),
            MmeError::Fuchsian(f) => f.into(),
            MmeError::InvalidBox(_) | MmeError::InvalidConfiguration(_) => Self::Config(e.to_string()),
        }
    }
}

impl From<DynError> for CliError {
    fn from(e: DynError) -> Self {
        match e {
            DynError::Reduction(f) => f.into(),
            DynError::OutOfRange { .. } => Self::Config(e.to_string()),
            DynError::Io(m) => Self::Io(m),
            DynError::Domain(_) => Self::Numerical(e.to_string()),
        }
    }
}

impl From<JacobiError> for CliError {
    fn from(e: JacobiError) -> Self {
        match e {
            JacobiError::InvalidStep(_) | JacobiError::UnknownPreset(_) => Self::Config(e.to_string()),
            JacobiError::Io(m) => Self::Io(m),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}
