use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {field}: {detail}")]
    Validation { field: String, detail: String },
    #[error("notch frequency is zero; DRAG is undefined at zero detuning")]
    UndefinedNotch,
    #[error("waveform grids differ: {0}")]
    GridMismatch(String),
    #[error("insufficient numerical resolution: {0}")]
    Resolution(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("outside model domain: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            detail: detail.into(),
        }
    }

    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::UndefinedNotch => "undefined_notch",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::Resolution(_) => "resolution",
            Error::Fit(_) => "fit",
            Error::Domain(_) => "domain",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
