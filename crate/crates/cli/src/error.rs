use std::fmt;

use kernbayes::Error as CoreError;

/// Failure category; each maps to a distinct process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Data,
    SelectorFailed,
    Internal,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 2,
            Category::Data => 3,
            Category::SelectorFailed => 4,
            Category::Internal => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Data => "data",
            Category::SelectorFailed => "selector-failed",
            Category::Internal => "internal",
        }
    }
}

/// Structured error: category, optional location (file, line, column or
/// config field) and message.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub category: Category,
    pub location: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self { category, location: None, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Category::Usage, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(Category::Data, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(Category::Internal, message)
    }

    pub fn at(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.category.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]", self.category.label())?;
        if let Some(loc) = &self.location {
            write!(f, " {loc}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let category = match &e {
            CoreError::InvalidData(_) | CoreError::DegenerateRegressor { .. } | CoreError::DegenerateResiduals(_) => {
                Category::Data
            }
            CoreError::InvalidInput(_) | CoreError::InvalidBandwidth { .. } | CoreError::Orientation(_) => Category::Usage,
            CoreError::SelectorFailure(_)
            | CoreError::DegenerateWindow { .. }
            | CoreError::RankDeficient { .. }
            | CoreError::Initialization(_)
            | CoreError::EvidenceUndefined(_)
            | CoreError::UnstableEstimate(_)
            | CoreError::Evaluation { .. } => Category::SelectorFailed,
            CoreError::InternalInvariant(_) | CoreError::Io(_) => Category::Internal,
        };
        CliError::new(category, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
