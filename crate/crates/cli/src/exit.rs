use std::fmt;

pub const SUCCESS: i32 = 0;
pub const FAILURE: i32 = 1;
pub const PARTIAL: i32 = 2;
pub const NOT_MEMBER: i32 = 3;
pub const USAGE: i32 = 64;
pub const DATA: i32 = 65;
pub const NO_INPUT: i32 = 66;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    MissingInput(String),
    Data(String),
    Io(std::io::Error),
    Core(schoensdr::Error),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => USAGE,
            CliError::MissingInput(_) => NO_INPUT,
            CliError::Data(_) => DATA,
            CliError::Io(_) | CliError::Core(_) => FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::MissingInput(m) => write!(f, "missing input: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<schoensdr::Error> for CliError {
    fn from(e: schoensdr::Error) -> Self {
        match e {
            schoensdr::Error::Parse { .. } => CliError::Data(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

/// Read a file, mapping a missing path to [`CliError::MissingInput`].
pub fn read_input(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingInput(path.display().to_string()),
        _ => CliError::Io(e),
    })
}
