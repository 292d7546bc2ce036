use std::fmt;
use std::path::Path;

/// Process exit codes.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success |
/// | 2 | bad command-line argument or parameter value |
/// | 3 | file could not be read or written |
/// | 4 | malformed input file or structurally invalid tree/cut |
/// | 5 | numerical evaluation failure or resource limit |
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const DATA: i32 = 4;
    pub const EVALUATION: i32 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: exit::USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: exit::DATA,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: exit::IO,
            message: format!("{}: {err}", path.display()),
        }
    }

    /// Prefixes the message with a path, keeping the code.
    pub fn in_file(self, path: &Path) -> Self {
        if self.code == exit::IO {
            return self;
        }
        Self {
            code: self.code,
            message: format!("{}: {}", path.display(), self.message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<treecut_core::Error> for CliError {
    fn from(err: treecut_core::Error) -> Self {
        use treecut_core::Error as E;
        let code = match &err {
            E::InvalidArgument(_) => exit::USAGE,
            E::Io { .. } => exit::IO,
            E::Parse(_) | E::Validation { .. } | E::Json(_) => exit::DATA,
            E::Evaluation(_) | E::ResourceLimit { .. } => exit::EVALUATION,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        Self::data(format!("json: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
