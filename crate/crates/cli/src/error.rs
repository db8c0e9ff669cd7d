use std::fmt;

/// Failure of one command. The variant fixes the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration and input files: exit 2.
    Config(String),
    /// Anything that goes wrong after the inputs were accepted: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn config(m: impl fmt::Display) -> Self {
        Self::Config(m.to_string())
    }

    pub fn runtime(m: impl fmt::Display) -> Self {
        Self::Runtime(m.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
