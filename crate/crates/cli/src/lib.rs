//! Library surface of the `clusternet` experiment runner, exposed so the
//! integration and acceptance suites can drive commands in-process.

pub mod commands;
pub mod config;
pub mod plot;

/// CLI failure classes, mapped one-to-one onto exit codes:
/// config errors exit 1, graph/structure errors exit 2, numerical errors 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Graph(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Graph(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Graph(msg) => write!(f, "graph error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numerical error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
