//! Library surface of the workbench CLI: the JSON document format, the
//! report renderer, the search predicate language, exhaustive table search,
//! and the command implementations. The binary in `main.rs` is a thin clap
//! wrapper over [`commands`].

pub mod commands;
pub mod document;
pub mod predicate;
pub mod report;
pub mod search;

/// An error with its place in the exit-code contract already decided.
#[derive(Debug)]
pub struct CliError {
    pub exit: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: String) -> Self {
        CliError { exit: 3, message }
    }

    pub fn inconclusive(message: String) -> Self {
        CliError { exit: 2, message }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<finalg::Error> for CliError {
    fn from(e: finalg::Error) -> Self {
        CliError {
            exit: commands::classify_error(&e),
            message: e.to_string(),
        }
    }
}
