//! Configuration files, the fixture catalog and run orchestration behind
//! the `qecheck` binary.

mod catalog;
mod config;
mod run;

pub use catalog::{catalog, catalog_names, Fixture, FIXTURES};
pub use config::{
    default_tolerance, instantiate, load_config, parse_config, CheckSpec, InstanceSpec, OutputFormat, OutputSpec, PotentialKind,
    PotentialSpec, RunConfig, SampleSpec, CHECK_NAMES,
};
pub use run::{render_text, run, Entry, RunReport, ENGINE_VERSION};

use thiserror::Error;

use config::{line_col, locate, Issue};

/// Errors that stop a run before any check executes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at {pointer} (line {line}, column {column}): {message}")]
    Schema { pointer: String, message: String, line: usize, column: usize },
    #[error("expression error at {pointer} (line {line}, column {column}): {message}")]
    Expression { pointer: String, message: String, line: usize, column: usize, span: (usize, usize) },
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
}

impl ConfigError {
    /// Line and column are 0 when the configuration has no source text.
    pub(crate) fn from_issue(issue: Issue, src: Option<&str>) -> ConfigError {
        let pointer: String = issue.pointer.iter().map(|p| format!("/{}", p)).collect();
        let at = src.and_then(|s| locate(s, &issue.pointer).map(|off| (s, off)));
        match issue.span {
            Some(span) => {
                let (line, column) = at.map_or((0, 0), |(s, off)| line_col(s, off + 1 + span.0));
                ConfigError::Expression { pointer, message: issue.message, line, column, span }
            }
            None => {
                let (line, column) = at.map_or((0, 0), |(s, off)| line_col(s, off));
                ConfigError::Schema { pointer, message: issue.message, line, column }
            }
        }
    }
}
