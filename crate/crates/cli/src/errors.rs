//! Error classes of the command-line tool and their one-line codes.

use std::fmt;
use std::path::PathBuf;

use codemix::corpus::CorpusError;
use codemix::eval::EvalError;
use codemix::io::BinaryError;
use codemix::langid::LidError;
use codemix::models::ModelError;
use codemix::pipeline::PipelineError;
use codemix::providers::{CacheError, ProviderError};
use codemix::translit::TranslitError;

/// Bad or conflicting arguments.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug)]
pub struct MissingInput(pub PathBuf);

impl fmt::Display for MissingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Error code and exit status. Invocation problems exit 2 and win over
/// everything else; otherwise the deepest recognised cause names the code.
pub fn classify(err: &anyhow::Error) -> (&'static str, i32) {
    let mut code = "E_RUNTIME";
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return ("E_USAGE", 2);
        }
        if cause.is::<MissingInput>() {
            return ("E_INPUT", 2);
        }
        if cause.is::<ConfigError>() {
            return ("E_CONFIG", 2);
        }
        let found = if cause.is::<CorpusError>() {
            "E_CORPUS"
        } else if cause.is::<TranslitError>() {
            "E_TRANSLIT"
        } else if cause.is::<LidError>() {
            "E_LID"
        } else if cause.is::<ProviderError>() || cause.is::<CacheError>() {
            "E_PROVIDER"
        } else if cause.is::<PipelineError>() {
            "E_PIPELINE"
        } else if cause.is::<ModelError>() || cause.is::<BinaryError>() {
            "E_MODEL"
        } else if cause.is::<EvalError>() {
            "E_EVAL"
        } else if cause.is::<std::io::Error>() {
            "E_IO"
        } else {
            continue;
        };
        code = found;
    }
    (code, 1)
}

/// `error[CODE]: message` on a single line.
pub fn render(err: &anyhow::Error) -> (String, i32) {
    let (code, status) = classify(err);
    let msg = format!("{err:#}").replace(['\n', '\r'], " ");
    (format!("error[{code}]: {msg}"), status)
}
