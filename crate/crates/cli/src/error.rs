//! Failure classes and their exit codes.

use serde::Serialize;

/// Exit status for a configuration error.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status for a computational failure or a failed check.
pub const EXIT_FAILURE: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{module} failed: {message}")]
    Module { module: &'static str, kind: String, message: String },
    #[error("{module}: {message}")]
    Check { module: &'static str, message: String },
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

/// Serialized form written to `error.json`.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorDoc {
    pub exit_code: u8,
    pub class: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub module: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), message: message.into() }
    }

    /// Wraps a module error; `kind` is its variant chain, e.g. `Spec::TruncOrder`.
    pub fn module<E: std::fmt::Display + std::fmt::Debug>(module: &'static str, err: E) -> Self {
        CliError::Module { module, kind: variant_chain(&format!("{err:?}")), message: err.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }

    pub fn doc(&self) -> ErrorDoc {
        let (class, path, module, kind) = match self {
            CliError::Config { path, .. } => ("config", Some(path.clone()), None, None),
            CliError::Module { module, kind, .. } => ("module", None, Some(*module), Some(kind.clone())),
            CliError::Check { module, .. } => ("check", None, Some(*module), None),
            CliError::Output { path, .. } => ("output", Some(path.clone()), None, None),
        };
        let message = match self {
            CliError::Config { message, .. } | CliError::Module { message, .. } | CliError::Check { message, .. } => {
                message.clone()
            }
            other => other.to_string(),
        };
        ErrorDoc { exit_code: self.exit_code(), class, path, module, kind, message }
    }
}

/// Variants that only forward another module's error.
const WRAPPERS: &[&str] = &["Spec", "Series", "Geometry", "Mesh", "Linalg", "Expansion", "Solver", "Fit"];

/// Leading identifiers of a `Debug` rendering: `Spec(TruncOrder { k: 2, n: 2 })`
/// becomes `Spec::TruncOrder`.
fn variant_chain(debug: &str) -> String {
    let mut parts = Vec::new();
    let mut rest = debug;
    loop {
        let end = rest.find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(rest.len());
        if end == 0 {
            break;
        }
        let name = &rest[..end];
        parts.push(name);
        rest = &rest[end..];
        if !WRAPPERS.contains(&name) {
            break;
        }
        match rest.strip_prefix('(') {
            Some(r) => rest = r,
            None => break,
        }
    }
    parts.join("::")
}

#[cfg(test)]
mod tests {
    use super::variant_chain;

    #[test]
    fn variant_names() {
        assert_eq!(variant_chain("Spec(TruncOrder { k: 2, n: 2 })"), "Spec::TruncOrder");
        assert_eq!(variant_chain("NoStations"), "NoStations");
        assert_eq!(variant_chain("Linalg(Singular)"), "Linalg::Singular");
        assert_eq!(variant_chain("MaxIterations(SolveReport { iterations: 0 })"), "MaxIterations");
    }
}
