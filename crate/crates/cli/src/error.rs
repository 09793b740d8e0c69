use serde::Serialize;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl Violation {
    pub fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration rejected: {}", describe(.0))]
    Config(Vec<Violation>),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numerical(piezo_lab_core::Error),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("{failed} verification suite(s) failed")]
    Verification { failed: usize },
}

fn describe(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{}: {}", v.key, v.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl CliError {
    pub fn config(violations: Vec<Violation>) -> Self {
        CliError::Config(violations)
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// 1 for anything the caller can fix in the config or inputs, 2 for
    /// numerical failures, 3 when a verification suite fails.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification { .. } => 3,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Input(_) => "input",
            CliError::Numerical(_) => "numerical",
            CliError::Io { .. } => "io",
            CliError::Verification { .. } => "verification",
        };
        let mut v =
            json!({ "error": kind, "message": self.to_string(), "exit_code": self.exit_code() });
        if let CliError::Config(list) = self {
            v["violations"] = json!(list);
        }
        v
    }
}

impl From<piezo_lab_core::Error> for CliError {
    fn from(e: piezo_lab_core::Error) -> Self {
        use piezo_lab_core::Error as E;
        match e {
            E::InvalidParameters(list) => CliError::Config(
                list.into_iter()
                    .map(|m| Violation::new(m.split_whitespace().next().unwrap_or(""), m.clone()))
                    .collect(),
            ),
            E::TailGuard { .. } => CliError::Config(vec![Violation::new("window", e.to_string())]),
            E::InsufficientData { .. } => {
                CliError::Config(vec![Violation::new("fit_band", e.to_string())])
            }
            E::TooFewElements(_) => {
                CliError::Config(vec![Violation::new("n_elements", e.to_string())])
            }
            E::InvalidArgument(_)
            | E::DimensionMismatch { .. }
            | E::ClampViolation(_)
            | E::TipMismatch(_)
            | E::TooCoarse(_) => CliError::Input(e.to_string()),
            E::Singular { .. }
            | E::NotPositiveDefinite
            | E::NoConvergence { .. }
            | E::SingularShift { .. }
            | E::RootNotConverged { .. } => CliError::Numerical(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;
    use piezo_lab_core::Error as E;

    #[test]
    fn exit_codes_by_category() {
        let numerical = CliError::from(E::NotPositiveDefinite);
        assert_eq!(numerical.exit_code(), 2);
        assert_eq!(numerical.to_json()["error"], "numerical");
        assert_eq!(
            CliError::from(E::InvalidArgument("x".into())).exit_code(),
            1
        );
        assert_eq!(CliError::Verification { failed: 2 }.exit_code(), 3);
    }

    #[test]
    fn parameter_errors_keep_their_keys() {
        let err = CliError::from(E::InvalidParameters(vec![
            "rho must be > 0".into(),
            "beta must be > 0".into(),
        ]));
        let json = err.to_json();
        assert_eq!(json["exit_code"], 1);
        assert_eq!(json["violations"][0]["key"], "rho");
        assert_eq!(json["violations"][1]["key"], "beta");
        let guard = CliError::from(E::TailGuard {
            t1: 9.0,
            guard: 3.0,
        });
        assert!(matches!(guard, CliError::Config(ref v) if v[0].key == "window"));
    }
}
