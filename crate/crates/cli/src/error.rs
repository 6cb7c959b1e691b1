use serde::Serialize;

/// Process exit codes.
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error(transparent)]
    Core(#[from] currentflow::Error),
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    message: String,
    exit_code: u8,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn kind(&self) -> &'static str {
        use currentflow::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Solver(_) => "solver",
            CliError::Core(e) => match e {
                E::CgNotConverged { .. } | E::ProxNotConverged { .. } | E::StepFailed { .. } => "solver",
                E::Io(_) => "io",
                E::Format(_) => "format",
                _ => "usage",
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.kind() == "solver" {
            EXIT_SOLVER
        } else {
            EXIT_USAGE
        }
    }

    pub fn to_json(&self) -> String {
        let report = ErrorReport {
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        };
        serde_json::json!({ "error": report }).to_string()
    }
}
