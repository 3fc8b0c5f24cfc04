//! Error-to-exit-code mapping.
//!
//! Exit codes are a stable contract: 0 success, 1 usage error, 2 data or
//! fit error, 3 infeasible scenario, 4 numeric failure. Library errors are
//! folded into these four buckets here so individual commands only decide
//! *what* failed, never which code that deserves.

use std::process::ExitCode;

use learncurve::{ConfigError, CurveError, DatasetError, ExpansionError, FitError, PwlError};

/// A failed run, tagged with its exit-code bucket.
#[derive(Debug)]
pub enum Failure {
    /// Flag combinations or values the parser cannot reject on its own.
    Usage(String),
    /// Bad input files, unparseable configs, or degenerate fits.
    Data(String),
    /// The scenario admits no feasible plan; carries the diagnosis.
    Infeasible { period: usize, detail: String },
    /// The solver broke down (node budget, unboundedness, ill conditioning).
    Numeric(String),
}

impl Failure {
    /// Reports the failure and converts it into the process exit code.
    ///
    /// Infeasibility is a result, not a malfunction: the diagnosis goes to
    /// stdout as JSON so callers can consume it like any other payload.
    pub fn exit(self) -> ExitCode {
        match self {
            Failure::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
            Failure::Data(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Failure::Infeasible { period, detail } => {
                let diagnosis = serde_json::json!({
                    "status": "infeasible",
                    "period": period,
                    "detail": detail,
                });
                println!("{diagnosis}");
                ExitCode::from(3)
            }
            Failure::Numeric(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(4)
            }
        }
    }
}

impl From<ExpansionError> for Failure {
    fn from(e: ExpansionError) -> Self {
        match e {
            ExpansionError::Infeasible { period, detail } => {
                Failure::Infeasible { period, detail }
            }
            ExpansionError::Milp(_) | ExpansionError::Unbounded => Failure::Numeric(e.to_string()),
            ExpansionError::Incomplete { .. } => Failure::Numeric(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<CurveError> for Failure {
    fn from(e: CurveError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<PwlError> for Failure {
    fn from(e: PwlError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.to_string())
    }
}
