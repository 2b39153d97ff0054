use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use losr_core::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Unknown,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, residual: Option<f64>) -> Self {
        Self {
            name: name.into(),
            pass,
            residual,
        }
    }
}

/// What a subcommand produced before the report envelope is added.
pub struct Outcome {
    pub status: Status,
    pub checks: Vec<Check>,
    pub result: Value,
}

impl Outcome {
    /// Pass iff every check passes.
    pub fn from_checks(checks: Vec<Check>, result: Value) -> Self {
        let status = if checks.iter().all(|c| c.pass) {
            Status::Pass
        } else {
            Status::Fail
        };
        Self { status, checks, result }
    }

    pub fn info(result: Value) -> Self {
        Self {
            status: Status::Pass,
            checks: Vec::new(),
            result,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::Usage(_) => (2, "usage"),
            Error::Contract { .. } => (2, "contract"),
            Error::Precondition(_) => (2, "precondition"),
            Error::Numerical(_) => (3, "numerical"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            code: 2,
            kind: "malformed-input",
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
pub struct ErrorInfo {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs_digest: String,
    pub seed: u64,
    pub status: Status,
    pub checks: Vec<Check>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn exit_code(&self, err: Option<&CliError>) -> i32 {
        match (self.status, err) {
            (_, Some(e)) => e.code,
            (Status::Pass, _) => 0,
            (Status::Fail, _) => 1,
            (Status::Unknown, _) => 4,
            (Status::Error, _) => 2,
        }
    }
}

/// SHA-256 over the input files in order, each prefixed by its byte length.
pub fn digest_inputs(inputs: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}
