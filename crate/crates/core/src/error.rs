use std::path::PathBuf;

use thiserror::Error;

use crate::audit::AuditReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter constraint violated: {0}")]
    Validation(String),

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("audit `{}` failed: slack {:.3e} at k={}, eta={}, t={}",
        .0.audit_name, .0.min_slack, .0.argmin_k, .0.argmin_eta, .0.argmin_t)]
    AuditFailure(Box<AuditReport>),

    #[error("step size collapsed to {step:.3e} at t={time}")]
    StepFailure { time: f64, step: f64 },

    #[error("verification clause ({clause}) violated at t={time}: {detail}")]
    VerificationFailure {
        clause: &'static str,
        time: f64,
        detail: String,
    },

    #[error("H^N norm {norm:.3e} exceeded ceiling {ceiling:.3e} at t={time}")]
    BlowupDetected { time: f64, norm: f64, ceiling: f64 },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("bisection failed for nu={nu}: eps_lo={eps_lo} ({lo}), eps_hi={eps_hi} ({hi})")]
    BisectFailure {
        nu: f64,
        eps_lo: f64,
        eps_hi: f64,
        lo: String,
        hi: String,
    },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
