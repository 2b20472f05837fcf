use std::path::PathBuf;

use thiserror::Error;

use crate::device::Edge;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}: parse error: {message}")]
    Parse { origin: String, message: String },

    /// A value violates a documented invariant. The message names the
    /// offending qubit, pair, or field.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("crosstalk pole on pair {0}: detuning equals anharmonicity")]
    CrosstalkPole(Edge),

    #[error("unknown gate duration for `{0}`")]
    UnknownDuration(&'static str),

    #[error("cz on {0} is not a coupling edge of the device")]
    NotAnEdge(Edge),

    #[error("missing calibration entry: {0}")]
    MissingCalibration(String),

    #[error("register of {needed} qubits exceeds the simulator cap of {cap}")]
    Capacity { needed: usize, cap: usize },

    #[error("channel acts on {expected} qubit(s) but {got} were given")]
    ArityMismatch { expected: usize, got: usize },

    #[error("qubit index {index} out of range for a register of {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("bit width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),

    #[error("benchmark `{label}` is not realizable: {reason}")]
    Unrealizable { label: String, reason: String },

    #[error("circuit `{label}`: {source}")]
    InCircuit {
        label: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(origin: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_circuit(label: impl Into<String>, source: Error) -> Self {
        Error::InCircuit {
            label: label.into(),
            source: Box::new(source),
        }
    }

    /// True for errors caused by bad input (files, parameters, circuits)
    /// rather than by a failure while computing.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::CrosstalkPole(_)
            | Error::UnknownDuration(_)
            | Error::NotAnEdge(_)
            | Error::MissingCalibration(_)
            | Error::WidthMismatch(..)
            | Error::Unrealizable { .. } => true,
            Error::Capacity { .. } | Error::ArityMismatch { .. } | Error::IndexOutOfRange { .. } => {
                false
            }
            Error::InCircuit { source, .. } => source.is_validation(),
        }
    }
}
