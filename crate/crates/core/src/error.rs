use thiserror::Error;

use crate::topology::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("phase error: {0}")]
    Phase(String),

    #[error("policy error: {0}")]
    Policy(String),

    #[error("capacity exceeded on edge {edge} in round {round}: {forwarded} > {capacity}")]
    Capacity {
        edge: NodeId,
        round: u64,
        forwarded: u32,
        capacity: u32,
    },

    #[error("adaptive pattern `{0}` evaluated without a configuration")]
    Adaptivity(&'static str),

    #[error("malformed plateau: {0}")]
    MalformedPlateau(String),

    #[error("checker `{checker}` failed in round {round} at ministep {ministep}: {details}")]
    CheckerViolation {
        checker: String,
        round: u64,
        ministep: u64,
        details: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
