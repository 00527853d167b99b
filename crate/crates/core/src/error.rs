use thiserror::Error;

use crate::tech::{ConverterKind, GateKind};

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell library has no entry for gate kind {0}")]
    UnknownGate(GateKind),
    #[error("no interface cost entry for {kind} at {bits} bit(s)")]
    UnknownInterface { kind: ConverterKind, bits: u32 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("netlist parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("netlist contains a combinational cycle through `{0}`")]
    Cycle(String),
    #[error("generation refused: {0}")]
    Refused(String),
    #[error("BDD node budget of {0} nodes exceeded")]
    NodeBudget(usize),
    #[error("interface mismatch: {0}")]
    Interface(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("unresolved component: {0}")]
    Component(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
