use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("element {element} out of range for n={n} (set {set})")]
    IdOutOfRange { set: u32, element: u64, n: u32 },
    #[error("set {0} is empty (pass allow_empty to accept)")]
    EmptySet(u32),
    #[error("unknown set id {0}")]
    UnknownSetId(u32),
    #[error("instance is infeasible: element {0} is in no set")]
    Infeasible(u32),
    #[error("optimum exceeds budget {0}")]
    BudgetExceeded(usize),
    #[error("every guess failed to produce a cover")]
    AllGuessesFailed,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("begin_pass called while a pass is already open")]
    NestedPass,
    #[error("no pass is open")]
    NotInPass,
    #[error("ledger balance would become negative ({current} + {delta})")]
    NegativeBalance { current: i64, delta: i64 },
    #[error("sample is empty")]
    EmptySample,
    #[error("coordinate arithmetic overflow")]
    Overflow,
    #[error("shape kind '{0}' is not supported by the geometric solver")]
    UnsupportedShape(char),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
