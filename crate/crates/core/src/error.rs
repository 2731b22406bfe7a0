use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("aig parse error at line {line}: {msg}")]
    AigParse { line: usize, msg: String },

    #[error("sequential element unsupported (line {line})")]
    Sequential { line: usize },

    #[error("dimacs error at line {line}: {msg}")]
    Dimacs { line: usize, msg: String },

    #[error("error bits unannotated")]
    ErrorBitsUnannotated,

    #[error("invalid netlist: {0}")]
    Netlist(String),

    #[error("invalid circuit spec: {0}")]
    Spec(String),

    #[error("input arity mismatch: exact circuit has {exact} inputs, approximate has {approx}")]
    ArityMismatch { exact: usize, approx: usize },

    #[error("partition {part} exceeds the enumeration cap of 2^{cap_log2} assignments; lower the clause limit")]
    EnumerationCap { part: usize, cap_log2: u32 },

    #[error("factor product would exceed {cap} rows")]
    ProductCap { cap: usize },

    #[error("{needed} queries needed but the budget is {budget}; restrict the range")]
    QueryBudget { needed: u128, budget: u128 },

    #[error("{n} inputs exceed the oracle cap of {cap}")]
    OracleCap { n: usize, cap: usize },

    #[error("no metrics requested")]
    NoMetrics,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
