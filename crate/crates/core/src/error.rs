use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("node {0} has no neighbors")]
    IsolatedNode(usize),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("network is not localizable: Fisher information has a {deficiency}-dimensional null space")]
    NotLocalizable { deficiency: usize },

    #[error("node {node} left the sanity box at iteration {iteration} (|coord| = {magnitude:e})")]
    Diverged {
        node: usize,
        iteration: usize,
        magnitude: f64,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("estimate/truth mismatch: {0} estimates for {1} nodes")]
    SizeMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;
