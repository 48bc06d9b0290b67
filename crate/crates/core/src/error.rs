use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{what} of size {size} exceeds the configured cap of {cap}")]
    Capacity {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("swap set is not a matching over map edges: {0}")]
    InvalidMatching(String),

    #[error("mixer field vanishes on qubit {qubit} (hx = hb = 0)")]
    DegenerateMixer { qubit: usize },

    #[error("hyperedge {0:?} is not routable under the layout")]
    Routing(Vec<usize>),

    #[error("linear fit failed: {0}")]
    Fit(String),

    #[error("approximation ratio undefined for a zero reference energy")]
    UndefinedRatio,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
